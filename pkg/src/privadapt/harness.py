"""Experiment sweeps over the (epsilon, target-size) grid.

Each grid cell (epsilon-index, n-index, trial) owns derived RNG substreams.
Both the data draw and the noise stream are keyed by (n-index, trial) only,
so along the privacy axis every epsilon sees the same data and the same
standardized noise draws, merely rescaled by its own sigma — common random
numbers that make per-trial utility nearly monotone in the budget.  Reruns
with the same master seed produce byte-identical record output.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import baselines
from .baselines import fit_baseline
from .convex_solver import ConvexRunConfig, default_T_convex, fit_convex
from .core import (
    AdaptDataset,
    LossModel,
    PrivacyBudget,
    RegularizerConfig,
    SQUARED,
    non_private,
)
from .data_io import (
    DatasetManifest,
    SyntheticShiftSpec,
    generate_synthetic,
    load_dataset,
    resample_target,
)
from .discrepancy import discrepancy_dca, discrepancy_grid
from .mechanisms import derive_rng, privatize_discrepancy
from .nonconvex_solver import (
    NonConvexRunConfig,
    default_T_nonconvex,
    fit_nonconvex,
)
from .nonconvex_objective import NonConvexContext, smoothness_beta_bar, uniform_bound_M

CONVEX = "convex"
NONCONVEX = "nonconvex"
ALGORITHMS = (CONVEX, NONCONVEX) + baselines.KINDS

RELATIVE_MSE = "relative_mse"
ACCURACY = "accuracy"


@dataclass
class SweepSpec:
    dataset: SyntheticShiftSpec | DatasetManifest
    algorithm: str
    epsilons: list[float]
    target_sizes: list[int]
    trials: int
    master_seed: int
    model: LossModel
    reg: RegularizerConfig = field(default_factory=RegularizerConfig)
    metric: str = RELATIVE_MSE
    delta: float = 0.01
    disc_fraction: float = 0.5
    T: int | None = None  # None -> analytic default per cell
    baseline_T: int = 2000  # steps for the reference target-only fit
    d_hat: float | str = "dca"  # "dca" | "grid" | a fixed value in [0, B]
    m: int = 1000  # synthetic public-sample size
    test_size: int = 1000  # held-out target points per cell

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.metric not in (RELATIVE_MSE, ACCURACY):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.epsilons or not self.target_sizes:
            raise ValueError("epsilons and target_sizes must be non-empty")
        for eps in self.epsilons:
            if eps <= 0:
                raise ValueError("epsilons must be positive (inf allowed)")


@dataclass
class SweepResult:
    records: list[dict]
    aggregates: list[dict]
    wall_time: float


class SweepCellError(RuntimeError):
    def __init__(self, epsilon, n, trial, cause):
        super().__init__(f"sweep cell (epsilon={epsilon}, n={n}, trial={trial}) "
                         f"failed: {cause}")
        self.key = (epsilon, n, trial)
        self.cause = cause


def _cell_data(spec: SweepSpec, base: AdaptDataset | None, n: int,
               n_idx: int, trial: int):
    """Training data plus a held-out target test split for one cell."""
    rng = derive_rng(spec.master_seed, "data", n_idx, trial)
    if isinstance(spec.dataset, SyntheticShiftSpec):
        full, _ = generate_synthetic(spec.dataset, spec.m, n + spec.test_size, rng)
        train = AdaptDataset(full.public_x, full.public_y,
                             full.private_x[:n], full.private_y[:n])
        test_x, test_y = full.private_x[n:], full.private_y[n:]
    else:
        if base.n <= spec.test_size:
            raise ValueError("target sample too small for the requested test split")
        perm = rng.permutation(base.n)
        test_idx, pool_idx = perm[:spec.test_size], perm[spec.test_size:]
        pool = AdaptDataset(base.public_x, base.public_y,
                            base.private_x[pool_idx], base.private_y[pool_idx])
        train = resample_target(pool, n, rng)
        test_x, test_y = base.private_x[test_idx], base.private_y[test_idx]
    return train, test_x, test_y


def _test_metric(spec: SweepSpec, w: np.ndarray, test_x, test_y) -> float:
    if spec.metric == ACCURACY:
        return float(np.mean(np.where(test_x @ w >= 0.0, 1.0, -1.0) == test_y))
    return float(np.mean((test_x @ w - test_y) ** 2))


def _reference_fit(spec: SweepSpec, train: AdaptDataset, n_idx: int, trial: int):
    rng = derive_rng(spec.master_seed, "reference", n_idx, trial)
    return fit_baseline(baselines.TARGET_ONLY, train, spec.model,
                        T=spec.baseline_T, rng=rng)


def _raw_d_hat(spec: SweepSpec, train: AdaptDataset) -> float:
    if isinstance(spec.d_hat, (int, float)):
        return float(spec.d_hat)
    if spec.d_hat == "dca":
        return discrepancy_dca(train, spec.model).d_hat
    if spec.d_hat == "grid":
        return discrepancy_grid(train, spec.model).d_hat
    raise ValueError(f"unknown d_hat policy {spec.d_hat!r}")


def _cell_T(spec: SweepSpec, budget: PrivacyBudget, train: AdaptDataset) -> int:
    if spec.T is not None:
        return spec.T
    model, reg = spec.model, spec.reg
    if spec.algorithm == NONCONVEX:
        ctx = NonConvexContext(train, 0.0, reg, model)
        return default_T_nonconvex(train.n, train.d, reg.alpha, budget.epsilon_opt,
                                   budget.delta, model.G, model.B,
                                   smoothness_beta_bar(ctx), uniform_bound_M(ctx))
    return default_T_convex(train.n, train.m, train.d, reg.alpha,
                            budget.epsilon_opt, budget.delta, model.B,
                            reg.b_bar(model.B))


def _run_cell(spec: SweepSpec, base, eps: float, n: int, eps_idx: int,
              n_idx: int, trial: int, ref_cache: dict | None = None) -> dict:
    train, test_x, test_y = _cell_data(spec, base, n, n_idx, trial)
    budget = (non_private(spec.delta) if math.isinf(eps)
              else PrivacyBudget(eps, spec.delta, spec.disc_fraction))
    noise_rng = derive_rng(spec.master_seed, "noise", n_idx, trial)

    if spec.algorithm in (CONVEX, NONCONVEX):
        d_dp = privatize_discrepancy(
            min(max(_raw_d_hat(spec, train), 0.0), spec.model.B),
            spec.model.B, budget.epsilon_disc, train.n, noise_rng)
        T = _cell_T(spec, budget, train)
        if spec.algorithm == CONVEX:
            result = fit_convex(train, budget, spec.reg, ConvexRunConfig(T=T),
                                spec.model, d_dp=d_dp, rng=noise_rng)
        else:
            result = fit_nonconvex(train, budget, spec.reg, NonConvexRunConfig(T=T),
                                   spec.model, d_dp=d_dp, rng=noise_rng)
    elif spec.algorithm == baselines.TARGET_ONLY:
        # same fit as the relative-MSE denominator, so the ratio is exactly 1
        result = _reference_fit(spec, train, n_idx, trial)
    else:
        T = spec.T if spec.T is not None else spec.baseline_T
        result = fit_baseline(spec.algorithm, train, spec.model, T=T,
                              budget=budget, alpha=spec.reg.alpha, rng=noise_rng)

    value = _test_metric(spec, result.point.w, test_x, test_y)
    if spec.metric == RELATIVE_MSE:
        if spec.algorithm == baselines.TARGET_ONLY:
            value = 1.0
        else:
            key = (n_idx, trial)
            if ref_cache is not None and key in ref_cache:
                denom = ref_cache[key]
            else:
                ref = _reference_fit(spec, train, n_idx, trial)
                denom = _test_metric(spec, ref.point.w, test_x, test_y)
                if ref_cache is not None:
                    ref_cache[key] = denom
            value = value / denom if denom > 0 else math.inf

    rec = {
        "epsilon": eps,
        "n": n,
        "seed": trial,
        "metric_value": value,
        "objective_value": result.objective_value,
        "T_used": result.T_used,
    }
    if result.grad_mapping_norm is not None:
        rec["grad_mapping_norm"] = result.grad_mapping_norm
    return rec


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Run every (epsilon, n, trial) cell and aggregate per (epsilon, n).

    Deterministic given the master seed; cells are independent and keyed,
    so any execution order yields the same records.
    """
    t0 = time.perf_counter()
    base = None
    if isinstance(spec.dataset, DatasetManifest):
        base = load_dataset(spec.dataset)

    records = []
    ref_cache: dict = {}
    for eps_idx, eps in enumerate(spec.epsilons):
        for n_idx, n in enumerate(spec.target_sizes):
            for trial in range(spec.trials):
                try:
                    records.append(
                        _run_cell(spec, base, eps, n, eps_idx, n_idx, trial,
                                  ref_cache))
                except Exception as exc:
                    raise SweepCellError(eps, n, trial, exc) from exc

    aggregates = []
    for eps in spec.epsilons:
        for n in spec.target_sizes:
            vals = np.array([r["metric_value"] for r in records
                             if r["epsilon"] == eps and r["n"] == n])
            aggregates.append({
                "epsilon": eps,
                "n": n,
                "count": int(vals.size),
                "metric_mean": float(vals.mean()),
                "metric_std": float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
            })
    return SweepResult(records, aggregates, time.perf_counter() - t0)


def emit_results(result: SweepResult, path: str) -> None:
    """JSON lines: one record per line, then a trailing aggregate object.

    Timing lives only in the trailing object so the records section is
    byte-identical across reruns.  A CSV projection of the aggregates is
    written next to the JSONL file for plotting.
    """
    with open(path, "w") as fh:
        for rec in result.records:
            fh.write(json.dumps(rec) + "\n")
        fh.write(json.dumps({"aggregates": result.aggregates,
                             "wall_time": result.wall_time}) + "\n")
    csv_path = path + ".csv"
    with open(csv_path, "w") as fh:
        fh.write("epsilon,n,count,metric_mean,metric_std\n")
        for a in result.aggregates:
            fh.write(f"{a['epsilon']},{a['n']},{a['count']},"
                     f"{a['metric_mean']!r},{a['metric_std']!r}\n")


def read_results(path: str) -> SweepResult:
    """Parse a file written by emit_results."""
    with open(path) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or "aggregates" not in lines[-1]:
        raise ValueError(f"{path}: missing trailing aggregate object")
    tail = lines[-1]
    return SweepResult(lines[:-1], tail["aggregates"], tail.get("wall_time", 0.0))


def spec_from_config(cfg: dict) -> SweepSpec:
    """Build a SweepSpec from a plain JSON-style mapping (the CLI config)."""
    if "synthetic" in cfg:
        dataset = SyntheticShiftSpec(**cfg["synthetic"])
    elif "csv" in cfg:
        dataset = DatasetManifest(**cfg["csv"])
    else:
        raise ValueError("config needs a 'synthetic' or 'csv' dataset section")
    model_cfg = dict(cfg.get("model", {}))
    model = LossModel(kind=model_cfg.get("kind", SQUARED),
                      r=model_cfg.get("r", 1.0),
                      lam=model_cfg.get("lam", 1.0))
    reg = RegularizerConfig(**cfg.get("reg", {}))
    epsilons = [math.inf if e in ("inf", "Infinity") else float(e)
                for e in cfg["epsilons"]]
    kwargs = {k: cfg[k] for k in ("metric", "delta", "disc_fraction", "T",
                                  "baseline_T", "d_hat", "m", "test_size")
              if k in cfg}
    return SweepSpec(dataset=dataset, algorithm=cfg["algorithm"],
                     epsilons=epsilons,
                     target_sizes=[int(v) for v in cfg["target_sizes"]],
                     trials=int(cfg["trials"]),
                     master_seed=int(cfg["master_seed"]),
                     model=model, reg=reg, **kwargs)
