"""Dataset ingestion, rescaling to the bounded-norm geometry, target
resampling, and synthetic domain-shift generation.

CSV schema: header ``f0,...,f{d-1},label,domain`` with domain values
``source`` / ``target``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .core import AdaptDataset


@dataclass(frozen=True)
class DatasetManifest:
    path: str
    feature_columns: list[str] | None = None  # None -> every f* column
    label_column: str = "label"
    domain_column: str = "domain"
    r_target: float = 1.0

    def __post_init__(self):
        if self.r_target <= 0:
            raise ValueError("r_target must be positive")


@dataclass(frozen=True)
class SyntheticShiftSpec:
    """Source/target mixture of a shared Gaussian and the uniform ball.

    Each source point is Gaussian with probability
    ``source_gaussian_fraction`` and otherwise uniform on the radius-r
    ball; likewise the target with ``target_gaussian_fraction``.  Labels
    come from a hidden weight vector.
    """

    d: int
    base_mean: np.ndarray | None = None
    base_cov: np.ndarray | None = None
    source_gaussian_fraction: float = 0.95
    target_gaussian_fraction: float = 0.05
    label_rule: str = "linear_regression"
    noise_std: float = 0.0
    r: float = 1.0

    def __post_init__(self):
        for frac in (self.source_gaussian_fraction, self.target_gaussian_fraction):
            if not 0.0 <= frac <= 1.0:
                raise ValueError("mixture fractions must lie in [0, 1]")
        if self.label_rule not in ("linear_regression", "linear_classification"):
            raise ValueError(f"unknown label_rule {self.label_rule!r}")
        if self.d < 1:
            raise ValueError("d must be >= 1")


def _uniform_ball(rng: np.random.Generator, count: int, d: int, r: float) -> np.ndarray:
    g = rng.standard_normal((count, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    radii = r * rng.random(count) ** (1.0 / d)
    return g * radii[:, None]


def _draw_domain(spec: SyntheticShiftSpec, count: int, gaussian_fraction: float,
                 rng: np.random.Generator) -> np.ndarray:
    mean = (np.zeros(spec.d) if spec.base_mean is None
            else np.asarray(spec.base_mean, dtype=float))
    cov = (np.eye(spec.d) if spec.base_cov is None
           else np.asarray(spec.base_cov, dtype=float))
    from_gaussian = rng.random(count) < gaussian_fraction
    x = _uniform_ball(rng, count, spec.d, spec.r)
    k = int(from_gaussian.sum())
    if k:
        x[from_gaussian] = rng.multivariate_normal(mean, cov, size=k)
    return x


def _labels(spec: SyntheticShiftSpec, x: np.ndarray, w_star: np.ndarray,
            rng: np.random.Generator) -> np.ndarray:
    raw = x @ w_star
    if spec.label_rule == "linear_classification":
        y = np.where(raw >= 0.0, 1.0, -1.0)
    else:
        if spec.noise_std > 0:
            raw = raw + spec.noise_std * rng.standard_normal(len(raw))
        y = np.clip(raw, -1.0, 1.0)
    return y


def generate_synthetic(spec: SyntheticShiftSpec, m: int, n: int,
                       rng: np.random.Generator) -> tuple[AdaptDataset, np.ndarray]:
    """Draw an (m public, n private) dataset; returns it with the hidden w*."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    w_star = rng.standard_normal(spec.d)
    w_star /= max(np.linalg.norm(w_star), 1e-12)
    xs = _draw_domain(spec, m, spec.source_gaussian_fraction, rng)
    xt = _draw_domain(spec, n, spec.target_gaussian_fraction, rng)
    # Rescale globally so every row respects the bounded-norm geometry.
    top = max(np.linalg.norm(xs, axis=1).max(), np.linalg.norm(xt, axis=1).max())
    if top > spec.r:
        xs = xs * (spec.r / top)
        xt = xt * (spec.r / top)
    ys = _labels(spec, xs, w_star, rng)
    yt = _labels(spec, xt, w_star, rng)
    return AdaptDataset(xs, ys, xt, yt), w_star


def load_dataset(manifest: DatasetManifest) -> AdaptDataset:
    """Read a CSV, route rows by domain, and rescale features globally so
    the max row norm equals ``r_target``; regression labels are clipped
    to [-1, 1] with a warning."""
    with open(manifest.path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{manifest.path}: empty file")
        header = list(reader.fieldnames)
        if manifest.feature_columns is None:
            feat_cols = [c for c in header
                         if c not in (manifest.label_column, manifest.domain_column)]
        else:
            feat_cols = list(manifest.feature_columns)
        for col in feat_cols + [manifest.label_column, manifest.domain_column]:
            if col not in header:
                raise ValueError(f"{manifest.path}: missing column {col!r}")
        xs, ys, xt, yt = [], [], [], []
        for i, row in enumerate(reader):
            try:
                feats = [float(row[c]) for c in feat_cols]
                label = float(row[manifest.label_column])
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{manifest.path}: non-numeric cell in row {i}: {exc}")
            domain = row[manifest.domain_column]
            if domain == "source":
                xs.append(feats)
                ys.append(label)
            elif domain == "target":
                xt.append(feats)
                yt.append(label)
            else:
                raise ValueError(
                    f"{manifest.path}: row {i}: domain must be 'source' or "
                    f"'target', got {domain!r}")
    if not xs or not xt:
        raise ValueError(f"{manifest.path}: need at least one source and one target row")
    xs, xt = np.asarray(xs, float), np.asarray(xt, float)
    ys, yt = np.asarray(ys, float), np.asarray(yt, float)
    top = max(np.linalg.norm(xs, axis=1).max(), np.linalg.norm(xt, axis=1).max())
    if top > 0:
        scale = manifest.r_target / top
        xs, xt = xs * scale, xt * scale
    clipped = int((np.abs(ys) > 1).sum() + (np.abs(yt) > 1).sum())
    if clipped:
        warnings.warn(f"{clipped} label(s) outside [-1, 1] were clipped")
        ys, yt = np.clip(ys, -1.0, 1.0), np.clip(yt, -1.0, 1.0)
    return AdaptDataset(xs, ys, xt, yt)


def resample_target(data: AdaptDataset, n_new: int,
                    rng: np.random.Generator) -> AdaptDataset:
    """Bootstrap the private sample to size n_new; public sample unchanged."""
    if n_new < 1:
        raise ValueError("n_new must be >= 1")
    idx = rng.integers(0, data.n, size=n_new)
    return AdaptDataset(data.public_x, data.public_y,
                        data.private_x[idx], data.private_y[idx])


def write_csv(data: AdaptDataset, path: str) -> None:
    d = data.d
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j}" for j in range(d)] + ["label", "domain"])
        for x, y in zip(data.public_x, data.public_y):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y)), "source"])
        for x, y in zip(data.private_x, data.private_y):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y)), "target"])
