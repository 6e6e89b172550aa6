"""Noisy projected gradient descent on the convex objective.

Gaussian noise is added to the w-gradient and the private-weight gradient
only; the public-weight block stays noiseless.  Each block has its own step
size and the returned point is the uniform average of the iterates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    AdaptDataset,
    AdaptationResult,
    FeasiblePoint,
    LossModel,
    PrivacyBudget,
    RegularizerConfig,
    is_feasible,
    reference_point,
)
from .convex_objective import ConvexObjectiveContext, eval_F, grad_F, project
from .mechanisms import NoiseSchedule, calibrate, derive_rng, gaussian_vector

DEFAULT_T_CEILING = 200_000


@dataclass
class ConvexRunConfig:
    T: int
    step_w: float | None = None
    step_u_pub: float | None = None
    step_u_priv: float | None = None
    init: FeasiblePoint | None = None
    seed: int = 0
    record_objective_every: int = 0


def default_step_sizes(model: LossModel, cfg: RegularizerConfig,
                       schedule: NoiseSchedule, m: int, n: int, d: int):
    """Per-block step sizes matched to the gradient-norm bounds and the
    injected noise levels."""
    B = model.B
    b_bar = cfg.b_bar(B)
    T = schedule.T
    a, om = cfg.alpha, 1.0 - cfg.alpha
    eta_w = model.lam / math.sqrt(T * (model.G ** 2 + d * schedule.sigma1 ** 2))
    eta_u_pub = m ** 1.5 / (math.sqrt(T) * a ** 2 * (B + b_bar))
    eta_u_priv = n ** 1.5 / math.sqrt(T * (om ** 4 * b_bar ** 2 + n ** 4 * schedule.sigma2 ** 2))
    return eta_w, eta_u_pub, eta_u_priv


def default_T_convex(n: int, m: int, d: int, alpha: float, eps_opt: float,
                     delta: float, B: float, b_bar: float,
                     ceiling: int = DEFAULT_T_CEILING) -> int:
    """Smallest iteration count satisfying the convergence analysis,
    capped by a configurable ceiling (the analytic lower bound grows like
    (eps*n)^2 and is impractical at desk scale)."""
    if delta >= 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if math.isinf(eps_opt):
        return ceiling
    log_term = math.log(1.0 / delta)
    terms = [
        1.0,
        n ** 2 * eps_opt ** 2 / (d * (1.0 - alpha) ** 2 * log_term),
        b_bar ** 2 * eps_opt ** 2 / (B ** 2 * log_term),
        eps_opt ** 2 * b_bar ** 2 * n ** 3 / (log_term * B ** 2 * m ** 3),
    ]
    return int(min(math.ceil(max(terms)), ceiling))


def fit_convex(data: AdaptDataset, budget: PrivacyBudget, reg: RegularizerConfig,
               run: ConvexRunConfig, model: LossModel, d_dp: float = 0.0,
               rng: np.random.Generator | None = None) -> AdaptationResult:
    """Run T noisy projected gradient steps on the convex objective and
    return the averaged iterate."""
    if run.T < 1:
        raise ValueError("T must be >= 1")
    ctx = ConvexObjectiveContext(data, d_dp, reg, model)
    m, n, d = data.m, data.n, data.d
    lam, alpha = model.lam, reg.alpha

    p = run.init if run.init is not None else reference_point(alpha, m, n, d)
    if not is_feasible(p, lam, alpha, m, n):
        raise ValueError("initial point is infeasible")
    if rng is None:
        rng = derive_rng(run.seed, "fit-convex")

    schedule = calibrate(budget, alpha, model.G, model.B, n, run.T)
    eta_w, eta_pub, eta_priv = default_step_sizes(model, reg, schedule, m, n, d)
    if run.step_w is not None:
        eta_w = run.step_w
    if run.step_u_pub is not None:
        eta_pub = run.step_u_pub
    if run.step_u_priv is not None:
        eta_priv = run.step_u_priv

    sum_w = np.zeros(d)
    sum_pub = np.zeros(m)
    sum_priv = np.zeros(n)
    traj = []
    for t in range(run.T):
        g_w, g_pub, g_priv = grad_F(ctx, p)
        z = gaussian_vector(d, schedule.sigma1, rng)
        z2 = gaussian_vector(n, schedule.sigma2, rng)
        p = project(
            p.w - eta_w * (g_w + z),
            p.u_pub - eta_pub * g_pub,
            p.u_priv - eta_priv * (g_priv + z2),
            lam, alpha, m, n,
        )
        sum_w += p.w
        sum_pub += p.u_pub
        sum_priv += p.u_priv
        if run.record_objective_every and (t + 1) % run.record_objective_every == 0:
            traj.append((t + 1, eval_F(ctx, p)))

    avg = project(sum_w / run.T, sum_pub / run.T, sum_priv / run.T, lam, alpha, m, n)
    return AdaptationResult(
        point=avg,
        objective_value=eval_F(ctx, avg),
        privacy_spent=(budget.epsilon_opt, budget.delta if budget.is_private else 0.0),
        T_used=run.T,
        trajectory_stats=traj,
    )
