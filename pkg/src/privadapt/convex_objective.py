"""The reparameterized jointly convex adaptation objective.

With reciprocal weights u_i = 1/q_i, the weighted empirical loss becomes a
sum of quadratic-over-linear terms, jointly convex in (w, u) over the box
u_pub >= m/alpha, u_priv >= n/(1-alpha) and the ball ||w|| <= Lambda.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    AdaptDataset,
    FeasiblePoint,
    LossModel,
    RegularizerConfig,
    SQUARED,
    is_feasible,
    loss_grads,
    loss_values,
)


@dataclass(frozen=True)
class ConvexObjectiveContext:
    data: AdaptDataset
    d_dp: float
    config: RegularizerConfig
    model: LossModel

    def __post_init__(self):
        if self.model.kind != SQUARED:
            raise ValueError("the convex objective requires the squared loss")
        if not (0.0 <= self.d_dp <= self.model.B + 1e-9):
            raise ValueError("d_dp must lie in [0, B]")
        self.data.check_feature_bound(self.model.r)


def _check_feasible(ctx, p: FeasiblePoint):
    if not is_feasible(p, ctx.model.lam, ctx.config.alpha, ctx.data.m, ctx.data.n):
        raise ValueError("point violates the feasible set")


def _per_sample_numerators(ctx, w):
    lp = loss_values(ctx.model, w, ctx.data.public_x, ctx.data.public_y) + ctx.d_dp
    lq = loss_values(ctx.model, w, ctx.data.private_x, ctx.data.private_y)
    return lp, lq


def eval_F(ctx: ConvexObjectiveContext, p: FeasiblePoint) -> float:
    _check_feasible(ctx, p)
    cfg = ctx.config
    m, n = ctx.data.m, ctx.data.n
    num_pub, num_priv = _per_sample_numerators(ctx, p.w)
    val = float(np.sum(num_pub / p.u_pub) + np.sum(num_priv / p.u_priv))
    if cfg.kappa1 > 0:
        bracket = ((cfg.alpha / m) ** 2 * p.u_pub.sum()
                   + ((1.0 - cfg.alpha) / n) ** 2 * p.u_priv.sum() - 1.0)
        val += cfg.kappa1 * bracket
    if cfg.kappa2 > 0:
        inv_sq = np.sum(1.0 / p.u_pub ** 2) + np.sum(1.0 / p.u_priv ** 2)
        val += cfg.kappa2 * np.sqrt(inv_sq)
    if cfg.kappa_inf > 0:
        val += cfg.kappa_inf / min(p.u_pub.min(), p.u_priv.min())
    return val


def grad_F(ctx: ConvexObjectiveContext, p: FeasiblePoint):
    """Block gradients (g_w, g_u_pub, g_u_priv).

    The kappa_inf subgradient puts full mass on the lowest-index minimizer
    of u over the concatenated (u_pub, u_priv) vector.
    """
    _check_feasible(ctx, p)
    cfg = ctx.config
    m, n = ctx.data.m, ctx.data.n
    num_pub, num_priv = _per_sample_numerators(ctx, p.w)

    gp = loss_grads(ctx.model, p.w, ctx.data.public_x, ctx.data.public_y)
    gq = loss_grads(ctx.model, p.w, ctx.data.private_x, ctx.data.private_y)
    g_w = gp.T @ (1.0 / p.u_pub) + gq.T @ (1.0 / p.u_priv)

    g_u_pub = -num_pub / p.u_pub ** 2
    g_u_priv = -num_priv / p.u_priv ** 2
    if cfg.kappa1 > 0:
        g_u_pub = g_u_pub + cfg.kappa1 * (cfg.alpha / m) ** 2
        g_u_priv = g_u_priv + cfg.kappa1 * ((1.0 - cfg.alpha) / n) ** 2
    if cfg.kappa2 > 0:
        root = np.sqrt(np.sum(1.0 / p.u_pub ** 2) + np.sum(1.0 / p.u_priv ** 2))
        g_u_pub = g_u_pub - cfg.kappa2 / (p.u_pub ** 3 * root)
        g_u_priv = g_u_priv - cfg.kappa2 / (p.u_priv ** 3 * root)
    if cfg.kappa_inf > 0:
        u_all = np.concatenate([p.u_pub, p.u_priv])
        i = int(np.argmin(u_all))  # lowest index on ties
        if i < m:
            g_u_pub = g_u_pub.copy()
            g_u_pub[i] -= cfg.kappa_inf / p.u_pub[i] ** 2
        else:
            g_u_priv = g_u_priv.copy()
            g_u_priv[i - m] -= cfg.kappa_inf / p.u_priv[i - m] ** 2
    return g_w, g_u_pub, g_u_priv


def project(w: np.ndarray, u_pub: np.ndarray, u_priv: np.ndarray,
            lam: float, alpha: float, m: int, n: int) -> FeasiblePoint:
    """Euclidean projection: rescale w to the ball, clamp u to the box."""
    w = np.asarray(w, dtype=float).ravel()
    nrm = np.linalg.norm(w)
    if nrm > lam:
        w = lam * w / nrm
    u_pub = np.maximum(np.asarray(u_pub, dtype=float).ravel(), m / alpha)
    u_priv = np.maximum(np.asarray(u_priv, dtype=float).ravel(), n / (1.0 - alpha))
    return FeasiblePoint(w, u_pub, u_priv)


def project_point(p: FeasiblePoint, lam, alpha, m, n) -> FeasiblePoint:
    return project(p.w, p.u_pub, p.u_priv, lam, alpha, m, n)


def gradient_bounds(ctx: ConvexObjectiveContext):
    """Uniform bounds on the three block-gradient norms over the feasible
    set: (G, alpha^2 (B + Bbar) / m^{3/2}, (1-alpha)^2 Bbar / n^{3/2})."""
    cfg = ctx.config
    B = ctx.model.B
    b_bar = cfg.b_bar(B)
    m, n = ctx.data.m, ctx.data.n
    return (
        ctx.model.G,
        cfg.alpha ** 2 * (B + b_bar) / m ** 1.5,
        (1.0 - cfg.alpha) ** 2 * b_bar / n ** 1.5,
    )
