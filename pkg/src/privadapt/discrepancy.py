"""Empirical labeled-discrepancy estimation between the two samples.

The estimate is sup over feasible predictors of
|mean private loss - mean public loss|.  Two solvers are provided: a
difference-of-convex (DC) iteration for the squared loss in any dimension,
and a brute-force grid oracle restricted to d <= 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import AdaptDataset, LossModel, SQUARED, loss_values


@dataclass
class DiscrepancyEstimate:
    d_hat: float
    d_dp: float
    solver: str
    witness_w: np.ndarray
    branch_histories: list = field(default_factory=list)


def loss_gap(data: AdaptDataset, model: LossModel, w: np.ndarray) -> float:
    """Mean private loss minus mean public loss at w."""
    lp = loss_values(model, w, data.private_x, data.private_y).mean()
    lq = loss_values(model, w, data.public_x, data.public_y).mean()
    return float(lp - lq)


def _candidate_grid(d: int, lam: float, grid_points: int) -> np.ndarray:
    axes = [np.linspace(-lam, lam, grid_points)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    norms = np.linalg.norm(pts, axis=1)
    inside = pts[norms <= lam]
    # project the remaining grid points onto the sphere so the boundary,
    # where the maximizer often sits, is sampled too
    outside = pts[norms > lam]
    if outside.size:
        boundary = lam * outside / np.linalg.norm(outside, axis=1, keepdims=True)
        inside = np.vstack([inside, boundary])
    return inside


def discrepancy_grid(data: AdaptDataset, model: LossModel,
                     grid_points: int = 201) -> DiscrepancyEstimate:
    """Brute-force oracle: maximize |loss gap| over a uniform grid of the
    Lambda-ball.  Restricted to d <= 2."""
    if data.d > 2:
        raise ValueError("grid oracle is restricted to d <= 2")
    if grid_points < 3:
        raise ValueError("grid_points must be >= 3")
    cand = _candidate_grid(data.d, model.lam, grid_points)
    best_val = -1.0
    best_w = np.zeros(data.d)
    chunk = 200_000
    for start in range(0, cand.shape[0], chunk):
        W = cand[start:start + chunk]
        sp = data.private_x @ W.T
        sq = data.public_x @ W.T
        if model.kind == SQUARED:
            lp = ((sp - data.private_y[:, None]) ** 2).mean(axis=0)
            lq = ((sq - data.public_y[:, None]) ** 2).mean(axis=0)
        else:
            lp = np.logaddexp(0.0, -data.private_y[:, None] * sp).mean(axis=0)
            lq = np.logaddexp(0.0, -data.public_y[:, None] * sq).mean(axis=0)
        gaps = np.abs(lp - lq)
        i = int(np.argmax(gaps))
        if gaps[i] > best_val:
            best_val = float(gaps[i])
            best_w = W[i].copy()
    return DiscrepancyEstimate(best_val, best_val, "grid", best_w)


def _quadratic_form(X: np.ndarray, y: np.ndarray):
    """Mean squared loss as w'Mw - 2 b'w + c."""
    N = X.shape[0]
    M = X.T @ X / N
    b = X.T @ y / N
    c = float(y @ y) / N
    return M, b, c


def _pgd_convex_quadratic(M, b, lin, lam, tol, max_iter=20_000):
    """Minimize w'Mw - 2 b'w - lin'w over the Lambda-ball by projected GD."""
    d = M.shape[0]
    L = 2.0 * max(float(np.linalg.eigvalsh(M).max()), 0.0)
    w = np.zeros(d)
    if L <= 1e-15:
        # objective is linear: the minimizer sits on the sphere
        v = 2.0 * b + lin
        nv = np.linalg.norm(v)
        return lam * v / nv if nv > 0 else w
    step = 1.0 / L
    prev = w @ (M @ w) - 2.0 * b @ w - lin @ w
    for _ in range(max_iter):
        g = 2.0 * (M @ w) - 2.0 * b - lin
        w = w - step * g
        nrm = np.linalg.norm(w)
        if nrm > lam:
            w = lam * w / nrm
        val = w @ (M @ w) - 2.0 * b @ w - lin @ w
        if abs(prev - val) <= tol:
            break
        prev = val
    return w


def discrepancy_dca(data: AdaptDataset, model: LossModel, tol: float = 1e-8,
                    restarts: int = 8, rng=None) -> DiscrepancyEstimate:
    """DC iteration for the squared-loss discrepancy.

    The absolute value is split into two sign branches; each branch
    maximizes a difference of convex quadratics by linearizing the concave
    part at the current iterate and solving the convex surrogate over the
    Lambda-ball with projected gradient descent (tolerance tol/10).
    """
    if model.kind != SQUARED:
        raise ValueError("the DC solver supports the squared loss only")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if rng is None:
        rng = np.random.default_rng(0)
    Mp, bp, cp = _quadratic_form(data.private_x, data.private_y)
    Mq, bq, cq = _quadratic_form(data.public_x, data.public_y)
    d, lam = data.d, model.lam

    inits = [np.zeros(d)]
    for _ in range(restarts):
        v = rng.standard_normal(d)
        nv = np.linalg.norm(v)
        inits.append(lam * v / nv if nv > 0 else np.zeros(d))

    def branch(sign: float):
        # maximize sign * (Q_priv - Q_pub) = A(w) - C(w) with both convex
        if sign > 0:
            MA, bA, cA = Mp, bp, cp
            MC, bC, cC = Mq, bq, cq
        else:
            MA, bA, cA = Mq, bq, cq
            MC, bC, cC = Mp, bp, cp

        def value(w):
            a = w @ (MA @ w) - 2.0 * bA @ w + cA
            c = w @ (MC @ w) - 2.0 * bC @ w + cC
            return a - c

        best_v, best_w, best_hist = -np.inf, np.zeros(d), []
        for w0 in inits:
            w = w0.copy()
            hist = [value(w)]
            for _ in range(500):
                grad_a = 2.0 * (MA @ w) - 2.0 * bA
                w = _pgd_convex_quadratic(MC, bC, grad_a, lam, tol / 10.0)
                hist.append(value(w))
                if abs(hist[-1] - hist[-2]) <= tol:
                    break
            if hist[-1] > best_v:
                best_v, best_w, best_hist = hist[-1], w, hist
        return best_v, best_w, best_hist

    v_pos, w_pos, h_pos = branch(+1.0)
    v_neg, w_neg, h_neg = branch(-1.0)
    if v_pos >= v_neg:
        val, wit = v_pos, w_pos
    else:
        val, wit = v_neg, w_neg
    val = max(val, 0.0)
    return DiscrepancyEstimate(float(val), float(val), "dca", wit,
                               branch_histories=[h_pos, h_neg])
