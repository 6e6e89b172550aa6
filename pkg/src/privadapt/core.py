"""Domain types, loss models, and the constants shared by every solver."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SQUARED = "squared"
LOGISTIC = "logistic"


def _as_matrix(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d feature array, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class AdaptDataset:
    """A labeled public sample of size m and a labeled private sample of size n.

    Feature rows share dimension d and labels lie in [-1, 1]
    (classification labels are encoded as -1/+1).
    """

    public_x: np.ndarray
    public_y: np.ndarray
    private_x: np.ndarray
    private_y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "public_x", _as_matrix(self.public_x))
        object.__setattr__(self, "private_x", _as_matrix(self.private_x))
        object.__setattr__(self, "public_y", np.asarray(self.public_y, dtype=float).ravel())
        object.__setattr__(self, "private_y", np.asarray(self.private_y, dtype=float).ravel())
        if self.public_x.shape[0] < 1 or self.private_x.shape[0] < 1:
            raise ValueError("both samples must contain at least one point")
        if self.public_x.shape[1] != self.private_x.shape[1]:
            raise ValueError("public and private samples must share the feature dimension")
        if self.public_x.shape[0] != self.public_y.shape[0]:
            raise ValueError("public feature/label count mismatch")
        if self.private_x.shape[0] != self.private_y.shape[0]:
            raise ValueError("private feature/label count mismatch")
        for y in (self.public_y, self.private_y):
            if np.max(np.abs(y)) > 1.0 + 1e-12:
                raise ValueError("labels must lie in [-1, 1]")

    @property
    def m(self) -> int:
        return self.public_x.shape[0]

    @property
    def n(self) -> int:
        return self.private_x.shape[0]

    @property
    def d(self) -> int:
        return self.public_x.shape[1]

    def max_feature_norm(self) -> float:
        return float(
            max(
                np.linalg.norm(self.public_x, axis=1).max(),
                np.linalg.norm(self.private_x, axis=1).max(),
            )
        )

    def check_feature_bound(self, r: float, tol: float = 1e-9):
        if self.max_feature_norm() > r + tol:
            raise ValueError(f"feature norms exceed the bound r={r}")


@dataclass(frozen=True)
class LossModel:
    """A pluggable per-example loss with its geometric constants.

    ``kind`` is "squared" (regression, linear predictors) or "logistic"
    (margin-form classification loss on -1/+1 labels).  ``r`` bounds the
    feature norms and ``lam`` the predictor norm; the derived constants are

    - squared:  B = (lam*r + 1)^2,  G = 2*r*(lam*r + 1),  beta = 2*r^2
    - logistic: G = r,  beta = r^2 / 4,  B = G * lam
    """

    kind: str
    r: float
    lam: float

    def __post_init__(self):
        if self.kind not in (SQUARED, LOGISTIC):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.r <= 0 or self.lam <= 0:
            raise ValueError("r and lam must be positive")

    @property
    def B(self) -> float:
        if self.kind == SQUARED:
            return (self.lam * self.r + 1.0) ** 2
        return self.G * self.lam

    @property
    def G(self) -> float:
        if self.kind == SQUARED:
            return 2.0 * self.r * (self.lam * self.r + 1.0)
        return self.r

    @property
    def beta(self) -> float:
        if self.kind == SQUARED:
            return 2.0 * self.r ** 2
        return self.r ** 2 / 4.0


def derive_constants(model: LossModel):
    """Return (B, G, beta)."""
    return model.B, model.G, model.beta


def loss_values(model: LossModel, w: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vector of per-example losses at predictor w."""
    w = np.asarray(w, dtype=float).ravel()
    X = _as_matrix(X)
    if X.shape[1] != w.shape[0]:
        raise ValueError("dimension mismatch between w and features")
    margin_or_resid = X @ w
    y = np.asarray(y, dtype=float).ravel()
    if model.kind == SQUARED:
        return (margin_or_resid - y) ** 2
    # log(1 + exp(-y * w.x)), computed in the overflow-safe form
    z = -y * margin_or_resid
    return np.logaddexp(0.0, z)


def loss_grads(model: LossModel, w: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Matrix of per-example loss gradients in w, one row per example."""
    w = np.asarray(w, dtype=float).ravel()
    X = _as_matrix(X)
    if X.shape[1] != w.shape[0]:
        raise ValueError("dimension mismatch between w and features")
    y = np.asarray(y, dtype=float).ravel()
    s = X @ w
    if model.kind == SQUARED:
        return 2.0 * (s - y)[:, None] * X
    # -sigmoid(-y * w.x) * y * x
    sig = 1.0 / (1.0 + np.exp(np.clip(y * s, -500, 500)))
    return (-sig * y)[:, None] * X


def loss_value(model: LossModel, w, x, y: float) -> float:
    return float(loss_values(model, w, np.atleast_2d(np.asarray(x, dtype=float)), [y])[0])


def loss_grad_w(model: LossModel, w, x, y: float) -> np.ndarray:
    return loss_grads(model, w, np.atleast_2d(np.asarray(x, dtype=float)), [y])[0]


@dataclass(frozen=True)
class FeasiblePoint:
    """Predictor w plus the weight-reciprocal blocks (u_pub, u_priv)."""

    w: np.ndarray
    u_pub: np.ndarray
    u_priv: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float).ravel())
        object.__setattr__(self, "u_pub", np.asarray(self.u_pub, dtype=float).ravel())
        object.__setattr__(self, "u_priv", np.asarray(self.u_priv, dtype=float).ravel())

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.w, self.u_pub, self.u_priv])

    @staticmethod
    def from_vector(v: np.ndarray, d: int, m: int, n: int) -> "FeasiblePoint":
        v = np.asarray(v, dtype=float).ravel()
        return FeasiblePoint(v[:d], v[d:d + m], v[d + m:d + m + n])


def is_feasible(p: FeasiblePoint, lam: float, alpha: float, m: int, n: int,
                tol: float = 1e-9) -> bool:
    if np.linalg.norm(p.w) > lam * (1.0 + tol) + tol:
        return False
    if p.u_pub.shape[0] != m or p.u_priv.shape[0] != n:
        return False
    if np.any(p.u_pub < m / alpha - tol * m / alpha):
        return False
    if np.any(p.u_priv < n / (1.0 - alpha) - tol * n / (1.0 - alpha)):
        return False
    return True


def reference_point(alpha: float, m: int, n: int, d: int) -> FeasiblePoint:
    """w = 0, u at the box lower bounds, i.e. the weights equal the
    alpha-mixture reference."""
    return FeasiblePoint(
        np.zeros(d),
        np.full(m, m / alpha),
        np.full(n, n / (1.0 - alpha)),
    )


@dataclass(frozen=True)
class PrivacyBudget:
    """Total (epsilon, delta) budget and its split between the discrepancy
    release (pure-DP Laplace) and the noisy optimization."""

    epsilon_total: float
    delta: float
    disc_fraction: float = 0.5

    def __post_init__(self):
        if self.epsilon_total <= 0:
            raise ValueError("epsilon_total must be positive (may be inf)")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if not (0.0 < self.disc_fraction < 1.0):
            raise ValueError("disc_fraction must lie in (0, 1)")

    @property
    def epsilon_disc(self) -> float:
        if math.isinf(self.epsilon_total):
            return math.inf
        return self.disc_fraction * self.epsilon_total

    @property
    def epsilon_opt(self) -> float:
        if math.isinf(self.epsilon_total):
            return math.inf
        return (1.0 - self.disc_fraction) * self.epsilon_total

    @property
    def is_private(self) -> bool:
        return not math.isinf(self.epsilon_total)


def non_private(delta: float = 0.01) -> PrivacyBudget:
    return PrivacyBudget(math.inf, delta)


@dataclass(frozen=True)
class RegularizerConfig:
    """Hyperparameters of both objectives.

    alpha is the public/private mixture weight of the reference weighting.
    The kappas regularize the convex objective, the lambdas the non-convex
    one; mu is the softmax sharpness (None means sqrt(m + n) at use time).
    """

    alpha: float = 0.5
    kappa1: float = 0.0
    kappa2: float = 0.0
    kappa_inf: float = 0.0
    lambda1: float = 0.0
    lambda2: float = 0.0
    lambda_inf: float = 0.0
    mu: float | None = None

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        for name in ("kappa1", "kappa2", "kappa_inf", "lambda1", "lambda2", "lambda_inf"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.mu is not None and self.mu <= 0:
            raise ValueError("mu must be positive")

    def b_bar(self, B: float) -> float:
        return B + self.kappa1 + self.kappa2 + self.kappa_inf

    def softmax_mu(self, m: int, n: int) -> float:
        return self.mu if self.mu is not None else math.sqrt(m + n)


@dataclass
class AdaptationResult:
    """Output of a fit: the returned point plus run diagnostics."""

    point: FeasiblePoint
    objective_value: float
    privacy_spent: tuple = (math.inf, 0.0)
    T_used: int = 0
    grad_mapping_norm: float | None = None
    t_star: int | None = None
    trajectory_stats: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "w": self.point.w.tolist(),
            "objective_value": self.objective_value,
            "privacy_spent": list(self.privacy_spent),
            "T_used": self.T_used,
        }
        if self.grad_mapping_norm is not None:
            out["grad_mapping_norm"] = self.grad_mapping_norm
        if self.t_star is not None:
            out["t_star"] = self.t_star
        return out
