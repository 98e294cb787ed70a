"""Epsilon-insensitive support-vector regression with an RBF kernel.

The dual is solved in the beta = alpha - alpha* form: minimize
0.5*beta'K beta - y'beta + eps*||beta||_1 subject to sum(beta)=0 and
|beta_i| <= C_i, by repeatedly stepping along the maximal-violating pair.
Convergence is measured by the KKT violation gap; features are standardized
internally (constant columns are left at zero).
"""

from dataclasses import dataclass

import numpy as np

from ._accel import njit
from .errors import ConvergenceError, InsufficientDataError


@dataclass(frozen=True)
class SvrSettings:
    c: float = 1.0
    epsilon: float = 0.1
    gamma: float = 0.0  # 0 means 1 / (dim * feature variance), on standardized features
    tol: float = 1e-3
    max_iter: int = 200_000


@njit
def _smo(K, y, c_arr, eps, tol, max_iter):
    """Maximal-violating-pair descent on the beta-form dual.

    Steps are capped at the box bounds and at the |beta| kinks so each move
    stays on one quadratic piece. Returns (beta, b, gap, iterations).
    """
    n = y.shape[0]
    beta = np.zeros(n)
    kb = np.zeros(n)  # K @ beta, maintained incrementally
    gap = np.inf
    it = 0
    while True:
        g_up = np.inf  # smallest right-derivative among raisable betas
        g_dn = -np.inf  # largest left-derivative among lowerable betas
        i_up = -1
        j_dn = -1
        for i in range(n):
            g = kb[i] - y[i]
            if beta[i] < c_arr[i]:
                gp = g + eps if beta[i] >= 0.0 else g - eps
                if gp < g_up:
                    g_up = gp
                    i_up = i
            if beta[i] > -c_arr[i]:
                gm = g + eps if beta[i] > 0.0 else g - eps
                if gm > g_dn:
                    g_dn = gm
                    j_dn = i
        gap = g_dn - g_up
        if gap <= tol or i_up < 0 or j_dn < 0 or i_up == j_dn:
            break
        if it >= max_iter:
            break
        i = i_up
        j = j_dn
        kappa = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if kappa < 1e-12:
            kappa = 1e-12
        delta = gap / kappa
        if delta > c_arr[i] - beta[i]:
            delta = c_arr[i] - beta[i]
        if delta > beta[j] + c_arr[j]:
            delta = beta[j] + c_arr[j]
        if beta[i] < 0.0 and delta > -beta[i]:
            delta = -beta[i]
        if beta[j] > 0.0 and delta > beta[j]:
            delta = beta[j]
        if delta <= 0.0:
            break
        beta[i] += delta
        beta[j] -= delta
        for t in range(n):
            kb[t] += delta * (K[t, i] - K[t, j])
        it += 1
    if i_up >= 0 and j_dn >= 0:
        b = -0.5 * (g_up + g_dn)
    else:
        b = 0.0
    return beta, b, gap, it


def _rbf(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


class SvrHead:
    """Single-output epsilon-SVR; prediction is beta . k(X_train, x) + b."""

    def __init__(self, x_scaled, mean, scale, beta, b, gamma, gap):
        self.x_scaled = x_scaled
        self.mean = mean
        self.scale = scale
        self.beta = beta
        self.b = b
        self.gamma = gamma
        self.gap = gap

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        Xs = (np.asarray(X, dtype=np.float64) - self.mean) / self.scale
        return _rbf(Xs, self.x_scaled, self.gamma) @ self.beta + self.b

    def to_jsonable(self) -> dict:
        return {
            "x_scaled": self.x_scaled.tolist(),
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "beta": self.beta.tolist(),
            "b": self.b,
            "gamma": self.gamma,
            "gap": self.gap,
        }

    @classmethod
    def from_jsonable(cls, obj: dict) -> "SvrHead":
        return cls(
            np.asarray(obj["x_scaled"], dtype=np.float64),
            np.asarray(obj["mean"], dtype=np.float64),
            np.asarray(obj["scale"], dtype=np.float64),
            np.asarray(obj["beta"], dtype=np.float64),
            float(obj["b"]),
            float(obj["gamma"]),
            float(obj["gap"]),
        )


def fit_svr(X: np.ndarray, y: np.ndarray, settings: SvrSettings, sample_c=None) -> SvrHead:
    """Fit one epsilon-SVR head to a single target column.

    sample_c optionally overrides the box bound per training row (used to
    keep the problem unchanged when rows are duplicated with shared C).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = X.shape[0]
    if n == 0:
        raise InsufficientDataError("cannot fit an SVR on an empty dataset")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0.0] = 1.0
    Xs = np.ascontiguousarray((X - mean) / scale)
    gamma = settings.gamma
    if gamma <= 0.0:
        var = float(Xs.var())
        gamma = 1.0 / (X.shape[1] * var) if var > 0.0 else 1.0 / X.shape[1]
    if sample_c is None:
        c_arr = np.full(n, float(settings.c))
    else:
        c_arr = np.ascontiguousarray(sample_c, dtype=np.float64)
    K = _rbf(Xs, Xs, gamma)
    beta, b, gap, iters = _smo(
        np.ascontiguousarray(K), y, c_arr, settings.epsilon, settings.tol, settings.max_iter
    )
    if gap > settings.tol:
        raise ConvergenceError(
            f"SVR solver stopped after {iters} iterations with KKT gap {gap:.3e} "
            f"(tolerance {settings.tol:.3e})",
            gap=float(gap),
        )
    return SvrHead(Xs, mean, scale, beta, float(b), float(gamma), float(gap))
