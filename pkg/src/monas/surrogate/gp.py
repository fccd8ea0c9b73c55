"""Gaussian-process regression with a squared-exponential ARD kernel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, lapack, solve_triangular
from scipy.optimize import minimize

JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)

# bounds on log-hyperparameters (inputs live in the unit cube, targets are standardized)
LOG_LS_BOUNDS = (np.log(1e-2), np.log(20.0))
LOG_SF2_BOUNDS = (np.log(1e-6), np.log(50.0))
LOG_SN2_BOUNDS = (np.log(1e-8), np.log(1.0))


class GPFitError(np.linalg.LinAlgError):
    pass


def _cholesky(K: np.ndarray) -> tuple[np.ndarray, float]:
    n = len(K)
    for jitter in JITTERS:
        try:
            return np.linalg.cholesky(K + jitter * np.eye(n)), jitter
        except np.linalg.LinAlgError:
            continue
    raise GPFitError("kernel matrix not positive definite even with 1e-4 jitter")


def _unpack(theta: np.ndarray, d: int):
    return np.exp(theta[:d]), np.exp(theta[d]), np.exp(theta[d + 1])


def _neg_lml(theta: np.ndarray, sqdiff: np.ndarray, z: np.ndarray):
    n, _, d = sqdiff.shape
    ls, sf2, sn2 = _unpack(theta, d)
    kse = sf2 * np.exp(-0.5 * sqdiff @ (1.0 / ls ** 2))
    K = kse + sn2 * np.eye(n)
    try:
        L, _ = _cholesky(K)
    except GPFitError:
        return 1e25, np.zeros_like(theta)
    alpha = cho_solve((L, True), z)
    lml = -0.5 * z @ alpha - np.log(np.diag(L)).sum() - 0.5 * n * np.log(2 * np.pi)
    Kinv, info = lapack.dpotri(L, lower=1)
    Kinv = np.tril(Kinv) + np.tril(Kinv, -1).T
    W = np.outer(alpha, alpha) - Kinv
    Wk = W * kse
    grad = np.empty_like(theta)
    grad[:d] = 0.5 * np.einsum("ij,ijd->d", Wk, sqdiff) / ls ** 2
    grad[d] = 0.5 * Wk.sum()
    grad[d + 1] = 0.5 * sn2 * np.trace(W)
    return -lml, -grad


@dataclass
class GPModel:
    X: np.ndarray
    y: np.ndarray
    y_mean: float
    y_scale: float
    lengthscales: np.ndarray
    signal_var: float
    noise_var: float
    L: np.ndarray
    alpha: np.ndarray
    jitter: float
    log_marginal_likelihood: float

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([np.log(self.lengthscales), [np.log(self.signal_var), np.log(self.noise_var)]])

    def _kstar(self, Xq: np.ndarray) -> np.ndarray:
        diff = (Xq[:, None, :] - self.X[None, :, :]) / self.lengthscales
        return self.signal_var * np.exp(-0.5 * np.sum(diff ** 2, axis=2))

    def predict(self, Xq) -> tuple[np.ndarray, np.ndarray]:
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        ks = self._kstar(Xq)
        mean = ks @ self.alpha
        v = solve_triangular(self.L, ks.T, lower=True)
        var = np.maximum(self.signal_var - np.sum(v ** 2, axis=0), 0.0)
        return self.y_mean + self.y_scale * mean, self.y_scale * np.sqrt(var)

    def mean_gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ks = self._kstar(x[None, :])[0]
        return self.y_scale * -np.sum((self.alpha * ks)[:, None] * (x - self.X), axis=0) / self.lengthscales ** 2


def _model(X, y, y_mean, y_scale, theta, sqdiff) -> GPModel:
    d = X.shape[1]
    ls, sf2, sn2 = _unpack(theta, d)
    n = len(X)
    K = sf2 * np.exp(-0.5 * sqdiff @ (1.0 / ls ** 2)) + sn2 * np.eye(n)
    L, jitter = _cholesky(K)
    z = (y - y_mean) / y_scale
    alpha = cho_solve((L, True), z)
    lml = -0.5 * z @ alpha - np.log(np.diag(L)).sum() - 0.5 * n * np.log(2 * np.pi)
    return GPModel(X, y, y_mean, y_scale, ls, sf2, sn2, L, alpha, jitter, float(lml))


def gp_fit(X, y, init: np.ndarray | None = None, n_starts: int = 3, maxiter: int = 100) -> GPModel:
    """Fit a GP by maximizing the log marginal likelihood from several starting points.

    ``init`` (log-hyperparameters of a previous fit) is tried first, which makes
    refits after one new observation cheap. Targets are standardized internally.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least two observations")
    y_mean = float(y.mean())
    y_scale = float(y.std())
    if y_scale <= 0 or not np.isfinite(y_scale):
        y_scale = 1.0
    z = (y - y_mean) / y_scale
    sqdiff = (X[:, None, :] - X[None, :, :]) ** 2

    starts = [] if init is None else [np.asarray(init, dtype=float)]
    for ls0 in (0.3, 1.0, 0.1):
        starts.append(np.concatenate([np.full(d, np.log(ls0)), [0.0, np.log(1e-3)]]))
    bounds = [LOG_LS_BOUNDS] * d + [LOG_SF2_BOUNDS, LOG_SN2_BOUNDS]
    lo, hi = np.array(bounds).T

    best_theta, best_val = None, np.inf
    for theta0 in starts[:max(1, n_starts)]:
        theta0 = np.clip(theta0, lo, hi)
        f0 = _neg_lml(theta0, sqdiff, z)[0]
        res = minimize(_neg_lml, theta0, args=(sqdiff, z), jac=True, method="L-BFGS-B",
                       bounds=bounds, options={"maxiter": maxiter})
        val, theta = (res.fun, res.x) if res.fun <= f0 else (f0, theta0)
        if val < best_val:
            best_val, best_theta = val, theta
    if best_val >= 1e24:
        raise GPFitError("no hyperparameter setting gave a positive-definite kernel")
    return _model(X, y, y_mean, y_scale, best_theta, sqdiff)


def gp_predict(model: GPModel, X) -> tuple[np.ndarray, np.ndarray]:
    return model.predict(X)
