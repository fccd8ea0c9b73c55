"""Per-dimension Parzen estimators on the unit cube (good/bad density pair)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

MIN_BANDWIDTH = 1e-3
DENSITY_FLOOR = 1e-12


@dataclass(frozen=True)
class KDE1D:
    """Gaussian KDE truncated to [0, 1] and renormalized per kernel."""

    centers: np.ndarray
    bandwidth: float

    @classmethod
    def fit(cls, data, bw_factor: float = 1.0, min_bandwidth: float = MIN_BANDWIDTH) -> "KDE1D":
        data = np.asarray(data, dtype=float).ravel()
        if data.size == 0:
            raise ValueError("a KDE needs at least one sample")
        sd = data.std(ddof=1) if data.size > 1 else 0.0
        h = max(bw_factor * sd * data.size ** (-1.0 / 5.0), min_bandwidth)
        return cls(data, float(h))

    def _mass(self) -> np.ndarray:
        c, h = self.centers, self.bandwidth
        return ndtr((1.0 - c) / h) - ndtr(-c / h)

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = (x[..., None] - self.centers) / self.bandwidth
        k = np.exp(-0.5 * u ** 2) / (np.sqrt(2 * np.pi) * self.bandwidth * self._mass())
        inside = (x >= 0.0) & (x <= 1.0)
        return np.where(inside, k.mean(axis=-1), 0.0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        c = self.centers[rng.integers(len(self.centers), size=size)]
        h = self.bandwidth
        lo, hi = ndtr(-c / h), ndtr((1.0 - c) / h)
        u = lo + rng.random(size) * (hi - lo)
        return np.clip(c + h * ndtri(u), 0.0, 1.0)


@dataclass(frozen=True)
class KDEPair:
    good: tuple[KDE1D, ...]
    bad: tuple[KDE1D, ...]

    @property
    def dim(self) -> int:
        return len(self.good)

    @staticmethod
    def _log_density(kdes, X) -> np.ndarray:
        X = np.atleast_2d(X)
        out = np.zeros(len(X))
        for j, kde in enumerate(kdes):
            out += np.log(np.maximum(kde.pdf(X[:, j]), 1e-300))
        return out

    def log_l(self, X) -> np.ndarray:
        return self._log_density(self.good, X)

    def log_g(self, X) -> np.ndarray:
        return self._log_density(self.bad, X)

    def log_ratio(self, X) -> np.ndarray:
        return self.log_l(X) - np.maximum(self.log_g(X), np.log(DENSITY_FLOOR))

    def ratio(self, X) -> np.ndarray:
        return np.exp(self.log_ratio(X))

    def sample_good(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.column_stack([k.sample(rng, n) for k in self.good])


def kde_fit(good, bad, bw_factor: float = 1.0, min_bandwidth: float = MIN_BANDWIDTH) -> KDEPair:
    """Fit l (good) and g (bad) as products of 1D KDEs over encoded coordinates."""
    good = np.atleast_2d(np.asarray(good, dtype=float))
    bad = np.atleast_2d(np.asarray(bad, dtype=float))
    if len(good) < 1 or len(bad) < 1:
        raise ValueError("need at least one good and one bad observation")
    if good.shape[1] != bad.shape[1]:
        raise ValueError("good and bad observations differ in dimension")
    mk = lambda A: tuple(KDE1D.fit(A[:, j], bw_factor, min_bandwidth) for j in range(A.shape[1]))
    return KDEPair(mk(good), mk(bad))


def density_ratio(pair: KDEPair, X) -> np.ndarray:
    """``prod_i l_i(x_i) / max(prod_i g_i(x_i), 1e-12)`` for each row of ``X``."""
    return pair.ratio(X)
