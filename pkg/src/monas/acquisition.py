"""Acquisition functions and candidate selection.

EHVI is computed in closed form for two objectives by splitting the
non-dominated region into axis-aligned cells: for independent Gaussian
objectives the expected improvement over one cell factorizes into
one-dimensional partial expectations.
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import ndtr

from monas import pareto
from monas.space import Configuration, SearchSpace, config_key, decode, encode, sample_unit
from monas.surrogate.kde import density_ratio  # noqa: F401  (re-exported)

_SQRT2PI = np.sqrt(2.0 * np.pi)


def _npdf(z):
    return np.exp(-0.5 * z * z) / _SQRT2PI


def ei(mean, std, best):
    """Expected improvement below ``best`` (minimization)."""
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    gap = best - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(std > 0, gap / np.where(std > 0, std, 1.0), 0.0)
        val = np.where(std > 0, std * (z * ndtr(z) + _npdf(z)), np.maximum(gap, 0.0))
    return np.maximum(val, 0.0) if val.ndim else float(max(val, 0.0))


def _psi(t, mean, std):
    """``integral_{-inf}^{t} P(Y <= s) ds`` for ``Y ~ N(mean, std**2)``; 0 at ``t = -inf``."""
    t = np.asarray(t, dtype=float)
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        safe = np.where(std > 0, std, 1.0)
        z = (t - mean) / safe
        smooth = safe * (z * ndtr(z) + _npdf(z))
        val = np.where(std > 0, smooth, np.maximum(t - mean, 0.0))
    return np.where(np.isneginf(t), 0.0, val)


def _clean_front(front, ref) -> np.ndarray:
    f = np.asarray(front, dtype=float).reshape(-1, len(ref))
    f = f[np.all(f < ref, axis=1)]
    if len(f):
        f = np.unique(f[pareto.pareto_front(f)], axis=0)
    return f


def _batch(mean, std, m):
    mean = np.asarray(mean, dtype=float)
    scalar = mean.ndim == 1 and mean.shape[0] == m and np.ndim(std) == 1
    mean = np.atleast_2d(mean).reshape(-1, m)
    std = np.atleast_2d(np.asarray(std, dtype=float)).reshape(-1, m)
    return mean, std, scalar


def ehvi_2d(front, ref, mean, std):
    """Exact EHVI for two independent Gaussian objectives.

    ``mean``/``std`` are ``(2,)`` for one candidate or ``(N, 2)`` for a batch.
    """
    ref = np.asarray(ref, dtype=float)
    if ref.size != 2:
        raise ValueError("ehvi_2d needs exactly two objectives")
    mean, std, scalar = _batch(mean, std, 2)
    f = _clean_front(front, ref)
    f = f[np.argsort(f[:, 0], kind="stable")]
    # cells: x in [lo_i, hi_i), y below top_i
    lo = np.concatenate([[-np.inf], f[:, 0]])
    hi = np.concatenate([f[:, 0], [ref[0]]])
    top = np.concatenate([[ref[1]], f[:, 1]])
    wx = _psi(hi[None, :], mean[:, :1], std[:, :1]) - _psi(lo[None, :], mean[:, :1], std[:, :1])
    wy = _psi(top[None, :], mean[:, 1:], std[:, 1:])
    out = np.maximum(np.sum(wx * wy, axis=1), 0.0)
    return float(out[0]) if scalar else out


def ms_ehvi(front, ref, mean, std, cheap_values, expensive: int = -1):
    """EHVI with one modelled (expensive) objective and exactly known cheap objectives.

    The improvement as a function of the expensive value t is a step function
    w(t): the exclusive hypervolume of the cheap point against the front
    members whose expensive value is at most t. The expectation is therefore a
    sum over steps of ``w_k * (Psi(t_{k+1}) - Psi(t_k))``.
    """
    ref = np.asarray(ref, dtype=float)
    m = ref.size
    e = expensive % m
    cheap_idx = [j for j in range(m) if j != e]
    mean = np.asarray(mean, dtype=float)
    scalar = mean.ndim == 0
    mean = np.atleast_1d(mean)
    std = np.broadcast_to(np.atleast_1d(np.asarray(std, dtype=float)), mean.shape)
    v = np.asarray(cheap_values, dtype=float).reshape(len(mean), m - 1)

    f = _clean_front(front, ref)
    f = f[np.argsort(f[:, e], kind="stable")]
    t = np.concatenate([[-np.inf], f[:, e], [ref[e]]])
    ref_c = ref[cheap_idx]
    fc = f[:, cheap_idx]
    if m == 2:
        # running minimum of the cheap coordinate among front points with p_e <= t
        bound = np.minimum.accumulate(np.concatenate([[ref_c[0]], fc[:, 0]]))
        w = np.maximum(bound[None, :] - v, 0.0)
    else:
        w = np.empty((len(mean), len(f) + 1))
        for i, vi in enumerate(v):
            for k in range(len(f) + 1):
                prefix = fc[:k]
                w[i, k] = (pareto.hypervolume(np.vstack([prefix, vi]), ref_c)
                           - pareto.hypervolume(prefix, ref_c))
    steps = _psi(t[None, 1:], mean[:, None], std[:, None]) - _psi(t[None, :-1], mean[:, None], std[:, None])
    out = np.maximum(np.sum(w * steps, axis=1), 0.0)
    return float(out[0]) if scalar else out


def ehvi_mc(front, ref, mean, std, rng: np.random.Generator, n_draws: int = 10_000) -> float:
    """Monte Carlo EHVI for any number of objectives (approximate)."""
    ref = np.asarray(ref, dtype=float)
    f = _clean_front(front, ref)
    base = pareto.hypervolume(f, ref) if len(f) else 0.0
    draws = rng.normal(mean, std, size=(n_draws, ref.size))
    total = 0.0
    for y in draws:
        if np.all(y < ref) and not np.any(np.all(f <= y, axis=1)):
            total += pareto.hypervolume(np.vstack([f, y]) if len(f) else y[None], ref) - base
    return total / n_draws


def thompson_select(means, stds, n_new: int, rng: np.random.Generator) -> list[int]:
    """Draw one objective vector per candidate and rank by NDS then crowding distance."""
    means = np.asarray(means, dtype=float)
    stds = np.asarray(stds, dtype=float)
    if n_new > len(means):
        raise ValueError("n_new exceeds the number of candidates")
    sampled = rng.normal(means, stds)
    return pareto.nds_crowding_order(sampled)[:n_new]


def _apply_mask(x: np.ndarray, mask: Mapping[int, float] | None) -> np.ndarray:
    if mask:
        for i, val in mask.items():
            x[i] = val
    return x


def maximize_acquisition(space: SearchSpace, score_fn: Callable[[list[Configuration]], np.ndarray],
                         budget_samples: int, rng: np.random.Generator,
                         mask: Mapping[int, float] | None = None,
                         exclude: set[str] | frozenset = frozenset(),
                         refine_steps: int = 10, refine_sigma: float = 0.05, refine_batch: int = 20,
                         return_score: bool = False):
    """Random search over the space followed by local Gaussian refinement around the best.

    ``score_fn`` maps a list of configurations to an array of scores (higher is
    better). ``mask`` pins unit-cube coordinates (index -> value); pinned
    coordinates are never perturbed. Configurations whose key is in ``exclude``
    are never returned unless nothing else was found.
    """
    def prepare(xs):
        return [decode(space, _apply_mask(x, mask)) for x in xs]

    def score(configs):
        s = np.asarray(score_fn(configs), dtype=float)
        if exclude:
            s = np.where([config_key(c) in exclude for c in configs], -np.inf, s)
        return s

    configs = prepare(sample_unit(space, rng, budget_samples))
    scores = score(configs)
    b = int(np.argmax(scores))
    best, best_score = configs[b], scores[b]
    free = np.ones(space.dim, dtype=bool)
    if mask:
        free[list(mask)] = False
    for _ in range(refine_steps):
        x0 = encode(space, best)
        xs = []
        for _ in range(refine_batch):
            x = x0.copy()
            x[free] += rng.normal(0.0, refine_sigma, size=free.sum())
            xs.append(np.clip(x, 0.0, 1.0))
        cand = prepare(xs)
        s = score(cand)
        j = int(np.argmax(s))
        if s[j] > best_score:
            best, best_score = cand[j], s[j]
    return (best, float(best_score)) if return_score else best
