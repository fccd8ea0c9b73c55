"""Dominance, non-dominated sorting, crowding distance, hypervolume and HSSP.

All objectives are minimized. Ties are broken toward the lowest index.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

_TIE = 1e-12


def _as_points(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        p = p.reshape(1, -1) if p.size else p.reshape(0, 0)
    return p


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"objective vectors differ in length: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def dominance_matrix(points) -> np.ndarray:
    """``D[i, j]`` is True iff point i dominates point j."""
    p = _as_points(points)
    le = np.all(p[:, None, :] <= p[None, :, :], axis=2)
    lt = np.any(p[:, None, :] < p[None, :, :], axis=2)
    return le & lt


def nds(points) -> list[list[int]]:
    """Non-dominated sorting. Returns fronts F1..Fk as ascending index lists."""
    p = _as_points(points)
    n = len(p)
    if n == 0:
        return []
    dom = dominance_matrix(p)
    count = dom.sum(axis=0)  # how many points dominate j
    remaining = np.ones(n, dtype=bool)
    fronts = []
    while remaining.any():
        front = np.flatnonzero(remaining & (count == 0))
        fronts.append(front.tolist())
        remaining[front] = False
        count = count - dom[front].sum(axis=0)
    return fronts


def nds_ranks(points) -> np.ndarray:
    ranks = np.empty(len(_as_points(points)), dtype=int)
    for r, front in enumerate(nds(points)):
        ranks[front] = r
    return ranks


def pareto_front(points) -> list[int]:
    """Indices of the non-dominated points."""
    p = _as_points(points)
    if len(p) == 0:
        return []
    if len(p) <= 2000:
        return np.flatnonzero(~dominance_matrix(p).any(axis=0)).tolist()
    # large sets: a lexicographic sweep, so no point can be dominated by a later one
    order = np.lexsort(p.T[::-1])
    kept: list[int] = []
    for i in order:
        if kept:
            q = p[kept]
            if np.any(np.all(q <= p[i], axis=1) & np.any(q < p[i], axis=1)):
                continue
        kept.append(int(i))
    return sorted(kept)


def crowding_distance(front_points) -> np.ndarray:
    p = _as_points(front_points)
    n, m = p.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for j in range(m):
        order = np.argsort(p[:, j], kind="stable")
        col = p[order, j]
        span = col[-1] - col[0]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span <= 0:
            continue
        dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def rank_and_crowding(points) -> tuple[np.ndarray, np.ndarray]:
    """NDS rank and within-front crowding distance for every point."""
    p = _as_points(points)
    ranks = np.empty(len(p), dtype=int)
    crowd = np.empty(len(p))
    for r, front in enumerate(nds(p)):
        ranks[front] = r
        crowd[front] = crowding_distance(p[front])
    return ranks, crowd


def nds_crowding_order(points) -> list[int]:
    """Indices sorted by front, then by descending crowding distance, then index."""
    ranks, crowd = rank_and_crowding(points)
    return sorted(range(len(ranks)), key=lambda i: (ranks[i], -crowd[i], i))


# -- hypervolume ------------------------------------------------------------

def _hv2(p: np.ndarray, ref: np.ndarray) -> float:
    order = np.lexsort((p[:, 1], p[:, 0]))
    hv = 0.0
    prev_y = ref[1]
    for x, y in p[order]:
        if y < prev_y:
            hv += (ref[0] - x) * (prev_y - y)
            prev_y = y
    return hv


def _hv(p: np.ndarray, ref: np.ndarray) -> float:
    m = p.shape[1]
    if len(p) == 0:
        return 0.0
    if m == 1:
        return float(ref[0] - p[:, 0].min())
    if m == 2:
        return _hv2(p, ref)
    # slice along the last objective
    order = np.argsort(p[:, -1], kind="stable")
    p = p[order]
    z = np.append(p[:, -1], ref[-1])
    hv = 0.0
    for k in range(len(p)):
        depth = z[k + 1] - z[k]
        if depth > 0:
            prefix = p[: k + 1, :-1]
            hv += depth * _hv(prefix[pareto_front(prefix)], ref[:-1])
    return hv


def hypervolume(points, ref: Sequence[float]) -> float:
    """Lebesgue measure of the region dominated by ``points`` and bounded by ``ref``.

    Points that do not strictly dominate ``ref`` are ignored.
    """
    ref = np.asarray(ref, dtype=float)
    p = _as_points(points)
    if p.size == 0:
        return 0.0
    if p.shape[1] != ref.size:
        raise ValueError("reference point and objectives differ in length")
    if ref.size > 4:
        raise ValueError("hypervolume is implemented for at most 4 objectives")
    p = p[np.all(p < ref, axis=1)]
    if len(p) == 0:
        return 0.0
    p = p[pareto_front(p)]
    return float(_hv(np.unique(p, axis=0), ref))


def hv_contributions(points, ref: Sequence[float]) -> np.ndarray:
    """Exclusive hypervolume contribution of each point."""
    ref = np.asarray(ref, dtype=float)
    p = _as_points(points)
    n = len(p)
    out = np.zeros(n)
    inside = np.all(p < ref, axis=1)
    total = hypervolume(p, ref)
    for i in range(n):
        if not inside[i]:
            continue
        others = np.delete(p, i, axis=0)
        if len(others) and np.any(np.all(others <= p[i], axis=1)):
            continue  # weakly dominated (incl. duplicates): nothing exclusive
        out[i] = total - hypervolume(others, ref)
    return out


def _first_within(values: np.ndarray, target: float, lowest: bool) -> int:
    tol = _TIE * max(1.0, abs(target))
    hits = values <= target + tol if lowest else values >= target - tol
    return int(np.flatnonzero(hits)[0])


def hssp_remove_one(points, ref: Sequence[float]) -> int:
    """Index of the point whose removal loses the least hypervolume."""
    p = _as_points(points)
    if len(p) < 2:
        raise ValueError("need at least two points")
    contrib = hv_contributions(p, ref)
    return _first_within(contrib, contrib.min(), lowest=True)


def hssp_greedy(points, k: int, ref: Sequence[float]) -> list[int]:
    """Greedy forward selection of ``k`` points maximizing hypervolume.

    Returns indices in the order they were picked.
    """
    p = _as_points(points)
    n = len(p)
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, {n}], got {k}")
    chosen: list[int] = []
    free = list(range(n))
    current = 0.0
    for _ in range(k):
        gains = np.array([hypervolume(p[chosen + [i]], ref) - current for i in free])
        j = _first_within(gains, gains.max(), lowest=False)
        chosen.append(free.pop(j))
        current = hypervolume(p[chosen], ref)
    return chosen
