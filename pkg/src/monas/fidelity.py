"""Budget schedules for the multi-fidelity methods and the multi-objective promotion rule."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from monas import pareto


@dataclass(frozen=True)
class Rung:
    budget: float
    fe: int


@dataclass(frozen=True)
class Bracket:
    s: int
    n_configs: int
    initial_budget: float


def emoash_ladder(fe_total: int, b_max: float, n: int) -> list[Rung]:
    """Budget-doubling / evaluation-halving ladder of the evolutionary SH scheme.

    The initial budget is ``floor(b_max / 2**(n-1))`` and the initial number of
    evaluations ``floor(fe_total / sum_i 2**-i)``. Each further rung doubles the
    budget and halves the evaluations; the last rung always runs at ``b_max``.
    """
    if n < 1:
        raise ValueError("need at least one rung")
    if fe_total < 2 ** (n - 1):
        raise ValueError(f"fe_total={fe_total} too small for {n} rungs")
    b = math.floor(b_max / 2 ** (n - 1))
    if b < 1:
        raise ValueError(f"b_max={b_max} too small for {n} budget doublings")
    fe = math.floor(fe_total / sum(2.0 ** -i for i in range(n)))
    rungs = []
    for i in range(n):
        budget = b_max if i == n - 1 else min(b * 2 ** i, b_max)
        rungs.append(Rung(budget, fe // 2 ** i))
    return rungs


def _s_max(b_min: float, b_max: float, eta: int) -> int:
    ratio = b_max / b_min
    s = 0
    while eta ** (s + 1) <= ratio * (1 + 1e-12):
        s += 1
    return s


def hb_brackets(b_min: float, b_max: float, eta: int) -> list[Bracket]:
    """Hyperband brackets, ordered from the most exploratory (``s = s_max``) to ``s = 0``."""
    if not 0 < b_min <= b_max:
        raise ValueError("need 0 < b_min <= b_max")
    if eta < 2:
        raise ValueError("eta must be at least 2")
    s_max = _s_max(b_min, b_max, eta)
    out = []
    for s in range(s_max, -1, -1):
        n = math.ceil((s_max + 1) / (s + 1) * eta ** s)
        out.append(Bracket(s, n, rung_budget(b_max, eta, s)))
    return out


def rung_budget(b_max: float, eta: int, s: int) -> float:
    """``eta**-s * b_max`` rounded down to whole epochs (at least 1); ``b_max`` itself when s = 0."""
    if s == 0:
        return b_max
    return max(1, math.floor(b_max * eta ** -s + 1e-9))


def sh_promote(objectives, eta: float, ref: Sequence[float]) -> list[int]:
    """Indices of the ``max(1, floor(n / eta))`` survivors of one SH rung.

    Whole NDS fronts are kept in order; the front straddling the cut is thinned
    by greedy hypervolume subset selection against ``ref``.
    """
    y = np.asarray(objectives, dtype=float)
    n = len(y)
    if n == 0:
        raise ValueError("no candidates to promote")
    k = max(1, int(n // eta))
    survivors: list[int] = []
    for front in pareto.nds(y):
        room = k - len(survivors)
        if room <= 0:
            break
        if len(front) <= room:
            survivors.extend(front)
        else:
            picks = pareto.hssp_greedy(y[front], room, ref)
            survivors.extend(front[j] for j in picks)
    return sorted(survivors)
