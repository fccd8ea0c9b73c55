import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from monas.fidelity import emoash_ladder, hb_brackets, sh_promote
from monas.pareto import dominates, nds
from oracles import grid_hypervolume


def test_ladder_small_settings():
    rungs = emoash_ladder(150, 25, 3)
    assert [(r.budget, r.fe) for r in rungs] == [(6, 85), (12, 42), (25, 21)]


def test_ladder_single_rung():
    assert [(r.budget, r.fe) for r in emoash_ladder(40, 25, 1)] == [(25, 40)]


def test_ladder_large_settings():
    assert emoash_ladder(15000, 25, 3)[0].fe == 8571


def test_ladder_rejects_tiny_budget():
    with pytest.raises(ValueError):
        emoash_ladder(3, 25, 3)


def test_brackets_small_settings():
    br = hb_brackets(5, 25, 3)
    assert [(b.s, b.n_configs, b.initial_budget) for b in br] == [(1, 3, 8), (0, 2, 25)]


def test_brackets_single():
    br = hb_brackets(25, 25, 3)
    assert [(b.s, b.n_configs) for b in br] == [(0, 1)]


def test_brackets_classic_settings():
    br = hb_brackets(1, 27, 3)
    assert [b.s for b in br] == [3, 2, 1, 0]
    assert [b.n_configs for b in br] == [27, 12, 6, 4]
    assert [b.initial_budget for b in br] == [1, 3, 9, 27]


def test_promote_identical_objectives_keeps_lowest_indices():
    assert sh_promote(np.ones((9, 2)), 3, (2, 2)) == [0, 1, 2]


def test_promote_count():
    rng = np.random.default_rng(0)
    assert len(sh_promote(rng.random((9, 2)), 3, (2, 2))) == 3
    assert len(sh_promote(rng.random((2, 2)), 3, (2, 2))) == 1


def test_promote_fills_from_second_front_by_hypervolume():
    Y = np.array([(0, 1), (1, 0), (0.5, 3.5), (2, 2), (3.5, 0.5), (2.5, 2.5), (5, 5), (5.5, 5), (5, 5.5)])
    ref = (6, 6)
    F1, F2 = nds(Y)[:2]
    assert F1 == [0, 1] and F2 == [2, 3, 4]
    # the straddling front is thinned on its own: exhaustive single-point subset selection
    best = max(F2, key=lambda j: (grid_hypervolume(Y[[j]], ref), -j))
    assert sh_promote(Y, 3, ref) == sorted(F1 + [best])
    assert best == 3


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 20000), st.integers(1, 100), st.integers(1, 6))
def test_ladder_conserves_evaluations(fe_total, b_max, n):
    if fe_total < 2 ** (n - 1) or b_max < 2 ** (n - 1):
        with pytest.raises(ValueError):
            emoash_ladder(fe_total, b_max, n)
        return
    rungs = emoash_ladder(fe_total, b_max, n)
    assert sum(r.fe for r in rungs) <= fe_total
    assert rungs[-1].budget == b_max
    assert all(a.budget < b.budget for a, b in zip(rungs, rungs[1:])) or n == 1
    assert all(a.fe >= b.fe for a, b in zip(rungs, rungs[1:]))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 50), st.integers(1, 200), st.integers(2, 5))
def test_brackets_follow_formulas(b_min, extra, eta):
    b_max = b_min + extra - 1
    br = hb_brackets(b_min, b_max, eta)
    s_max = int(math.floor(math.log(b_max / b_min) / math.log(eta) + 1e-9))
    assert [b.s for b in br] == list(range(s_max, -1, -1))
    for b in br:
        assert b.n_configs == math.ceil((s_max + 1) / (b.s + 1) * eta ** b.s)
        assert 1 <= b.initial_budget <= b_max


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 30), st.sampled_from([2, 3, 4]))
def test_survivors_never_beaten_by_better_front_dropouts(seed, n, eta):
    Y = np.round(np.random.default_rng(seed).random((n, 2)), 1)
    keep = sh_promote(Y, eta, (1.1, 1.1))
    assert len(keep) == max(1, n // eta)
    dropped = [i for i in range(n) if i not in keep]
    for i in keep:
        assert not any(dominates(Y[j], Y[i]) for j in dropped)
