import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from monas.pareto import (
    crowding_distance, dominates, hssp_greedy, hssp_remove_one, hv_contributions, hypervolume,
    nds, nds_crowding_order, pareto_front,
)
from oracles import (
    exhaustive_best_subset, exhaustive_remove_one, grid_hypervolume, mc_hypervolume, naive_peel,
    rectangle_union_2d,
)

TRIANGLE = [(0, 2), (1, 1), (2, 0)]


def point_sets(m, max_n=12):
    # a coarse grid produces plenty of ties and duplicates
    return arrays(float, st.tuples(st.integers(1, max_n), st.just(m)),
                  elements=st.integers(0, 6).map(float))


def test_dominates_examples():
    assert dominates((1, 2), (2, 3))
    assert not dominates((1, 2), (1, 2))
    assert not dominates((1, 3), (2, 2))
    with pytest.raises(ValueError):
        dominates((1, 2), (1, 2, 3))


def test_nds_examples():
    assert nds([(0, 0)]) == [[0]]
    assert nds([(0, 2), (2, 0), (1, 1), (2, 2)]) == [[0, 1, 2], [3]]


def test_nds_matches_naive_peel_3d():
    rng = np.random.default_rng(0)
    P = rng.random((200, 3))
    assert nds(P) == naive_peel(P)


def test_pareto_front_large_n_path():
    # above the size threshold the front is found by a sweep instead of a dense matrix
    rng = np.random.default_rng(1)
    P = np.round(rng.random((3000, 2)), 2)
    front = set(pareto_front(P))
    assert front == set(nds(P)[0])


def test_crowding_examples():
    assert np.all(np.isinf(crowding_distance([(0, 1), (1, 0)])))
    d = crowding_distance(TRIANGLE)
    assert np.isinf(d[0]) and np.isinf(d[2])
    assert d[1] == pytest.approx(2.0)


def test_crowding_duplicates_are_finite_and_equal():
    d = crowding_distance([(0, 4), (2, 2), (2, 2), (4, 0)])
    assert np.isfinite(d[1]) and d[1] == d[2]


def test_crowding_degenerate_objective():
    d = crowding_distance([(0, 1), (1, 1), (2, 1)])
    assert d[1] == pytest.approx(1.0)


def test_nds_crowding_order_prefers_boundary():
    order = nds_crowding_order([(0, 2), (1, 1), (2, 0), (3, 3)])
    assert order[-1] == 3 and order[-2] == 1


def test_hypervolume_examples():
    assert hypervolume([(1, 1)], (2, 2)) == 1.0
    assert hypervolume(TRIANGLE, (3, 3)) == pytest.approx(6.0)
    assert rectangle_union_2d(np.array(TRIANGLE, float), (3, 3)) == pytest.approx(6.0)
    assert hypervolume([(5, 5)], (3, 3)) == 0.0
    assert hypervolume(np.empty((0, 2)), (3, 3)) == 0.0


def test_hypervolume_3d_against_monte_carlo():
    rng = np.random.default_rng(2)
    P = rng.random((20, 3))
    ref = np.full(3, 1.1)
    est = mc_hypervolume(P, ref, 1_000_000, np.random.default_rng(3))
    assert hypervolume(P, ref) == pytest.approx(est, rel=0.01)


def test_hypervolume_4d_against_grid():
    rng = np.random.default_rng(4)
    P = rng.random((8, 4))
    ref = np.full(4, 1.0)
    assert hypervolume(P, ref) == pytest.approx(grid_hypervolume(P, ref), rel=1e-12)


def test_hypervolume_rejects_five_objectives():
    with pytest.raises(ValueError):
        hypervolume(np.zeros((2, 5)), np.ones(5))


def test_remove_one_against_exhaustive():
    rng = np.random.default_rng(5)
    for _ in range(30):
        n = int(rng.integers(2, 9))
        P = np.round(rng.random((n, 2)), 1)
        assert hssp_remove_one(P, (1.1, 1.1)) == exhaustive_remove_one(P, (1.1, 1.1))


def test_remove_one_two_points():
    # boxes of area 4 and 3 overlap in 2, so the union is 5
    P = [(1, 1), (0, 2)]
    assert grid_hypervolume(P, (3, 3)) == pytest.approx(5.0)
    assert hv_contributions(P, (3, 3)) == pytest.approx([2.0, 1.0])
    assert hssp_remove_one(P, (3, 3)) == 1 == exhaustive_remove_one(P, (3, 3))


def test_remove_one_duplicates_and_dominated():
    assert hssp_remove_one([(0, 2), (1, 1), (1, 1), (2, 0)], (3, 3)) == 1
    assert hssp_remove_one([(0, 2), (1, 1), (2, 0), (1.5, 1.5)], (3, 3)) == 3


def test_greedy_examples():
    # (1, 1) first, then the tie between the end points goes to the lower index
    assert hssp_greedy(TRIANGLE, 3, (3, 3)) == [1, 0, 2]
    assert hssp_greedy(TRIANGLE, 1, (3, 3)) == [1]
    assert hssp_greedy(TRIANGLE, 0, (3, 3)) == []
    with pytest.raises(ValueError):
        hssp_greedy(TRIANGLE, 4, (3, 3))


def test_greedy_close_to_exhaustive():
    rng = np.random.default_rng(6)
    ref = (1.1, 1.1)
    for _ in range(20):
        P = rng.random((6, 2))
        for k in (1, 2, 3):
            greedy = hypervolume(P[hssp_greedy(P, k, ref)], ref)
            best = exhaustive_best_subset(P, k, ref, hv=rectangle_union_2d)
            assert greedy >= 0.75 * best - 1e-12


@settings(max_examples=100, deadline=None)
@given(point_sets(2))
def test_nds_matches_peel_property(P):
    assert nds(P) == naive_peel(P)


@settings(max_examples=60, deadline=None)
@given(point_sets(3, 8))
def test_hypervolume_matches_grid_property(P):
    ref = np.full(3, 7.0)
    assert hypervolume(P, ref) == pytest.approx(grid_hypervolume(P, ref), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(point_sets(2), st.tuples(st.integers(0, 6), st.integers(0, 6)))
def test_adding_a_point_never_lowers_hypervolume(P, q):
    ref = (7.0, 7.0)
    assert hypervolume(np.vstack([P, q]), ref) >= hypervolume(P, ref) - 1e-12


@settings(max_examples=100, deadline=None)
@given(point_sets(2))
def test_dominated_points_do_not_matter(P):
    ref = (7.0, 7.0)
    front = P[pareto_front(P)]
    assert hypervolume(front, ref) == pytest.approx(hypervolume(P, ref))


@settings(max_examples=100, deadline=None)
@given(point_sets(3))
def test_first_front_is_the_non_dominated_set(P):
    first = set(nds(P)[0])
    for i in range(len(P)):
        dominated = any(dominates(P[j], P[i]) for j in range(len(P)))
        assert (i in first) == (not dominated)


@settings(max_examples=100, deadline=None)
@given(point_sets(2), st.floats(0.1, 10))
def test_scaling_an_objective_scales_hypervolume(P, a):
    ref = np.array([7.0, 7.0])
    Q = P.copy()
    Q[:, 0] *= a
    assert hypervolume(Q, ref * [a, 1]) == pytest.approx(a * hypervolume(P, ref), rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(point_sets(2, 8))
def test_fronts_partition_population(P):
    fronts = nds(P)
    flat = sorted(i for f in fronts for i in f)
    assert flat == list(range(len(P)))
    for r, f in enumerate(fronts):
        for later in fronts[r:]:
            assert not any(dominates(P[j], P[i]) for i in f for j in later)
