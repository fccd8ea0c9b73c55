import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import norm

from monas.space import (
    Condition, ParamSpec, SearchSpace, build_cnn_space, config_key, decode, encode,
    gaussian_perturb, layered_params, mutate_k, recombine, sample_uniform, sample_unit,
)

SPACE = build_cnn_space()
seeds = st.integers(0, 2 ** 32 - 1)


def test_cnn_space_has_fifteen_slots():
    assert SPACE.dim == 15
    assert sum(n.startswith("num_filters") for n in SPACE.names) == 3
    assert sum(n.startswith("num_neurons") for n in SPACE.names) == 3


def test_cnn_space_ranges():
    assert SPACE["num_filters_1"].lo == 16 and SPACE["num_filters_1"].hi == 1024
    assert SPACE["num_neurons_2"].lo == 2 and SPACE["num_neurons_2"].hi == 512
    assert SPACE["learning_rate"].log and SPACE["learning_rate"].lo == 1e-5
    assert SPACE["batch_size"].lo == 1 and SPACE["batch_size"].hi == 512
    assert SPACE["kernel_size_1"].values == (3, 5, 7)


def test_json_round_trip():
    again = SearchSpace.from_json(SPACE.to_json())
    assert again.names == SPACE.names
    assert again.params == SPACE.params


def test_one_conv_layer_has_one_filter_slot():
    rng = np.random.default_rng(0)
    seen = 0
    while seen < 20:
        c = sample_uniform(SPACE, rng)
        if c["num_conv_layers"] == 1:
            seen += 1
            assert [k for k in c if k.startswith("num_filters")] == ["num_filters_1"]


def test_kernel_size_frequencies():
    rng = np.random.default_rng(1)
    ks = [sample_uniform(SPACE, rng)["kernel_size_1"] for _ in range(10_000)]
    for v in (3, 5, 7):
        assert abs(ks.count(v) / len(ks) - 1 / 3) < 0.02


def test_log_uniform_median():
    rng = np.random.default_rng(2)
    f = [sample_uniform(SPACE, rng)["num_filters_1"] for _ in range(10_000)]
    assert 2 ** 6.6 <= np.median(f) <= 2 ** 7.4


def test_singleton_categorical():
    space = SearchSpace((ParamSpec("a", "categorical", values=(5,)),))
    rng = np.random.default_rng(0)
    assert all(sample_uniform(space, rng) == {"a": 5} for _ in range(10))


def test_learning_rate_endpoints():
    i = SPACE.index("learning_rate")
    assert encode(SPACE, {**sample_uniform(SPACE, np.random.default_rng(0)), "learning_rate": 1e-5})[i] == 0.0
    assert SPACE["learning_rate"].encode(1.0) == 1.0


def test_kernel_coord_decodes_to_nearest_category():
    assert SPACE["kernel_size_1"].decode(0.49) == 5
    # ties go to the lower value
    assert SPACE["kernel_size_1"].decode(0.25) == 3


def test_decode_rejects_out_of_cube():
    x = np.full(SPACE.dim, 0.5)
    x[3] = 1.2
    with pytest.raises(ValueError):
        decode(SPACE, x)


def test_round_trip_thousand_samples():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        c = sample_uniform(SPACE, rng)
        assert decode(SPACE, encode(SPACE, c)) == c


def test_inactive_slots_encode_to_zero():
    c = {"num_conv_layers": 1, "num_filters_1": 64, "kernel_size_1": 5, "batch_norm": True,
         "global_avg_pool": False, "num_fc_layers": 1, "num_neurons_1": 32,
         "learning_rate": 1e-3, "batch_size": 32}
    SPACE.validate(c)
    x = encode(SPACE, c)
    for name in ("num_filters_2", "num_filters_3", "kernel_size_2", "num_neurons_3"):
        assert x[SPACE.index(name)] == 0.0


def test_validate_catches_inactive_and_out_of_range():
    c = sample_uniform(SPACE, np.random.default_rng(4))
    with pytest.raises(ValueError):
        SPACE.validate({**c, "num_conv_layers": 1, "num_filters_3": 32})
    with pytest.raises(ValueError):
        SPACE.validate({**c, "learning_rate": 10.0})


def test_spec_invariants():
    with pytest.raises(ValueError):
        ParamSpec("x", "continuous", 1.0, 1.0)
    with pytest.raises(ValueError):
        ParamSpec("x", "continuous", 0.0, 1.0, log=True)
    with pytest.raises(ValueError):
        SearchSpace((ParamSpec("b", "integer", 0, 3, condition=Condition("a", "geq", 1)),
                     ParamSpec("a", "integer", 0, 3)))
    with pytest.raises(ValueError):
        SearchSpace((ParamSpec("a", "integer", 0, 3), ParamSpec("a", "integer", 0, 3)))


def test_mutate_zero_is_copy():
    c = sample_uniform(SPACE, np.random.default_rng(5))
    assert mutate_k(SPACE, c, 0, np.random.default_rng(0)) == c


def test_mutate_five_changes_at_most_five_shared_values():
    rng = np.random.default_rng(6)
    for _ in range(200):
        parent = sample_uniform(SPACE, rng)
        child = mutate_k(SPACE, parent, 5, rng)
        structural = {"num_conv_layers", "num_fc_layers"}
        # newly activated slots are fresh samples, so only compare slots present in both
        changed = [k for k in parent if k in child and k not in structural and child[k] != parent[k]]
        assert len(changed) <= 5
        SPACE.validate(child)


def test_growing_conv_layers_populates_new_slots():
    rng = np.random.default_rng(7)
    parent = sample_uniform(SPACE, rng)
    parent = SPACE.repair({**parent, "num_conv_layers": 1}, rng)
    for _ in range(500):
        child = mutate_k(SPACE, parent, 1, rng)
        if child["num_conv_layers"] == 3:
            for i in (2, 3):
                assert 16 <= child[f"num_filters_{i}"] <= 1024
                assert child[f"kernel_size_{i}"] in (3, 5, 7)
            return
    pytest.fail("never resampled num_conv_layers to 3")


def test_recombine_identical_parents():
    c = sample_uniform(SPACE, np.random.default_rng(8))
    assert recombine(SPACE, c, c, np.random.default_rng(1)) == c


def test_recombine_fairness():
    space = SearchSpace(tuple(ParamSpec(n, "continuous", 0.0, 1.0) for n in "xyz"))
    a, b = {"x": 0.0, "y": 0.0, "z": 0.0}, {"x": 1.0, "y": 1.0, "z": 1.0}
    rng = np.random.default_rng(9)
    kids = [recombine(space, a, b, rng) for _ in range(10_000)]
    for n in "xyz":
        assert abs(np.mean([k[n] == 0.0 for k in kids]) - 0.5) < 0.02


def test_recombine_fills_slots_missing_in_donor():
    rng = np.random.default_rng(10)
    a = SPACE.repair({"num_fc_layers": 1}, rng)
    b = SPACE.repair({"num_fc_layers": 3}, rng)
    hits = 0
    for _ in range(300):
        child = recombine(SPACE, a, b, rng)
        SPACE.validate(child)
        if child["num_fc_layers"] == 3:
            hits += 1
            assert all(f"num_neurons_{i}" in child for i in (1, 2, 3))
    assert hits > 0


def test_perturb_with_tiny_sigma_is_identity():
    c = sample_uniform(SPACE, np.random.default_rng(11))
    assert gaussian_perturb(SPACE, c, 1e-15, np.random.default_rng(0)) == c


def test_perturb_clamps_upper_boundary():
    space = SearchSpace((ParamSpec("x", "continuous", 0.0, 1.0),))
    rng = np.random.default_rng(12)
    for _ in range(100):
        assert 0.0 <= gaussian_perturb(space, {"x": 1.0}, 0.3, rng)["x"] <= 1.0


def test_perturb_kernel_change_rate():
    # kernel coordinate sits at 0, 0.5 or 1; cells end at 0.25 and 0.75, and clamping
    # means the end categories can only move inwards
    sigma = 0.1
    tail = 1 - norm.cdf(0.25 / sigma)
    expected = {3: tail, 5: 2 * tail, 7: tail}
    rng = np.random.default_rng(13)
    base = sample_uniform(SPACE, rng)
    for k, p in expected.items():
        parent = {**base, "kernel_size_1": k}
        changed = np.mean([gaussian_perturb(SPACE, parent, sigma, rng)["kernel_size_1"] != k
                           for _ in range(1000)])
        assert abs(changed - p) < 0.05


def test_sample_unit_decodes_uniformly():
    rng = np.random.default_rng(14)
    X = sample_unit(SPACE, rng, 6000)
    ks = [decode(SPACE, x)["kernel_size_1"] for x in X]
    layers = [decode(SPACE, x)["num_conv_layers"] for x in X]
    for v in (3, 5, 7):
        assert abs(ks.count(v) / len(ks) - 1 / 3) < 0.025
    for v in (1, 2, 3):
        assert abs(layers.count(v) / len(layers) - 1 / 3) < 0.025


def test_layered_params_conditions():
    ps = layered_params("w", "n", 3, 2, 8)
    assert ps[0].condition is None
    assert ps[2].condition == Condition("n", "geq", 3)


def test_integer_log_decode_rounds_in_linear_domain():
    p = ParamSpec("b", "integer", 1, 512, log=True)
    # the cut between 2 and 3 sits at 2.5 in the linear domain, not at sqrt(6)
    x = (math.log(2.5) - math.log(1)) / (math.log(512) - math.log(1))
    assert p.decode(x - 1e-6) == 2
    assert p.decode(x + 1e-6) == 3
    assert math.sqrt(6) < 2.5


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_round_trip_property(seed):
    c = sample_uniform(SPACE, np.random.default_rng(seed))
    assert decode(SPACE, encode(SPACE, c)) == c


@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(0, 15), st.floats(1e-3, 0.5))
def test_operators_return_valid_configurations(seed, k, sigma):
    rng = np.random.default_rng(seed)
    a, b = sample_uniform(SPACE, rng), sample_uniform(SPACE, rng)
    for child in (mutate_k(SPACE, a, k, rng), recombine(SPACE, a, b, rng),
                  gaussian_perturb(SPACE, a, sigma, rng)):
        SPACE.validate(child)
        assert np.all((encode(SPACE, child) >= 0) & (encode(SPACE, child) <= 1))


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_operators_are_seed_deterministic(seed):
    a = sample_uniform(SPACE, np.random.default_rng(seed))
    b = sample_uniform(SPACE, np.random.default_rng(seed + 1))

    def run(s):
        rng = np.random.default_rng(s)
        return [config_key(mutate_k(SPACE, a, 5, rng)), config_key(recombine(SPACE, a, b, rng)),
                config_key(gaussian_perturb(SPACE, a, 0.1, rng))]

    assert run(seed) == run(seed)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-5, 1.0))
def test_log_encoding_is_affine_in_log(lr):
    p = SPACE["learning_rate"]
    assert p.encode(lr) == pytest.approx((math.log10(lr) + 5) / 5, abs=1e-12)
