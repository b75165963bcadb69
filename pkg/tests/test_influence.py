"""Influence map estimation.

The toy linear model gives closed forms to check against: with both
latents uniform on [-1, 1], swapping v1 changes output channel 0 (and the
sum channel) by |z2 - z1|, whose expectation is 2/3, and leaves channel 1
untouched.  The planted generator gives exact structural facts: influence
is identically zero outside a block's image region, and the map of a union
of whole blocks restricted to one block's region equals that block's own
map bit for bit, because the other blocks contribute exact zeros there.
"""

from __future__ import annotations

import numpy as np
import pytest

from genlens.errors import ValidationError
from genlens.factories import make_planted_generator, make_toy_linear
from genlens.influence import (
    EimStack,
    InfluenceMap,
    elementary_influence_maps,
    individual_influence,
    influence_map,
    influence_size_regression,
    module_influence_maps,
)
from genlens.interventions import ModuleSel


def region_mask(region, size):
    y0, y1, x0, x1 = region
    m = np.zeros((size, size), bool)
    m[y0:y1, x0:x1] = True
    return m


# -- toy closed form ---------------------------------------------------------------


def test_toy_influence_matches_closed_form():
    g = make_toy_linear()
    m = influence_map(g, ModuleSel("units", [("v1", 0)]), n_pairs=4096, seed=1)
    per = m.per_channel.reshape(3)
    # E|z2 - z1| = 2/3 for independent uniforms on [-1, 1]
    assert per[0] == pytest.approx(2.0 / 3.0, abs=0.03)
    assert per[1] == 0.0
    assert per[2] == pytest.approx(2.0 / 3.0, abs=0.03)
    assert m.gray.reshape(()) == pytest.approx(4.0 / 9.0, abs=0.03)
    assert individual_influence(m) == pytest.approx(4.0 / 9.0, abs=0.03)


def test_toy_seed_invariance():
    g = make_toy_linear()
    vals = [
        individual_influence(influence_map(g, ModuleSel("units", [("v1", 0)]), 4096, seed=s))
        for s in (1, 2)
    ]
    assert abs(vals[0] - vals[1]) < 0.03


def test_gray_is_unweighted_channel_mean():
    g = make_toy_linear()
    m = influence_map(g, ModuleSel("units", [("v2", 0)]), n_pairs=64, seed=3)
    np.testing.assert_array_equal(m.gray, m.per_channel.mean(axis=0).astype(np.float32))


def test_empty_module_influence_is_exactly_zero():
    g = make_toy_linear()
    m = influence_map(g, ModuleSel("units", []), n_pairs=32, seed=0)
    np.testing.assert_array_equal(m.per_channel, np.zeros_like(m.per_channel))
    assert individual_influence(m) == 0.0


def test_rerun_is_bit_identical():
    g = make_toy_linear()
    a = influence_map(g, ModuleSel("units", [("v1", 0)]), n_pairs=48, seed=5)
    b = influence_map(g, ModuleSel("units", [("v1", 0)]), n_pairs=48, seed=5)
    np.testing.assert_array_equal(a.per_channel, b.per_channel)


def test_worker_count_does_not_change_results():
    planted = make_planted_generator(blocks=2, image_size=8, channels_per_block=2, seed=4)
    module = ModuleSel("mid", [planted.graph.layers["mid"].variables[0]])
    serial = influence_map(planted.graph, module, n_pairs=40, seed=2, workers=1)
    threaded = influence_map(planted.graph, module, n_pairs=40, seed=2, workers=3)
    np.testing.assert_array_equal(serial.per_channel, threaded.per_channel)


def test_invalid_pair_budget():
    g = make_toy_linear()
    with pytest.raises(ValidationError, match="at least 1"):
        influence_map(g, ModuleSel("units", [("v1", 0)]), n_pairs=0)


def test_module_outside_layer_rejected():
    g = make_toy_linear()
    with pytest.raises(ValidationError, match="not a variable of layer|not in layer"):
        influence_map(g, ModuleSel("units", [("image", 0)]), n_pairs=4)


# -- planted structure --------------------------------------------------------------


@pytest.fixture(scope="module")
def planted():
    return make_planted_generator(
        blocks=3, latents_per_block=3, channels_per_block=4, image_size=16, seed=5
    )


def block_channels(planted, b):
    variables = planted.graph.layers[planted.layer].variables
    return [v for v, lab in zip(variables, planted.labels) if lab == b]


def test_influence_zero_outside_block_region(planted):
    g = planted.graph
    m = influence_map(g, ModuleSel("mid", block_channels(planted, 1)), n_pairs=24, seed=7)
    inside = region_mask(planted.regions[1], 16)
    assert np.all(m.gray[~inside] == 0.0)
    assert float(m.gray[inside].max()) > 0.0


def test_union_map_restricted_to_block_equals_block_map(planted):
    """Blocks other than b contribute exact zeros on b's region, so the
    union's map there must equal the single-block map bitwise."""
    g = planted.graph
    e1 = block_channels(planted, 0)
    union = e1 + block_channels(planted, 2)
    maps = module_influence_maps(g, "mid", [e1, union], n_pairs=24, seed=9)
    inside = region_mask(planted.regions[0], 16)
    np.testing.assert_array_equal(
        maps[1].per_channel[:, inside], maps[0].per_channel[:, inside]
    )
    outside2 = region_mask(planted.regions[2], 16)
    assert np.all(maps[0].per_channel[:, outside2] == 0.0)
    assert float(maps[1].per_channel[:, outside2].max()) > 0.0


def test_shared_samples_match_single_runs(planted):
    """module_influence_maps reuses one sample stream for all modules, so a
    single-module run with the same seed gives the identical map."""
    g = planted.graph
    e1 = block_channels(planted, 0)
    e2 = block_channels(planted, 1)
    joint = module_influence_maps(g, "mid", [e1, e2], n_pairs=16, seed=11)
    solo = influence_map(g, ModuleSel("mid", e1), n_pairs=16, seed=11)
    np.testing.assert_array_equal(joint[0].per_channel, solo.per_channel)


def test_elementary_stack_rows_match_single_channel_maps(planted):
    g = planted.graph
    stack = elementary_influence_maps(g, "mid", n_pairs=16, seed=13)
    variables = g.layers["mid"].variables
    assert isinstance(stack, EimStack)
    assert stack.rows.shape == (len(variables), 16 * 16)
    assert (stack.height, stack.width) == (16, 16)
    assert not stack.binary

    probe = 5
    solo = influence_map(g, ModuleSel("mid", [variables[probe]]), n_pairs=16, seed=13)
    np.testing.assert_array_equal(stack.maps()[probe], solo.gray)


def test_elementary_stack_respects_regions(planted):
    g = planted.graph
    stack = elementary_influence_maps(g, "mid", n_pairs=16, seed=13)
    for row, label in zip(stack.maps(), planted.labels):
        outside = ~region_mask(planted.regions[label], 16)
        assert np.all(row[outside] == 0.0)


def test_stack_requires_image_output():
    g = make_toy_linear()
    stack = elementary_influence_maps(g, "units", n_pairs=8, seed=0)
    assert stack.rows.shape == (2, 1)  # 1x1 image is still an image


# -- size regression -----------------------------------------------------------------


def test_regression_recovers_exact_line():
    pts = [(1.0, 0.5), (2.0, 0.9), (3.0, 1.3), (4.0, 1.7)]
    fit = influence_size_regression(pts)
    assert fit.slope == pytest.approx(0.4, abs=1e-12)
    assert fit.intercept == pytest.approx(0.1, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.n_points == 4


def test_regression_r2_measures_scatter():
    rng = np.random.default_rng(0)
    x = np.arange(1, 41, dtype=np.float64)
    y = 0.25 * x + rng.normal(scale=0.05, size=x.size)
    fit = influence_size_regression(list(zip(x, y)))
    assert fit.slope == pytest.approx(0.25, abs=0.01)
    assert fit.r_squared > 0.99


def test_regression_errors():
    with pytest.raises(ValidationError, match="two points"):
        influence_size_regression([(1.0, 1.0)])
    with pytest.raises(ValidationError, match="distinct module sizes"):
        influence_size_regression([(2.0, 1.0), (2.0, 3.0)])


def test_constant_response_has_unit_r2():
    fit = influence_size_regression([(1.0, 2.0), (2.0, 2.0), (3.0, 2.0)])
    assert fit.slope == 0.0
    assert fit.r_squared == 1.0
