import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from etconsensus.checks import lemma2_suite, projection_suite
from etconsensus.errors import DimensionMismatchError, NonPositiveGainError
from etconsensus.rbf import (
    RbfLayout,
    RbfNetwork,
    adapt_step,
    basis_jacobian,
    basis_shift_bound,
    eval_basis,
    eval_network,
    grid_layout,
    project_weights,
)

LINE = RbfLayout(np.array([[0.0], [2.0]]), 2.0)


def test_basis_values():
    assert eval_basis(LINE, [0.0])[0] == 1.0
    assert eval_basis(LINE, [2.0])[0] == pytest.approx(math.exp(-1.0), rel=1e-15)
    far = eval_basis(LINE, [1e3])
    assert np.all(far >= 0.0) and np.all(far < 1e-300)


def test_network_values():
    assert eval_network(RbfNetwork.zeros(LINE), [0.7]) == 0.0
    single = RbfNetwork(RbfLayout(np.array([[0.5]]), 1.0), np.array([2.0]))
    assert eval_network(single, [0.5]) == 2.0
    # midpoint of centers 0 and 4 with width 2 is one width from each
    pair = RbfNetwork(RbfLayout(np.array([[0.0], [4.0]]), 2.0), np.array([1.0, 1.0]))
    assert eval_network(pair, [2.0]) == pytest.approx(2 * math.exp(-1.0), rel=1e-15)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        eval_basis(LINE, [0.0, 1.0])


@pytest.mark.parametrize("w, bound, expected", [
    ([0.1, 0.2], 1.0, [0.1, 0.2]),
    ([3.0, 4.0], 2.5, [1.5, 2.0]),
    ([0.0, 0.0], 3.0, [0.0, 0.0]),
])
def test_projection_examples(w, bound, expected):
    np.testing.assert_allclose(project_weights(w, bound), expected, rtol=1e-14)


def test_adapt_step_examples():
    lay = RbfLayout(np.array([[0.0]]), 1.0)
    net = RbfNetwork.zeros(lay)
    assert adapt_step(net, [1.0], 1.0, 0.005, 0.001).weights[0] == pytest.approx(5e-6, rel=1e-12)
    w = RbfNetwork(grid_layout(1, 3, 1.0), np.array([0.3, -0.2, 0.1]))
    np.testing.assert_array_equal(adapt_step(w, eval_basis(w.layout, [0.2]), 0.0, 0.005, 0.001).weights, w.weights)
    sat = RbfNetwork(lay, np.array([10.0]), 10.0)
    out = adapt_step(sat, [1.0], 1.0, 0.005, 0.001)
    assert abs(out.weights[0]) <= 10.0 and out.weights[0] == pytest.approx(10.0, rel=1e-14)


def test_adapt_step_gain_checks():
    net = RbfNetwork.zeros(grid_layout(1, 2, 1.0))
    with pytest.raises(NonPositiveGainError):
        adapt_step(net, [1.0, 1.0], 1.0, -1.0, 1e-3)
    with pytest.raises(NonPositiveGainError):
        adapt_step(net, [1.0, 1.0], 1.0, np.array([[1.0, 0.0], [0.0, -1.0]]), 1e-3)
    out = adapt_step(net, [1.0, 0.5], 2.0, 3.0 * np.eye(2), 1e-3)
    np.testing.assert_allclose(out.weights, [6e-3, 3e-3], rtol=1e-14)


def test_basis_shift_bound_examples():
    lay = grid_layout(1, 25, 2.0)
    assert basis_shift_bound(lay, [0.0]) == 0.0
    ds = basis_shift_bound(lay, [1e-3])
    assert ds == pytest.approx(5 * math.sqrt(2 / math.e) / 2 * 1e-3, rel=1e-15)
    assert ds == pytest.approx(0.0021444, abs=5e-8)
    assert basis_shift_bound(lay, [2e-3]) == pytest.approx(2 * ds, rel=1e-15)


def test_gaussian_slope_constant_by_dense_search():
    # independent check of max |d/dr exp(-r^2/w^2)| = sqrt(2/e)/w
    r = np.linspace(0, 10, 2_000_001)
    slope = np.max(np.abs(-2 * r / 4.0 * np.exp(-r**2 / 4.0)))
    assert slope == pytest.approx(math.sqrt(2 / math.e) / 2.0, rel=1e-10)


def test_jacobian_matches_central_differences():
    lay = grid_layout(3, 25, 2.0)
    rng = np.random.default_rng(1)
    h = 1e-6
    for beta in rng.uniform(-2.5, 2.5, (20, 3)):
        jac = basis_jacobian(lay, beta)
        fd = np.stack([(eval_basis(lay, beta + h * e) - eval_basis(lay, beta - h * e)) / (2 * h) for e in np.eye(3)], axis=-1)
        np.testing.assert_allclose(jac, fd, atol=1e-9)


def test_grid_layouts():
    one = grid_layout(1, 25, 2.0)
    assert one.centers.shape == (25, 1) and one.centers[0, 0] == -2.0 and one.centers[-1, 0] == 2.0
    three = grid_layout(3, 25, 2.0)
    assert three.centers.shape == (25, 3) and np.all(three.centers[:, 2] == 0.0)
    with pytest.raises(ValueError):
        grid_layout(2, 24, 2.0)


def test_lemma2_suites_have_no_violations():
    assert lemma2_suite(seed=11).passed
    assert lemma2_suite(seed=11, input_dim=3).passed


def test_projection_suite():
    assert projection_suite(seed=5, trials=2000).passed


vectors = arrays(np.float64, 6, elements=st.floats(-50, 50))


@settings(max_examples=300, deadline=None)
@given(vectors, vectors, st.floats(0.1, 20))
def test_projection_properties(w1, w2, bound):
    p1, p2 = project_weights(w1, bound), project_weights(w2, bound)
    assert np.linalg.norm(p1) <= bound
    np.testing.assert_array_equal(project_weights(p1, bound), p1)
    assert np.linalg.norm(p1 - p2) <= np.linalg.norm(w1 - w2) * (1 + 1e-12) + 1e-12


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, 25, elements=st.floats(-10, 10)), st.floats(-100, 100), st.floats(1e-4, 1.0),
       st.floats(1e-5, 0.1), st.floats(-3, 3))
def test_adapt_step_never_leaves_ball(w0, z, gain, dt, beta):
    lay = grid_layout(1, 25, 2.0)
    net = RbfNetwork(lay, project_weights(w0, 10.0), 10.0)
    out = adapt_step(net, eval_basis(lay, [beta]), z, gain, dt)
    assert np.linalg.norm(out.weights) <= 10.0


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, 3, elements=st.floats(-3, 3)), arrays(np.float64, 3, elements=st.floats(-1e-3, 1e-3)))
def test_basis_shift_is_bounded(beta, shift):
    lay = grid_layout(3, 25, 2.0)
    gap = np.linalg.norm(eval_basis(lay, beta) - eval_basis(lay, beta + shift))
    assert gap <= basis_shift_bound(lay, np.abs(shift)) * (1 + 1e-12) + 1e-18
