import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etconsensus import graph as gr
from etconsensus.checks import random_adjacency
from etconsensus.errors import NegativeWeightError, NonSymmetricError, NonzeroDiagonalError

EDGE = [[0.0, 1.0], [1.0, 0.0]]
TWO_EDGES = [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]


def test_two_agent_laplacian():
    g = gr.build_graph(EDGE)
    np.testing.assert_array_equal(g.laplacian, [[1, -1], [-1, 1]])


def test_ring_degrees_and_row_sums():
    g = gr.build_graph(gr.ring_adjacency(4))
    np.testing.assert_array_equal(g.degrees, [2, 2, 2, 2])
    assert np.all(g.laplacian.sum(axis=1) == 0.0)


@pytest.mark.parametrize("adj, err", [
    ([[0, 1], [0, 0]], NonSymmetricError),
    ([[0, -1], [-1, 0]], NegativeWeightError),
    ([[1, 1], [1, 0]], NonzeroDiagonalError),
])
def test_build_graph_rejects(adj, err):
    with pytest.raises(err):
        gr.build_graph(adj)


def test_spectra_of_small_graphs():
    np.testing.assert_allclose(gr.laplacian_spectrum(gr.build_graph(EDGE)), [0, 2], atol=1e-12)
    np.testing.assert_allclose(gr.laplacian_spectrum(gr.build_graph(TWO_EDGES)), [0, 0, 2, 2], atol=1e-12)


def test_ring4_spectrum_matches_circulant_and_lapack():
    # the 4-cycle Laplacian is circulant: eigenvalues 2 - 2 cos(2 pi k / 4)
    g = gr.build_graph(gr.ring_adjacency(4))
    analytic = np.sort(2 - 2 * np.cos(2 * np.pi * np.arange(4) / 4))
    ours = gr.laplacian_spectrum(g)
    np.testing.assert_allclose(ours, [0, 2, 2, 4], atol=1e-9)
    np.testing.assert_allclose(ours, analytic, atol=1e-12)
    np.testing.assert_allclose(ours, np.linalg.eigvalsh(g.laplacian), atol=1e-12)


@pytest.mark.parametrize("adj, expected", [
    (gr.ring_adjacency(4), True),
    (TWO_EDGES, False),
    ([[0, .5, 0, 0], [.5, 0, .5, 0], [0, .5, 0, .5], [0, 0, .5, 0]], True),
])
def test_connectivity_examples(adj, expected):
    g = gr.build_graph(adj)
    assert gr.is_connected(g) is expected
    assert gr.is_connected_bfs(g) is expected


def test_consensus_error_examples():
    assert np.all(gr.consensus_error(gr.build_graph(gr.ring_adjacency(4)), [3.0] * 4) == 0.0)
    np.testing.assert_array_equal(gr.consensus_error(gr.build_graph(EDGE), [1, 0]), [1, -1])
    np.testing.assert_array_equal(gr.consensus_error(gr.build_graph(gr.ring_adjacency(4)), [1, 0, 0, 0]), [2, -1, 0, -1])


def test_consensus_error_length_mismatch():
    with pytest.raises(ValueError):
        gr.consensus_error(gr.build_graph(EDGE), [1.0, 2.0, 3.0])


def test_spectral_and_bfs_agree_on_random_graphs():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        g = gr.build_graph(random_adjacency(rng, n, p_edge=rng.uniform(0.05, 0.9)))
        assert gr.is_connected_spectral(g) == gr.is_connected_bfs(g)


adjacencies = st.integers(1, 8).flatmap(lambda n: st.lists(
    st.floats(0.0, 3.0, allow_nan=False), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2,
).map(lambda w, n=n: _from_upper(n, w)))


def _from_upper(n, w):
    a = np.zeros((n, n))
    a[np.triu_indices(n, 1)] = w
    return a + a.T


@settings(max_examples=200, deadline=None)
@given(adjacencies)
def test_laplacian_properties(adj):
    g = gr.build_graph(adj)
    # exact for integer weights; general reals leave round-off in d_i - sum a_ij
    assert np.max(np.abs(g.laplacian @ np.ones(g.n_agents))) <= 4 * np.finfo(float).eps * max(1.0, g.degrees.max())
    gi = gr.build_graph(np.round(adj))
    assert np.all(gi.laplacian @ np.ones(gi.n_agents) == 0.0)
    ev = gr.laplacian_spectrum(g)
    assert np.all(np.diff(ev) >= 0.0)
    assert ev[0] >= -1e-9 and abs(ev[0]) <= 1e-9
    np.testing.assert_allclose(ev, np.linalg.eigvalsh(g.laplacian), atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(adjacencies, st.data())
def test_consensus_error_sums_to_zero(adj, data):
    g = gr.build_graph(adj)
    vals = np.array(data.draw(st.lists(st.floats(-10, 10), min_size=g.n_agents, max_size=g.n_agents)))
    e = gr.consensus_error(g, vals)
    assert abs(e.sum()) <= 1e-12 * max(1.0, np.abs(adj).sum() * np.abs(vals).max(initial=0.0))
    np.testing.assert_allclose(e, g.laplacian @ vals, atol=1e-12)
