import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from prodgraph.graphs import (
    EigengapWarning,
    Graph,
    GraphError,
    InteractionGraphSpec,
    NumericError,
    build_interaction,
    check_gamma,
    gen_core_periphery,
    gen_erdos_renyi,
    gen_path,
    interaction_matrix,
    max_degree_scale,
    read_dense,
    read_edgelist,
    sym_evd,
    write_dense,
    write_edgelist,
)


def kron_loop(a, b):
    """Kronecker product by explicit index arithmetic."""
    m, p = a.shape
    n, q = b.shape
    out = np.zeros((m * n, p * q))
    for i in range(m):
        for j in range(p):
            for k in range(n):
                for l in range(q):
                    out[i * n + k, j * q + l] = a[i, j] * b[k, l]
    return out


# --- Graph ----------------------------------------------------------------

def test_graph_rejects_asymmetric():
    with pytest.raises(GraphError, match="symmetric"):
        Graph(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_graph_rejects_nonfinite():
    with pytest.raises((GraphError, NumericError)):
        Graph(np.array([[0.0, np.nan], [np.nan, 0.0]]))


def test_graph_is_read_only():
    g = gen_path(3)
    with pytest.raises(ValueError):
        g.adj[0, 1] = 5.0


def test_graph_edges_and_degrees():
    g = gen_path(4)
    assert g.num_edges() == 3
    np.testing.assert_array_equal(g.degrees(), [1, 2, 2, 1])
    assert [e[:2] for e in g.edges()] == [(0, 1), (1, 2), (2, 3)]


# --- generators -------------------------------------------------------------

def test_er_extremes(rng):
    np.testing.assert_array_equal(gen_erdos_renyi(3, 0.0, rng).adj, np.zeros((3, 3)))
    np.testing.assert_array_equal(gen_erdos_renyi(3, 1.0, rng).adj, 1 - np.eye(3))


def test_er_invalid_size(rng):
    with pytest.raises(GraphError):
        gen_erdos_renyi(1, 0.5, rng)


def test_er_mean_edge_count(rng):
    counts = [gen_erdos_renyi(10, 0.4, rng).num_edges() for _ in range(1000)]
    assert abs(np.mean(counts) - 18) < 1


def test_er_same_seed_same_graph():
    a = gen_erdos_renyi(12, 0.3, np.random.default_rng(7))
    b = gen_erdos_renyi(12, 0.3, np.random.default_rng(7))
    np.testing.assert_array_equal(a.adj, b.adj)


def test_core_periphery_core_is_complete(rng):
    g, core = gen_core_periphery(12, 10, 0.3, 0.3, rng)
    assert core == frozenset(range(10))
    np.testing.assert_array_equal(g.adj[:10, :10], 1 - np.eye(10))


def test_core_periphery_empty(rng):
    g, _ = gen_core_periphery(3, 1, 0.0, 0.0, rng)
    assert g.num_edges() == 0


def test_core_periphery_invalid_partition(rng):
    with pytest.raises(GraphError):
        gen_core_periphery(5, 5, rng=rng)


def test_core_periphery_periphery_edge_mean(rng):
    counts = []
    for _ in range(1000):
        g, _ = gen_core_periphery(80, 10, 0.2, 0.05, rng)
        counts.append(np.triu(g.adj[10:, 10:], 1).sum())
    assert abs(np.mean(counts) - 0.05 * math.comb(70, 2)) < 15


@pytest.mark.parametrize("n, edges", [(2, 1), (3, 2), (4, 3)])
def test_path(n, edges):
    assert gen_path(n).num_edges() == edges


def test_path_p3():
    np.testing.assert_array_equal(gen_path(3).adj, [[0, 1, 0], [1, 0, 1], [0, 1, 0]])


# --- interaction graph ----------------------------------------------------------

SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_interaction_pure_kronecker():
    ai = interaction_matrix(SWAP, SWAP, (0, 0, 1))
    expected = np.block([[np.zeros((2, 2)), SWAP], [SWAP, np.zeros((2, 2))]])
    np.testing.assert_array_equal(ai, expected)


def test_interaction_supra_adjacency():
    ai = interaction_matrix(SWAP, SWAP, (0.5, 0.5, 0))
    expected = 0.5 * (np.kron(np.eye(2), SWAP) + np.kron(SWAP, np.eye(2)))
    np.testing.assert_allclose(ai, expected)


def test_interaction_against_loop_oracle(rng):
    ac = gen_erdos_renyi(3, 0.6, rng).adj
    ag = gen_erdos_renyi(4, 0.6, rng).adj
    terms = [kron_loop(np.eye(3), ag), kron_loop(ac, np.eye(4)), kron_loop(ac, ag)]
    ai = interaction_matrix(ac, ag, (1 / 3, 1 / 3, 1 / 3))
    np.testing.assert_allclose(ai, np.mean(terms, axis=0), atol=1e-15)


def test_build_interaction_graph():
    spec = InteractionGraphSpec(gen_path(3), gen_path(2), (0.2, 0.3, 0.5))
    g = build_interaction(spec)
    assert g.n == 6
    np.testing.assert_allclose(g.adj, interaction_matrix(gen_path(3).adj, gen_path(2).adj,
                                                         (0.2, 0.3, 0.5)))


@pytest.mark.parametrize("gamma", [(0.5, 0.5, 0.5), (-0.1, 0.6, 0.5), (0.2, 0.2)])
def test_gamma_off_simplex(gamma):
    with pytest.raises(GraphError):
        check_gamma(gamma)


@st.composite
def simplex_points(draw):
    w = draw(st.lists(st.floats(0, 1), min_size=3, max_size=3).filter(lambda v: sum(v) > 1e-3))
    s = sum(w)
    return tuple(x / s for x in w)


@settings(max_examples=40, deadline=None)
@given(gamma=simplex_points(), seed=st.integers(0, 2**31 - 1))
def test_interaction_is_symmetric_and_zero_diagonal(gamma, seed):
    rng = np.random.default_rng(seed)
    ac = gen_erdos_renyi(3, 0.5, rng).adj
    ag = gen_erdos_renyi(4, 0.5, rng).adj
    ai = interaction_matrix(ac, ag, gamma)
    np.testing.assert_allclose(ai, ai.T)
    # zero-diagonal factors have zero-diagonal products
    np.testing.assert_allclose(np.diag(ai), 0.0, atol=1e-15)


# --- eigendecomposition -----------------------------------------------------------

def test_evd_identity():
    e = sym_evd(np.eye(3))
    np.testing.assert_allclose(e.values, [1, 1, 1])
    np.testing.assert_allclose(e.vectors.T @ e.vectors, np.eye(3), atol=1e-14)
    assert e.degenerate


def test_evd_identity_warns():
    with pytest.warns(EigengapWarning):
        sym_evd(np.eye(3), warn=True)


def test_evd_swap():
    e = sym_evd(SWAP)
    np.testing.assert_allclose(e.values, [1, -1])
    s = 1 / np.sqrt(2)
    np.testing.assert_allclose(np.abs(e.vectors), np.full((2, 2), s))
    np.testing.assert_allclose(e.vectors[:, 0], [s, s])


def test_evd_nonfinite():
    with pytest.raises(NumericError):
        sym_evd(np.array([[np.inf, 0.0], [0.0, 1.0]]))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (5, 5), elements=st.floats(-10, 10)))
def test_evd_reconstruction(a):
    a = (a + a.T) / 2
    e = sym_evd(a)
    assert np.all(np.diff(e.values) <= 0)
    np.testing.assert_allclose(e.vectors.T @ e.vectors, np.eye(5), atol=1e-10)
    scale = max(1.0, np.abs(a).max())
    np.testing.assert_allclose((e.vectors * e.values) @ e.vectors.T, a, atol=1e-10 * scale)
    # sign convention: largest-magnitude entry of each column is positive
    idx = np.argmax(np.abs(e.vectors), axis=0)
    assert np.all(e.vectors[idx, np.arange(5)] > 0)


# --- scaling -------------------------------------------------------------------------

def test_max_degree_scale():
    assert max_degree_scale(Graph(1 - np.eye(3))) == 0.5
    assert max_degree_scale(gen_path(3)) == 0.5
    assert max_degree_scale(Graph(np.zeros((4, 4)))) == 1.0


# --- file formats -----------------------------------------------------------------

def test_edgelist_round_trip(tmp_path, rng):
    w = np.triu(rng.uniform(0.1, 2.0, (6, 6)) * (rng.random((6, 6)) < 0.5), 1)
    g = Graph(w + w.T)
    write_edgelist(g, tmp_path / "g.csv")
    text = (tmp_path / "g.csv").read_text().splitlines()
    assert text[0].startswith("#")
    h = read_edgelist(tmp_path / "g.csv")
    np.testing.assert_array_equal(h.adj, g.adj)


def test_edgelist_is_one_based(tmp_path):
    write_edgelist(gen_path(2), tmp_path / "p.csv")
    rows = [line for line in (tmp_path / "p.csv").read_text().splitlines()
            if not line.startswith("#")]
    assert rows[0].split(",")[:2] == ["1", "2"]


def test_edgelist_bad_row(tmp_path):
    (tmp_path / "bad.csv").write_text("# n=3\n1,2,1.0\n1,x,1.0\n")
    with pytest.raises(GraphError, match=r"bad.csv:3"):
        read_edgelist(tmp_path / "bad.csv")


def test_dense_round_trip(tmp_path, rng):
    a = rng.standard_normal((4, 3))
    write_dense(a, tmp_path / "a.csv")
    np.testing.assert_array_equal(read_dense(tmp_path / "a.csv"), a)
