"""Graphs, random generators, product interaction graphs and eigendecompositions.

All graphs are undirected and described by a dense symmetric adjacency
matrix.  Product-graph signals are stacked layer by layer, so the interaction
matrix always uses the coupling-left Kronecker ordering ``A_C (x) A_G``: node
``(m, i)`` (layer ``m``, physical node ``i``) lives at flat index ``m*N + i``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

EIGENGAP_WARN = 1e-6


class GraphError(ValueError):
    """Invalid graph size, partition or coupling parameters."""


class NumericError(ArithmeticError):
    """Non-finite input or a numerically ill-posed operation."""


class EigengapWarning(UserWarning):
    """Two eigenvalues are too close for their eigenvectors to be identifiable."""


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph stored as a symmetric adjacency matrix."""

    adj: np.ndarray

    def __post_init__(self):
        adj = np.array(self.adj, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[0] < 1:
            raise GraphError(f"adjacency must be a nonempty square matrix, got shape {adj.shape}")
        if not np.all(np.isfinite(adj)):
            raise NumericError("adjacency contains non-finite entries")
        scale = max(1.0, float(np.abs(adj).max()))
        if np.abs(adj - adj.T).max() > 1e-8 * scale:
            raise GraphError("adjacency is not symmetric")
        adj = (adj + adj.T) / 2
        adj.setflags(write=False)
        object.__setattr__(self, "adj", adj)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    def degrees(self) -> np.ndarray:
        return self.adj.sum(axis=1)

    def edges(self) -> list[tuple[int, int, float]]:
        """Upper-triangle nonzero entries as ``(i, j, weight)`` with 0-based indices."""
        iu, ju = np.triu_indices(self.n, k=1)
        w = self.adj[iu, ju]
        keep = w != 0
        return [(int(i), int(j), float(x)) for i, j, x in zip(iu[keep], ju[keep], w[keep])]

    def num_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.adj, k=1)))


@dataclass(frozen=True)
class InteractionGraphSpec:
    """Two factor graphs plus the coupling weights ``gamma = (g1, g2, g3)``.

    ``gc`` is the coupling graph over the M layers, ``gg`` the physical graph
    over the N entities.
    """

    gc: Graph
    gg: Graph
    gamma: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "gamma", check_gamma(self.gamma))


@dataclass(frozen=True)
class EigDecomp:
    """Eigenvalues sorted in descending order and matching orthonormal eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray
    min_gap: float = field(default=np.inf)

    @property
    def degenerate(self) -> bool:
        return self.min_gap < EIGENGAP_WARN


def check_gamma(gamma: Sequence[float]) -> tuple[float, float, float]:
    g = tuple(float(x) for x in gamma)
    if len(g) != 3:
        raise GraphError(f"gamma must have three entries, got {len(g)}")
    if min(g) < 0 or abs(sum(g) - 1.0) > 1e-12 or not all(np.isfinite(g)):
        raise GraphError(f"gamma must lie on the probability simplex, got {g}")
    return g


def _check_prob(p: float, name: str = "p") -> None:
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"{name} must be in [0, 1], got {p}")


def _from_upper_mask(n: int, mask: np.ndarray) -> Graph:
    adj = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    adj[iu] = mask.astype(float)
    return Graph(adj + adj.T)


def gen_erdos_renyi(n: int, p: float, rng: np.random.Generator) -> Graph:
    """Unweighted Erdos-Renyi graph: each unordered pair is an edge w.p. ``p``."""
    if n < 2:
        raise GraphError(f"graph needs at least 2 nodes, got {n}")
    _check_prob(p)
    draws = rng.random(n * (n - 1) // 2)
    return _from_upper_mask(n, draws < p)


def gen_core_periphery(
    n: int,
    core_size: int,
    p_cp: float = 0.2,
    p_pp: float = 0.05,
    rng: np.random.Generator | None = None,
) -> tuple[Graph, frozenset[int]]:
    """Core-periphery graph with a complete core on nodes ``0..core_size-1``.

    Core-periphery pairs are connected with probability ``p_cp`` and
    periphery-periphery pairs with probability ``p_pp``.

    Returns
    -------
    graph : Graph
    core : frozenset of int
        Ground-truth core node indices (0-based).
    """
    if not 1 <= core_size < n:
        raise GraphError(f"core_size must satisfy 1 <= core_size < n, got core_size={core_size}, n={n}")
    _check_prob(p_cp, "p_cp")
    _check_prob(p_pp, "p_pp")
    rng = np.random.default_rng() if rng is None else rng
    iu, ju = np.triu_indices(n, k=1)
    in_core_i = iu < core_size
    in_core_j = ju < core_size
    prob = np.where(in_core_i & in_core_j, 1.0, np.where(in_core_i | in_core_j, p_cp, p_pp))
    draws = rng.random(iu.size)
    return _from_upper_mask(n, draws < prob), frozenset(range(core_size))


def gen_path(n: int) -> Graph:
    """Unweighted path graph ``0 - 1 - ... - (n-1)``."""
    if n < 2:
        raise GraphError(f"graph needs at least 2 nodes, got {n}")
    return Graph(np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1))


def interaction_matrix(ac: np.ndarray, ag: np.ndarray, gamma: Sequence[float]) -> np.ndarray:
    """``g1 I (x) A_G + g2 A_C (x) I + g3 A_C (x) A_G`` as a dense array."""
    g1, g2, g3 = check_gamma(gamma)
    ac = np.asarray(ac, dtype=float)
    ag = np.asarray(ag, dtype=float)
    m, n = ac.shape[0], ag.shape[0]
    return g1 * np.kron(np.eye(m), ag) + g2 * np.kron(ac, np.eye(n)) + g3 * np.kron(ac, ag)


def build_interaction(spec: InteractionGraphSpec) -> Graph:
    """Interaction graph on the ``N*M`` product nodes."""
    return Graph(interaction_matrix(spec.gc.adj, spec.gg.adj, spec.gamma))


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude entry positive; argmax picks the lowest index on ties
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_evd(matrix: np.ndarray, warn: bool = False) -> EigDecomp:
    """Eigendecomposition of a symmetric matrix, eigenvalues in descending order.

    The input is symmetrized before decomposing.  Each eigenvector is flipped
    so that its largest-magnitude entry is positive, making the output
    reproducible.  With ``warn=True`` an :class:`EigengapWarning` is emitted
    when two consecutive eigenvalues are closer than ``1e-6``.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise GraphError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericError("matrix contains non-finite entries")
    a = (a + a.T) / 2
    values, vectors = np.linalg.eigh(a)
    values = values[::-1].copy()
    vectors = _fix_signs(vectors[:, ::-1])
    gap = float(np.min(values[:-1] - values[1:])) if values.size > 1 else np.inf
    if warn and gap < EIGENGAP_WARN:
        warnings.warn(f"eigengap {gap:.3g} below {EIGENGAP_WARN:g}; eigenvectors not identifiable",
                      EigengapWarning, stacklevel=2)
    return EigDecomp(values=values, vectors=vectors, min_gap=gap)


def max_degree_scale(g: Graph | np.ndarray) -> float:
    """``1 / max_i sum_j A_ij``, or 1 for a graph without edges."""
    adj = g.adj if isinstance(g, Graph) else np.asarray(g, dtype=float)
    dmax = float(adj.sum(axis=1).max())
    return 1.0 if dmax == 0 else 1.0 / dmax


def spectral_radius(matrix: np.ndarray) -> float:
    a = np.asarray(matrix, dtype=float)
    return float(np.abs(np.linalg.eigvalsh((a + a.T) / 2)).max())


# --- serialization --------------------------------------------------------

def write_edgelist(g: Graph, path: str | Path) -> None:
    """Write ``i,j,weight`` rows (1-based, upper triangle) after a ``# n=<n>`` header."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# n={g.n}\n")
        writer = csv.writer(fh)
        for i, j, w in g.edges():
            writer.writerow([i + 1, j + 1, repr(w)])


def read_edgelist(path: str | Path, n: int | None = None) -> Graph:
    """Read an edge list written by :func:`write_edgelist`.

    Without a header or ``n`` argument the node count is the largest index.
    """
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key.strip() == "n" and n is None:
                    n = int(val)
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise GraphError(f"{path}:{lineno}: expected 'i,j,weight', got {line!r}")
            try:
                i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as exc:
                raise GraphError(f"{path}:{lineno}: {exc}") from None
            if i < 1 or j < 1 or i == j:
                raise GraphError(f"{path}:{lineno}: invalid node pair ({i}, {j})")
            rows.append((i - 1, j - 1, w))
    if n is None:
        n = 1 + max((max(i, j) for i, j, _ in rows), default=-1)
    adj = np.zeros((n, n))
    for i, j, w in rows:
        if i >= n or j >= n:
            raise GraphError(f"{path}: node index {max(i, j) + 1} exceeds n={n}")
        adj[i, j] = adj[j, i] = w
    return Graph(adj)


def write_dense(matrix: Graph | np.ndarray, path: str | Path) -> None:
    a = matrix.adj if isinstance(matrix, Graph) else np.asarray(matrix)
    np.savetxt(path, a, delimiter=",", fmt="%.17g")


def read_dense(path: str | Path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", ndmin=2))
