"""Blind eigenvector-centrality detection from product-graph signal covariances.

For a filter with a positive response at the top eigenvalue pair, the only
one-signed covariance eigenvector is ``v1_C (x) v1_G``.  The candidate
closest to being one-signed is selected with :func:`positivity_score` and
split into its two factors with a nearest Kronecker product decomposition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .graphs import NumericError
from .spectral import nkd


@dataclass(frozen=True)
class CentralityResult:
    cg: np.ndarray
    cc: np.ndarray
    selected_index: int
    pos_score: float

    def to_json(self, k: int | None = None) -> str:
        out = {
            "selected_index": self.selected_index,
            "pos_score": self.pos_score,
            "cg": self.cg.tolist(),
            "cc": self.cc.tolist(),
        }
        if k is not None:
            out["top_k"] = [i + 1 for i in topk(self.cg, k)]
        return json.dumps(out)


def positivity_score(x: np.ndarray) -> float:
    """Distance from ``x`` to the nearest entrywise one-signed vector.

    Equals ``min(||x_-||, ||x_+||)``; zero iff ``x`` has no strictly negative
    or no strictly positive entries.
    """
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        raise NumericError("positivity score of the zero vector is undefined")
    return float(min(np.linalg.norm(np.minimum(x, 0.0)), np.linalg.norm(np.maximum(x, 0.0))))


def _orient(x: np.ndarray) -> np.ndarray:
    x = x / np.linalg.norm(x)
    return -x if x.sum() < 0 else x


def most_positive(vectors: np.ndarray) -> tuple[int, float]:
    """Index (lowest on ties) and score of the column with the smallest positivity score."""
    scores = [positivity_score(vectors[:, k]) for k in range(vectors.shape[1])]
    k = int(np.argmin(scores))
    return k, scores[k]


def detect_centrality(cov_eigvecs: np.ndarray, n: int, m: int) -> CentralityResult:
    """Factor centralities from the eigenvectors (columns) of the ``NM x NM`` covariance."""
    vecs = np.asarray(cov_eigvecs, dtype=float)
    if vecs.shape[0] != n * m:
        raise ValueError(f"eigenvectors have length {vecs.shape[0]}, expected N*M = {n * m}")
    k, score = most_positive(vecs)
    dec = nkd(vecs[:, k], n, m)
    return CentralityResult(cg=_orient(dec.factor_g), cc=_orient(dec.factor_c),
                            selected_index=k, pos_score=score)


def detect_centrality_unfold(vg: np.ndarray, vc: np.ndarray) -> CentralityResult:
    """Centralities from separately estimated factor bases (most one-signed column of each)."""
    kg, sg = most_positive(np.asarray(vg, dtype=float))
    kc, _ = most_positive(np.asarray(vc, dtype=float))
    return CentralityResult(cg=_orient(vg[:, kg]), cc=_orient(vc[:, kc]),
                            selected_index=kg, pos_score=sg)


def topk(c: np.ndarray, k: int) -> list[int]:
    """Indices of the ``k`` largest entries, lower index first on ties."""
    c = np.asarray(c, dtype=float)
    if not 0 <= k <= c.size:
        raise ValueError(f"k must be in [0, {c.size}], got {k}")
    order = np.lexsort((np.arange(c.size), -c))
    return sorted(int(i) for i in order[:k])


def detection_error_rate(detected, truth) -> float:
    """Fraction of detected nodes that are not in ``truth`` (sets of equal size)."""
    detected, truth = set(detected), set(truth)
    if len(detected) != len(truth) or not truth:
        raise ValueError(f"detected ({len(detected)}) and truth ({len(truth)}) sizes differ")
    return len(detected - truth) / len(truth)
