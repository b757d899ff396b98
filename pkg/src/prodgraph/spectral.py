"""Recovering the factor eigenbases from a product-graph signal covariance.

Two estimators are provided.  :func:`estimate_nkd` decomposes every
covariance eigenvector into its nearest Kronecker product and deduplicates
the resulting factor candidates with Gram-Schmidt.  :func:`estimate_unfold`
diagonalizes the layer-wise and node-wise unfolded covariances instead; it is
cheaper but only reliable for separable filters.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import qr
from scipy.optimize import linear_sum_assignment

from .graphs import EIGENGAP_WARN, EigengapWarning, NumericError, sym_evd, write_dense
from .signals import CovarianceEstimate


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class NKDResult:
    """Nearest Kronecker product ``v ~ alpha * factor_c (x) factor_g``."""

    factor_c: np.ndarray
    factor_g: np.ndarray
    alpha: float
    residual: float


@dataclass(frozen=True)
class BasisResult:
    basis: np.ndarray
    accepted: int
    incomplete: bool


@dataclass
class SpectralEstimate:
    vc: np.ndarray
    vg: np.ndarray
    per_vector: list[NKDResult] = field(default_factory=list)
    eigenvalues: np.ndarray | None = None
    eigengaps: dict[str, float] = field(default_factory=dict)
    eigengap_warnings: list[str] = field(default_factory=list)
    incomplete: dict[str, bool] = field(default_factory=dict)

    def diagnostics(self) -> dict:
        return {
            "residuals": [r.residual for r in self.per_vector],
            "eigengaps": self.eigengaps,
            "eigengap_warnings": self.eigengap_warnings,
            "incomplete": self.incomplete,
        }

    def save(self, directory: str | Path, prefix: str = "") -> None:
        """Write ``vc.csv``, ``vg.csv`` and ``diagnostics.json`` into ``directory``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        write_dense(self.vc, d / f"{prefix}vc.csv")
        write_dense(self.vg, d / f"{prefix}vg.csv")
        (d / f"{prefix}diagnostics.json").write_text(json.dumps(self.diagnostics(), indent=2))


def rearrange(mat: np.ndarray, dims: tuple[int, int, int, int]) -> np.ndarray:
    """Van Loan rearrangement of an ``(M*N) x (P*Q)`` matrix.

    For ``mat = A (x) B`` with ``A`` of shape ``M x P`` and ``B`` of shape
    ``N x Q`` the result is the rank-one ``(M*P) x (N*Q)`` matrix
    ``vec(A) vec(B)^T`` (``vec`` stacks columns).
    """
    m, n, p, q = dims
    mat = np.asarray(mat, dtype=float)
    if mat.ndim == 1:
        mat = mat[:, None]
    if mat.shape != (m * n, p * q):
        raise ShapeError(f"matrix of shape {mat.shape} does not factor as ({m}*{n}) x ({p}*{q})")
    blocks = mat.reshape(m, n, p, q)
    # row index (col-block i, row-block j) -> i*M + j; column index q*N + n
    return blocks.transpose(2, 0, 3, 1).reshape(p * m, q * n)


def reshape_vec(v: np.ndarray, n: int, m: int) -> np.ndarray:
    """``N x M`` view of a layer-stacked vector, so that ``a (x) b`` maps to ``b a^T``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (n * m,):
        raise ShapeError(f"vector of shape {v.shape} does not have length N*M = {n * m}")
    return v.reshape(m, n).T


def nkd(v: np.ndarray, n: int, m: int) -> NKDResult:
    """Nearest Kronecker product of a length-``N*M`` vector via the top singular pair."""
    r = reshape_vec(v, n, m)
    if not np.any(r):
        raise NumericError("cannot decompose the zero vector")
    u, sv, wt = np.linalg.svd(r)
    fg, fc = u[:, 0], wt[0]
    k = int(np.argmax(np.abs(fg)))
    if fg[k] < 0:
        fg, fc = -fg, -fc
    residual = float(np.sqrt(np.sum(sv[1:] ** 2)))
    return NKDResult(factor_c=fc, factor_g=fg, alpha=float(sv[0]), residual=residual)


def _complete_basis(q: np.ndarray, d: int) -> np.ndarray:
    """Append deterministic orthonormal vectors spanning the orthocomplement of ``q``."""
    k = q.shape[1]
    proj = np.eye(d) - q @ q.T
    qq, _, _ = qr(proj, pivoting=True)
    extra = qq[:, : d - k]
    # one re-orthogonalization pass against the accepted block
    extra = extra - q @ (q.T @ extra)
    extra, _ = np.linalg.qr(extra)
    return np.hstack([q, extra])


def gram_schmidt_dedup(candidates: Sequence[np.ndarray] | np.ndarray, target: int,
                       tol: float = 0.5) -> BasisResult:
    """Orthonormal basis from candidates that repeat up to sign and noise.

    Candidates are visited in order; a candidate is accepted when the part
    orthogonal to the already accepted vectors has norm above ``tol``.  The
    scan stops once ``target`` vectors are accepted.  The result is always a
    full ``d x d`` orthonormal matrix: missing columns are filled from the
    orthocomplement, and the result is flagged ``incomplete`` when fewer
    than ``target`` candidates were accepted.
    """
    cands = [np.asarray(c, dtype=float) for c in candidates]
    if not cands:
        raise ValueError("no candidates")
    d = cands[0].size
    if not 1 <= target <= d:
        raise ValueError(f"target must be in [1, {d}], got {target}")
    accepted: list[np.ndarray] = []
    for c in cands:
        c = c / np.linalg.norm(c)
        r = c.copy()
        for _ in range(2):  # classical GS twice for numerical orthogonality
            for a in accepted:
                r -= (a @ r) * a
        nr = np.linalg.norm(r)
        if nr > tol:
            accepted.append(r / nr)
            if len(accepted) == target:
                break
    q = np.array(accepted).T if accepted else np.zeros((d, 0))
    found = q.shape[1]
    if found < d:
        q = _complete_basis(q, d)
    return BasisResult(basis=q, accepted=found, incomplete=found < target)


def _gap_check(label: str, values: np.ndarray, est: SpectralEstimate, warn: bool) -> None:
    gap = float(np.min(np.abs(np.diff(values)))) if values.size > 1 else np.inf
    est.eigengaps[label] = gap
    if gap < EIGENGAP_WARN:
        msg = f"{label}: eigengap {gap:.3g} below {EIGENGAP_WARN:g}"
        est.eigengap_warnings.append(msg)
        if warn:
            warnings.warn(msg, EigengapWarning, stacklevel=3)


def estimate_nkd(cov: np.ndarray, n: int, m: int, tol: float = 0.5, skip_gs: bool = False,
                 warn: bool = False) -> SpectralEstimate:
    """Factor eigenbases from the full ``NM x NM`` covariance.

    Every covariance eigenvector goes through :func:`nkd`; the coupling and
    physical factors are then deduplicated by :func:`gram_schmidt_dedup`,
    visiting candidates by ascending NKD residual.  With ``skip_gs`` only the
    per-vector decompositions are returned (``vc``/``vg`` left empty), which is
    all that centrality detection needs.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (n * m, n * m):
        raise ShapeError(f"covariance of shape {cov.shape} does not match N*M = {n * m}")
    evd = sym_evd(cov)
    per = [nkd(evd.vectors[:, k], n, m) for k in range(n * m)]
    est = SpectralEstimate(vc=np.zeros((m, 0)), vg=np.zeros((n, 0)), per_vector=per,
                           eigenvalues=evd.values)
    _gap_check("covariance", evd.values, est, warn)
    if skip_gs:
        return est
    order = np.argsort([r.residual for r in per], kind="stable")
    bc = gram_schmidt_dedup([per[k].factor_c for k in order], m, tol)
    bg = gram_schmidt_dedup([per[k].factor_g for k in order], n, tol)
    est.vc, est.vg = bc.basis, bg.basis
    est.incomplete = {"vc": bc.incomplete, "vg": bg.incomplete}
    if warn and (bc.incomplete or bg.incomplete):
        warnings.warn(f"incomplete basis: {est.incomplete}", RuntimeWarning, stacklevel=2)
    return est


def estimate_unfold(covs: CovarianceEstimate, warn: bool = False) -> SpectralEstimate:
    """Factor eigenbases from the layer-wise and node-wise unfolded covariances."""
    ec = sym_evd(covs.layer)
    eg = sym_evd(covs.node)
    est = SpectralEstimate(vc=ec.vectors, vg=eg.vectors,
                           incomplete={"vc": False, "vg": False})
    _gap_check("layer", ec.values, est, warn)
    _gap_check("node", eg.values, est, warn)
    return est


def basis_match_score(estimate: np.ndarray, truth: np.ndarray) -> float:
    """Smallest ``|<estimate_k, truth_l>|`` over a maximum-weight column matching.

    Equals 1 when the bases agree up to column order and sign.
    """
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape:
        raise ShapeError(f"shape mismatch: {estimate.shape} vs {truth.shape}")
    w = np.abs(estimate.T @ truth)
    rows, cols = linear_sum_assignment(w, maximize=True)
    return float(min(1.0, w[rows, cols].min()))
