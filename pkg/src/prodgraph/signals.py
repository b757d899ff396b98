"""Multi-attribute graph signals: synthesis, covariance estimates and CSV storage.

A signal has length ``N*M`` and is stacked layer by layer.  Its unfolding is
the ``N x M`` matrix whose column ``m`` holds layer ``m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .filters import FilterSpec, apply_filter, factor_response
from .graphs import Graph


class SignalFormatError(ValueError):
    """Malformed signal CSV file."""


@dataclass(frozen=True)
class SignalBatch:
    """``S`` observations, one per row of ``samples`` (shape ``S x N*M``)."""

    n: int
    m: int
    samples: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        y = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if y.shape[1] != self.n * self.m:
            raise SignalFormatError(f"row length {y.shape[1]} does not match N*M = {self.n * self.m}")
        if not np.all(np.isfinite(y)):
            raise SignalFormatError("signals contain non-finite values")
        object.__setattr__(self, "samples", y)

    @property
    def s(self) -> int:
        return self.samples.shape[0]

    def unfold(self) -> np.ndarray:
        """Array of shape ``(S, N, M)``; entry ``[s, i, m]`` is node ``i`` on layer ``m``."""
        return unfold(self.samples, self.n, self.m)

    def head(self, s: int) -> "SignalBatch":
        return SignalBatch(self.n, self.m, self.samples[:s], self.seed)


@dataclass(frozen=True)
class CovarianceEstimate:
    full: np.ndarray
    layer: np.ndarray
    node: np.ndarray
    sample_count: int


def unfold(y: np.ndarray, n: int, m: int) -> np.ndarray:
    """Reshape layer-stacked signals into ``N x M`` matrices (column = layer)."""
    y = np.asarray(y)
    return np.swapaxes(y.reshape(*y.shape[:-1], m, n), -1, -2)


def fold(ymat: np.ndarray) -> np.ndarray:
    """Inverse of :func:`unfold`."""
    ymat = np.asarray(ymat)
    return np.swapaxes(ymat, -1, -2).reshape(*ymat.shape[:-2], -1)


def synthesize(
    spec: FilterSpec,
    gc: Graph,
    gg: Graph,
    s: int,
    sigma2: float,
    rng: np.random.Generator,
    excitation: Callable[[np.random.Generator, tuple[int, int]], np.ndarray] | None = None,
    seed: int | None = None,
) -> SignalBatch:
    """Draw ``s`` samples of ``y = H x + w``.

    ``x`` is standard normal unless ``excitation(rng, shape)`` is given (it must
    produce white signals with identity covariance); ``w`` is normal with
    variance ``sigma2``.  The excitation block is drawn before the noise block.
    """
    if s < 1:
        raise ValueError(f"sample count must be positive, got {s}")
    n, m = gg.n, gc.n
    shape = (s, n * m)
    x = rng.standard_normal(shape) if excitation is None else np.asarray(excitation(rng, shape))
    y = apply_filter(spec, gc, gg, x)
    if sigma2 > 0:
        y = y + np.sqrt(sigma2) * rng.standard_normal(shape)
    return SignalBatch(n=n, m=m, samples=y, seed=seed)


def sample_covariances(batch: SignalBatch) -> CovarianceEstimate:
    """Full, layer-wise and node-wise second moments (no mean subtraction)."""
    y = batch.samples
    s = batch.s
    ys = batch.unfold()
    full = y.T @ y / s
    node = np.einsum("sim,sjm->ij", ys, ys) / s
    layer = np.einsum("sim,sik->mk", ys, ys) / s
    return CovarianceEstimate(
        full=(full + full.T) / 2,
        layer=(layer + layer.T) / 2,
        node=(node + node.T) / 2,
        sample_count=s,
    )


def population_unfolded(spec: FilterSpec, gc: Graph, gg: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Noiseless layer-wise (``M x M``) and node-wise (``N x N``) covariances.

    The layer covariance has eigenvectors ``V_C`` with eigenvalues
    ``sum_j |h(lc_i, lg_j)|^2``; the node covariance has eigenvectors ``V_G``
    with eigenvalues ``sum_i |h(lc_i, lg_j)|^2``.
    """
    evd_c, evd_g, resp = factor_response(spec, gc, gg)
    power = np.abs(resp.values) ** 2
    vc, vg = evd_c.vectors, evd_g.vectors
    layer = (vc * power.sum(axis=1)) @ vc.T
    node = (vg * power.sum(axis=0)) @ vg.T
    return (layer + layer.T) / 2, (node + node.T) / 2


# --- CSV storage ----------------------------------------------------------

def write_batch(batch: SignalBatch, path: str | Path) -> None:
    """Write a ``# N=.. M=.. S=..`` header followed by one sample per row."""
    with open(path, "w") as fh:
        fh.write(f"# N={batch.n} M={batch.m} S={batch.s}\n")
        np.savetxt(fh, batch.samples, delimiter=",", fmt="%.17g")


def _parse_header(line: str) -> dict[str, int]:
    fields = {}
    for tok in line.lstrip("#").split():
        key, sep, val = tok.partition("=")
        if not sep:
            raise SignalFormatError(f"line 1: malformed header token {tok!r}")
        try:
            fields[key] = int(val)
        except ValueError:
            raise SignalFormatError(f"line 1: header value {tok!r} is not an integer") from None
    missing = {"N", "M"} - fields.keys()
    if missing:
        raise SignalFormatError(f"line 1: header lacks {', '.join(sorted(missing))}")
    return fields


def read_batch(path: str | Path) -> SignalBatch:
    """Read a batch written by :func:`write_batch`; errors name the offending line."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise SignalFormatError("line 1: missing '# N=<n> M=<m> S=<s>' header")
    hdr = _parse_header(lines[0])
    width = hdr["N"] * hdr["M"]
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != width:
            raise SignalFormatError(f"line {lineno}: expected {width} values, found {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise SignalFormatError(f"line {lineno}: {exc}") from None
    if not rows:
        raise SignalFormatError("zero samples")
    if "S" in hdr and hdr["S"] != len(rows):
        raise SignalFormatError(f"header declares S={hdr['S']} but file has {len(rows)} samples")
    return SignalBatch(n=hdr["N"], m=hdr["M"], samples=np.array(rows))
