"""Bivariate graph filters on a product graph.

A polynomial filter is ``H = sum_ij h[i, j] * A_C^j (x) A_G^i`` where the row
index of ``coeffs`` is the power of the physical adjacency ``A_G`` and the
column index the power of the coupling adjacency ``A_C``.  The named kinds
are closed-form infinite-order filters and are evaluated exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import expm

from .graphs import (
    Graph,
    NumericError,
    check_gamma,
    interaction_matrix,
    spectral_radius,
    sym_evd,
)

POLE_TOL = 1e-12
DISTINCT_TOL = 1e-9


class FilterKind(str, Enum):
    POLY = "Poly"
    EXP_INTERACTION = "ExpInteraction"
    RESOLVENT_INTERACTION = "ResolventInteraction"
    FJ_KRONECKER = "FJKronecker"
    DIFFUSION_CARTESIAN = "DiffusionCartesian"


class FilterError(ValueError):
    """Malformed filter specification."""


class InstabilityError(NumericError):
    """A resolvent filter is applied outside its region of convergence."""


@dataclass(frozen=True)
class FilterSpec:
    kind: FilterKind
    coeffs: np.ndarray | None = None
    tau: float = 1.0
    gamma: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        kind = FilterKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "gamma", check_gamma(self.gamma))
        if kind is FilterKind.POLY:
            if self.coeffs is None:
                raise FilterError("Poly filter needs coefficients")
            h = np.atleast_2d(np.array(self.coeffs, dtype=float))
            if not np.all(np.isfinite(h)):
                raise FilterError("filter coefficients must be finite")
            h.setflags(write=False)
            object.__setattr__(self, "coeffs", h)
        elif kind in (FilterKind.EXP_INTERACTION, FilterKind.RESOLVENT_INTERACTION):
            if not (np.isfinite(self.tau) and self.tau > 0):
                raise FilterError(f"tau must be positive, got {self.tau}")

    @classmethod
    def poly(cls, coeffs) -> "FilterSpec":
        return cls(FilterKind.POLY, coeffs=coeffs)

    @classmethod
    def exp_interaction(cls, tau: float, gamma) -> "FilterSpec":
        return cls(FilterKind.EXP_INTERACTION, tau=tau, gamma=tuple(gamma))

    @classmethod
    def resolvent_interaction(cls, tau: float, gamma) -> "FilterSpec":
        return cls(FilterKind.RESOLVENT_INTERACTION, tau=tau, gamma=tuple(gamma))

    @classmethod
    def identity(cls) -> "FilterSpec":
        return cls.poly([[1.0]])

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "tau": self.tau, "gamma": list(self.gamma)}
        if self.coeffs is not None:
            out["coeffs"] = self.coeffs.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "FilterSpec":
        return cls(
            FilterKind(d["kind"]),
            coeffs=d.get("coeffs"),
            tau=float(d.get("tau", 1.0)),
            gamma=tuple(d.get("gamma", (0.0, 0.0, 1.0))),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "FilterSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FrequencyResponse:
    """Filter gains on the ``M x N`` grid of factor eigenvalue pairs."""

    values: np.ndarray
    distinct: bool = field(default=True)

    @property
    def min_magnitude_gap(self) -> float:
        mags = np.sort(np.abs(self.values).ravel())
        return float(np.min(np.diff(mags))) if mags.size > 1 else np.inf


@dataclass(frozen=True)
class ExactCovariance:
    cy: np.ndarray
    sigma2: float


def _adj(g: Graph | np.ndarray) -> np.ndarray:
    return g.adj if isinstance(g, Graph) else np.asarray(g, dtype=float)


def _interaction_arg(spec: FilterSpec, ac: np.ndarray, ag: np.ndarray) -> np.ndarray:
    """The matrix inside the closed form, e.g. ``tau * A_I`` or ``A_C (x) A_G``."""
    m, n = ac.shape[0], ag.shape[0]
    if spec.kind in (FilterKind.EXP_INTERACTION, FilterKind.RESOLVENT_INTERACTION):
        return spec.tau * interaction_matrix(ac, ag, spec.gamma)
    if spec.kind is FilterKind.FJ_KRONECKER:
        return np.kron(ac, ag)
    if spec.kind is FilterKind.DIFFUSION_CARTESIAN:
        return np.kron(ac, np.eye(n)) + np.kron(np.eye(m), ag)
    raise FilterError(f"no closed form for {spec.kind}")


def _check_resolvent(arg: np.ndarray) -> None:
    radius = spectral_radius(arg)
    if radius >= 1.0:
        raise InstabilityError(f"resolvent argument has spectral radius {radius:.6g} >= 1")


def filter_matrix(spec: FilterSpec, gc: Graph, gg: Graph) -> np.ndarray:
    """Dense ``NM x NM`` filter operator."""
    ac, ag = _adj(gc), _adj(gg)
    m, n = ac.shape[0], ag.shape[0]
    if spec.kind is FilterKind.POLY:
        h = spec.coeffs
        out = np.zeros((n * m, n * m))
        ag_pow = np.eye(n)
        for i in range(h.shape[0]):
            ac_pow = np.eye(m)
            for j in range(h.shape[1]):
                if h[i, j] != 0:
                    out += h[i, j] * np.kron(ac_pow, ag_pow)
                ac_pow = ac_pow @ ac
            ag_pow = ag_pow @ ag
        return out
    arg = _interaction_arg(spec, ac, ag)
    if spec.kind is FilterKind.EXP_INTERACTION:
        return expm(arg)
    _check_resolvent(arg)
    return np.linalg.inv(np.eye(n * m) - arg)


def apply_filter(spec: FilterSpec, gc: Graph, gg: Graph, x: np.ndarray) -> np.ndarray:
    """Filter one signal (length ``NM``) or a batch of signals (rows of ``x``).

    Polynomial filters never form the ``NM x NM`` operator: each signal is
    viewed as an ``N x M`` matrix ``X`` and ``(A_C^j (x) A_G^i) x`` becomes
    ``A_G^i X A_C^j``.
    """
    ac, ag = _adj(gc), _adj(gg)
    m, n = ac.shape[0], ag.shape[0]
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n * m:
        raise FilterError(f"signal length {x.shape[-1]} does not match N*M = {n * m}")
    if spec.kind is not FilterKind.POLY:
        arg = _interaction_arg(spec, ac, ag)
        if spec.kind is FilterKind.EXP_INTERACTION:
            return x @ expm(arg).T
        _check_resolvent(arg)
        return np.linalg.solve(np.eye(n * m) - arg, x.T).T

    h = spec.coeffs
    # batch layout (S, M, N): block m of each signal is layer m
    blocks = x.reshape(-1, m, n)
    out = np.zeros_like(blocks)
    g_pow = blocks
    for i in range(h.shape[0]):
        c_pow = g_pow
        for j in range(h.shape[1]):
            if h[i, j] != 0:
                out += h[i, j] * c_pow
            if j + 1 < h.shape[1]:
                c_pow = np.einsum("kl,sln->skn", ac, c_pow)
        if i + 1 < h.shape[0]:
            g_pow = g_pow @ ag.T
    return out.reshape(x.shape)


def freq_response(spec: FilterSpec, lam_c: np.ndarray, lam_g: np.ndarray) -> FrequencyResponse:
    """Evaluate ``h(lam_c[i], lam_g[j])`` on the full grid (shape ``M x N``)."""
    lc = np.asarray(lam_c, dtype=float)[:, None]
    lg = np.asarray(lam_g, dtype=float)[None, :]
    if spec.kind is FilterKind.POLY:
        h = spec.coeffs
        pc = lc[..., None] ** np.arange(h.shape[1])  # (M, 1, Tc+1)
        pg = lg[..., None] ** np.arange(h.shape[0])  # (1, N, Tg+1)
        vals = np.einsum("mxj,yni,ij->mn", pc, pg, h)
    else:
        g1, g2, g3 = spec.gamma
        if spec.kind is FilterKind.EXP_INTERACTION:
            vals = np.exp(spec.tau * (g1 * lg + g2 * lc + g3 * lc * lg))
        else:
            if spec.kind is FilterKind.RESOLVENT_INTERACTION:
                denom = 1.0 - spec.tau * (g1 * lg + g2 * lc + g3 * lc * lg)
            elif spec.kind is FilterKind.FJ_KRONECKER:
                denom = 1.0 - lc * lg
            else:
                denom = 1.0 - lc - lg
            if np.any(np.abs(denom) < POLE_TOL):
                raise NumericError("frequency response has a pole at an eigenvalue pair")
            vals = 1.0 / denom
    vals = np.broadcast_to(vals, (lc.shape[0], lg.shape[1])).copy()
    if not np.all(np.isfinite(vals)):
        raise NumericError("frequency response is not finite")
    mags = np.sort(np.abs(vals).ravel())
    distinct = bool(mags.size < 2 or np.min(np.diff(mags)) > DISTINCT_TOL)
    return FrequencyResponse(values=vals, distinct=distinct)


def factor_response(spec: FilterSpec, gc: Graph, gg: Graph):
    """Factor eigendecompositions together with the filter's frequency response."""
    evd_c = sym_evd(_adj(gc))
    evd_g = sym_evd(_adj(gg))
    return evd_c, evd_g, freq_response(spec, evd_c.values, evd_g.values)


def exact_covariance(spec: FilterSpec, gc: Graph, gg: Graph, sigma2: float = 0.0) -> ExactCovariance:
    """Population covariance of ``H x + w`` for white ``x`` and noise variance ``sigma2``.

    Built from the factor eigenbases as ``V diag(|h|^2) V^T + sigma2 I`` with
    ``V = V_C (x) V_G``.
    """
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be nonnegative, got {sigma2}")
    evd_c, evd_g, resp = factor_response(spec, gc, gg)
    v = np.kron(evd_c.vectors, evd_g.vectors)
    power = np.abs(resp.values.ravel()) ** 2
    cy = (v * power) @ v.T
    cy = (cy + cy.T) / 2 + sigma2 * np.eye(v.shape[0])
    return ExactCovariance(cy=cy, sigma2=float(sigma2))


def _check_radius(arg: np.ndarray, what: str) -> None:
    radius = spectral_radius(arg)
    if radius >= 1.0:
        raise InstabilityError(f"{what} diverges: spectral radius {radius:.6g} >= 1")


def fj_equilibrium(gc: Graph, gg: Graph, x: np.ndarray) -> np.ndarray:
    """Steady state ``(I - A_C (x) A_G)^{-1} x`` of Friedkin-Johnsen opinion dynamics."""
    _check_radius(np.kron(_adj(gc), _adj(gg)), "Friedkin-Johnsen iteration")
    return apply_filter(FilterSpec(FilterKind.FJ_KRONECKER), gc, gg, x)


def diffusion_equilibrium(gc: Graph, gg: Graph, x: np.ndarray) -> np.ndarray:
    """Equilibrium ``(I - A_C (x) I - I (x) A_G)^{-1} x`` of multiplex diffusion."""
    ac, ag = _adj(gc), _adj(gg)
    m, n = ac.shape[0], ag.shape[0]
    _check_radius(np.kron(ac, np.eye(n)) + np.kron(np.eye(m), ag), "multiplex diffusion")
    return apply_filter(FilterSpec(FilterKind.DIFFUSION_CARTESIAN), gc, gg, x)
