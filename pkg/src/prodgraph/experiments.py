"""Monte-Carlo experiments: topology reconstruction (F1) and central-node detection.

Each trial owns a generator seeded from ``(seed, crc32(name), N, trial)``, so
trials can run in any order or on any number of workers and still produce
identical rows.  Within a trial one graph and one batch of ``max(s_list)``
samples are drawn; smaller sample sizes use the leading rows of that batch,
and all methods see the same data.
"""

from __future__ import annotations

import csv
import io
import json
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .centrality import detect_centrality, detect_centrality_unfold, detection_error_rate, topk
from .filters import FilterSpec, exact_covariance
from .graphs import (
    Graph,
    gen_core_periphery,
    gen_erdos_renyi,
    gen_path,
    interaction_matrix,
    max_degree_scale,
    sym_evd,
    write_dense,
    write_edgelist,
)
from .signals import CovarianceEstimate, SignalBatch, read_batch, sample_covariances, synthesize
from .spectral import estimate_nkd, estimate_unfold
from .topology import (
    SolverOptions,
    SpecTempProblem,
    binarize,
    f1_score,
    interaction_edges,
    reconstruct_interaction,
    solve_spectemp,
)

METHODS = ("nkd", "unfold")
RESULT_COLUMNS = ("name", "metric", "method", "filter", "N", "M", "S", "gamma1", "trial", "value")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    name: str
    gamma1: float
    metric: str = "f1"
    filter: str = "exp"
    tau_scale: float = 1.0
    n_list: list[int] = field(default_factory=lambda: [10])
    s_list: list[int] = field(default_factory=lambda: [1000])
    m: int = 3
    trials: int = 20
    sigma2: float = 0.01
    seed: int = 0
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    exact_cov: bool = False
    # topology
    er_p: float = 0.4
    rho: float = 40.0
    eps: float = 1e-6
    thr_frac: float = 0.3
    binarize: str = "factor"
    tol_abs: float = 1e-7
    max_iter: int = 50000
    # centrality
    core_size: int = 10
    p_cp: float = 0.2
    p_pp: float = 0.05

    def __post_init__(self):
        if not 0 <= self.gamma1 <= 1 / 3 + 1e-12:
            raise ConfigError(f"gamma1 must be in [0, 1/3], got {self.gamma1}")
        if self.metric not in ("f1", "error_rate"):
            raise ConfigError(f"unknown metric {self.metric!r}")
        if self.filter not in ("exp", "inv"):
            raise ConfigError(f"unknown filter {self.filter!r}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not self.n_list or not self.s_list or not self.methods:
            raise ConfigError("n_list, s_list and methods must be nonempty")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ConfigError(f"unknown methods {sorted(bad)}")
        if min(self.s_list) < 1:
            raise ConfigError("sample sizes must be positive")
        if self.binarize not in ("factor", "interaction"):
            raise ConfigError(f"unknown binarization mode {self.binarize!r}")

    @property
    def gamma(self) -> tuple[float, float, float]:
        g1 = self.gamma1
        return (g1, 2 * g1, 1 - 3 * g1)

    def solver_options(self) -> SolverOptions:
        return SolverOptions(tol_abs=self.tol_abs, max_iter=self.max_iter)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ResultRow:
    name: str
    metric: str
    method: str
    filter: str
    N: int
    M: int
    S: int
    gamma1: float
    trial: int
    value: float
    wall_time: float = 0.0


def trial_rng(seed: int, name: str, n: int, trial: int) -> np.random.Generator:
    ss = np.random.SeedSequence([seed, zlib.crc32(name.encode()), n, trial])
    return np.random.default_rng(ss)


def make_filter(cfg: ExperimentConfig, ai: np.ndarray) -> FilterSpec:
    tau = cfg.tau_scale * max_degree_scale(ai)
    if cfg.filter == "exp":
        return FilterSpec.exp_interaction(tau, cfg.gamma)
    return FilterSpec.resolvent_interaction(tau, cfg.gamma)


def unfold_covariance(full: np.ndarray, n: int, m: int) -> CovarianceEstimate:
    """Layer-wise and node-wise covariances implied by a full ``NM x NM`` covariance."""
    blocks = np.asarray(full).reshape(m, n, m, n)
    node = np.einsum("aiaj->ij", blocks)
    layer = np.einsum("aibi->ab", blocks)
    return CovarianceEstimate(full=np.asarray(full), layer=layer, node=node, sample_count=0)


def _covariances(cfg: ExperimentConfig, spec: FilterSpec, gc: Graph, gg: Graph,
                 rng: np.random.Generator) -> list[tuple[int, CovarianceEstimate]]:
    n, m = gg.n, gc.n
    if cfg.exact_cov:
        full = exact_covariance(spec, gc, gg, cfg.sigma2).cy
        return [(0, unfold_covariance(full, n, m))]
    batch = synthesize(spec, gc, gg, max(cfg.s_list), cfg.sigma2, rng)
    return [(s, sample_covariances(batch.head(s))) for s in cfg.s_list]


def learn_factors(covs: CovarianceEstimate, n: int, m: int, method: str, rho: float = 40.0,
                  eps: float = 1e-6, opts: SolverOptions | None = None):
    """Estimate both eigenbases with ``method`` and solve the template program for each.

    Returns ``(estimate, report_c, report_g)``.
    """
    if method == "nkd":
        est = estimate_nkd(covs.full, n, m)
    elif method == "unfold":
        est = estimate_unfold(covs)
    else:
        raise ConfigError(f"unknown method {method!r}")
    rep_c = solve_spectemp(SpecTempProblem(est.vc, rho=rho, eps=eps), opts)
    rep_g = solve_spectemp(SpecTempProblem(est.vg, rho=rho, eps=eps), opts)
    return est, rep_c, rep_g


def topology_trial(cfg: ExperimentConfig, n: int, trial: int) -> list[ResultRow]:
    rng = trial_rng(cfg.seed, cfg.name, n, trial)
    gg = gen_erdos_renyi(n, cfg.er_p, rng)
    gc = gen_path(cfg.m)
    ai = interaction_matrix(gc.adj, gg.adj, cfg.gamma)
    spec = make_filter(cfg, ai)
    truth = interaction_edges(gc.adj, gg.adj, cfg.gamma, cfg.thr_frac, cfg.binarize)
    rows = []
    for s, covs in _covariances(cfg, spec, gc, gg, rng):
        for method in cfg.methods:
            t0 = time.perf_counter()
            _, rep_c, rep_g = learn_factors(covs, n, cfg.m, method, cfg.rho, cfg.eps,
                                            cfg.solver_options())
            est = interaction_edges(rep_c.a_hat, rep_g.a_hat, cfg.gamma, cfg.thr_frac,
                                    cfg.binarize)
            value = f1_score(est, truth)
            rows.append(ResultRow(cfg.name, cfg.metric, method, cfg.filter, n, cfg.m, s,
                                  cfg.gamma1, trial, value, time.perf_counter() - t0))
    return rows


def centrality_trial(cfg: ExperimentConfig, n: int, trial: int) -> list[ResultRow]:
    rng = trial_rng(cfg.seed, cfg.name, n, trial)
    gg, core = gen_core_periphery(n, cfg.core_size, cfg.p_cp, cfg.p_pp, rng)
    gc = gen_path(cfg.m)
    ai = interaction_matrix(gc.adj, gg.adj, cfg.gamma)
    spec = make_filter(cfg, ai)
    rows = []
    for s, covs in _covariances(cfg, spec, gc, gg, rng):
        for method in cfg.methods:
            t0 = time.perf_counter()
            if method == "nkd":
                res = detect_centrality(sym_evd(covs.full).vectors, n, cfg.m)
            else:
                est = estimate_unfold(covs)
                res = detect_centrality_unfold(est.vg, est.vc)
            value = detection_error_rate(topk(res.cg, cfg.core_size), core)
            rows.append(ResultRow(cfg.name, cfg.metric, method, cfg.filter, n, cfg.m, s,
                                  cfg.gamma1, trial, value, time.perf_counter() - t0))
    return rows


def _run(cfg: ExperimentConfig, trial_fn, threads: int) -> list[ResultRow]:
    tasks = [(n, t) for n in cfg.n_list for t in range(cfg.trials)]
    # single-threaded BLAS keeps floating-point results independent of worker count
    with threadpool_limits(limits=1):
        if threads <= 1:
            chunks = [trial_fn(cfg, n, t) for n, t in tasks]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                chunks = list(pool.map(lambda nt: trial_fn(cfg, *nt), tasks))
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r.N, r.S, r.method, r.trial))
    return rows


def run_topology_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    if cfg.metric != "f1":
        raise ConfigError("topology experiments are scored with metric 'f1'")
    return _run(cfg, topology_trial, threads)


def run_centrality_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    if cfg.metric != "error_rate":
        raise ConfigError("centrality experiments are scored with metric 'error_rate'")
    return _run(cfg, centrality_trial, threads)


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    if cfg.metric == "f1":
        return run_topology_experiment(cfg, threads)
    return run_centrality_experiment(cfg, threads)


# --- presets mirroring the synthetic studies ------------------------------

def topology_preset(gamma1: float, **overrides) -> ExperimentConfig:
    base = dict(name=f"topology-g{gamma1:g}", gamma1=gamma1, metric="f1", filter="exp",
                n_list=[10], s_list=[100, 500, 1000, 1500, 2000], trials=20)
    base.update(overrides)
    return ExperimentConfig(**base)


def centrality_preset(gamma1: float, filter: str = "inv", **overrides) -> ExperimentConfig:
    base = dict(name=f"centrality-{filter}-g{gamma1:g}", gamma1=gamma1, metric="error_rate",
                filter=filter, tau_scale=10.0 if filter == "exp" else 1.0,
                n_list=[80], s_list=[50, 100, 200, 500, 1000, 2000, 5000], trials=100)
    base.update(overrides)
    return ExperimentConfig(**base)


# --- result files ---------------------------------------------------------

def format_rows(rows: Iterable[ResultRow], timing: bool = False) -> str:
    """CSV text for result rows.  Wall times are left out unless ``timing`` is set."""
    cols = RESULT_COLUMNS + (("wall_time",) if timing else ())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        d = asdict(r)
        writer.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in cols])
    return buf.getvalue()


def write_rows(rows: Iterable[ResultRow], path: str | Path, timing: bool = False) -> None:
    Path(path).write_text(format_rows(rows, timing))


def read_rows(path: str | Path) -> list[ResultRow]:
    out = []
    with open(path, newline="") as fh:
        for d in csv.DictReader(fh):
            out.append(ResultRow(
                name=d["name"], metric=d["metric"], method=d["method"], filter=d["filter"],
                N=int(d["N"]), M=int(d["M"]), S=int(d["S"]), gamma1=float(d["gamma1"]),
                trial=int(d["trial"]), value=float(d["value"]),
                wall_time=float(d.get("wall_time") or 0.0),
            ))
    return out


def aggregate(rows: Sequence[ResultRow]) -> list[dict]:
    """Mean, sample standard deviation and count per ``(method, N, S, gamma1, filter)``."""
    if not rows:
        raise ValueError("nothing to aggregate")
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        groups.setdefault((r.method, r.N, r.S, r.gamma1, r.filter), []).append(r.value)
    out = []
    for key in sorted(groups):
        vals = np.array(groups[key])
        sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        method, n, s, g1, filt = key
        out.append({"method": method, "N": n, "S": s, "gamma1": g1, "filter": filt,
                    "mean": float(vals.mean()), "sd": sd, "count": int(vals.size)})
    return out


def format_summary(summary: Sequence[dict]) -> str:
    buf = io.StringIO()
    cols = ("method", "N", "S", "gamma1", "filter", "mean", "sd", "count")
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    for row in summary:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


# --- learning from external signals ---------------------------------------

def learn_from_batch(batch: SignalBatch, gamma: Sequence[float], mode: str = "nkd",
                     rho: float = 40.0, eps: float = 1e-6, thr_frac: float = 0.3,
                     opts: SolverOptions | None = None, binarize_mode: str = "factor") -> dict:
    """Learn both factor graphs from a signal batch.  Returns arrays and diagnostics."""
    covs = sample_covariances(batch)
    est, rep_c, rep_g = learn_factors(covs, batch.n, batch.m, mode, rho, eps, opts)
    est_ai = reconstruct_interaction(rep_c.a_hat, rep_g.a_hat, gamma)
    return {
        "ac": rep_c.a_hat,
        "ag": rep_g.a_hat,
        "interaction": est_ai.adj,
        "interaction_edges": interaction_edges(rep_c.a_hat, rep_g.a_hat, gamma, thr_frac,
                                               binarize_mode),
        "estimate": est,
        "report_c": rep_c,
        "report_g": rep_g,
    }


def run_from_signals(path: str | Path, n: int, m: int, gamma: Sequence[float], mode: str = "nkd",
                     outdir: str | Path | None = None, rho: float = 40.0, eps: float = 1e-6,
                     thr_frac: float = 0.3, opts: SolverOptions | None = None) -> dict:
    """Run the learning pipeline on a signal CSV and optionally write the results.

    The declared ``n`` and ``m`` must match the file header.
    """
    batch = read_batch(path)
    if (batch.n, batch.m) != (n, m):
        raise ConfigError(f"dimension mismatch: expected N={n}, M={m}; file has N={batch.n}, M={batch.m}")
    result = learn_from_batch(batch, gamma, mode, rho, eps, thr_frac, opts)
    if outdir is not None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        write_dense(result["ac"], out / "ac.csv")
        write_dense(result["ag"], out / "ag.csv")
        write_edgelist(Graph(binarize(result["ac"], thr_frac)), out / "ac_edges.csv")
        write_edgelist(Graph(binarize(result["ag"], thr_frac)), out / "ag_edges.csv")
        result["estimate"].save(out)
        (out / "report_c.json").write_text(result["report_c"].to_json())
        (out / "report_g.json").write_text(result["report_g"].to_json())
    return result
