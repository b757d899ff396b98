"""Command-line entry point: ``prodgraph {simulate,learn,centrality,experiment,aggregate}``.

Exit codes: 0 on success, 1 on usage or input errors, 2 on numerical failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .centrality import detect_centrality, detect_centrality_unfold, topk
from .experiments import (
    ConfigError,
    ExperimentConfig,
    aggregate,
    centrality_preset,
    format_rows,
    format_summary,
    read_rows,
    run_experiment,
    run_from_signals,
    topology_preset,
)
from .filters import FilterSpec
from .graphs import (
    Graph,
    GraphError,
    NumericError,
    check_gamma,
    gen_core_periphery,
    gen_erdos_renyi,
    gen_path,
    interaction_matrix,
    max_degree_scale,
    read_edgelist,
    sym_evd,
    write_edgelist,
)
from .signals import SignalFormatError, read_batch, sample_covariances, synthesize, write_batch
from .spectral import estimate_unfold
from .topology import SolverOptions

log = logging.getLogger("prodgraph")

PRESETS = {
    "topology-strong": lambda: topology_preset(0.01),
    "topology-weak": lambda: topology_preset(0.33),
    "centrality-inv-strong": lambda: centrality_preset(0.01, "inv"),
    "centrality-exp-strong": lambda: centrality_preset(0.01, "exp"),
    "centrality-inv-weak": lambda: centrality_preset(0.33, "inv"),
    "centrality-exp-weak": lambda: centrality_preset(0.33, "exp"),
}


def _gamma(args) -> tuple[float, float, float]:
    if args.gamma is not None:
        return check_gamma(args.gamma)
    g1 = args.gamma1
    return check_gamma((g1, 2 * g1, 1 - 3 * g1))


def _add_gamma(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=float, nargs=3, metavar=("G1", "G2", "G3"),
                   help="coupling weights on the simplex")
    g.add_argument("--gamma1", type=float, default=0.01,
                   help="shorthand for gamma = (g1, 2 g1, 1 - 3 g1) (default 0.01)")


def _add_solver(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rho", type=float, default=40.0)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--thr-frac", type=float, default=0.3)
    p.add_argument("--tol-abs", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=50000)


def cmd_simulate(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.physical:
        gg = read_edgelist(args.physical)
    elif args.graph == "core-periphery":
        gg, _ = gen_core_periphery(args.n, args.core_size, args.p_cp, args.p_pp, rng)
    else:
        gg = gen_erdos_renyi(args.n, args.p, rng)
    gc = read_edgelist(args.coupling) if args.coupling else gen_path(args.m)
    gamma = _gamma(args)
    if args.filter_json:
        spec = FilterSpec.from_json(Path(args.filter_json).read_text())
    else:
        tau = args.tau_scale * max_degree_scale(interaction_matrix(gc.adj, gg.adj, gamma))
        spec = (FilterSpec.exp_interaction(tau, gamma) if args.filter == "exp"
                else FilterSpec.resolvent_interaction(tau, gamma))
    batch = synthesize(spec, gc, gg, args.samples, args.sigma2, rng, seed=args.seed)
    write_batch(batch, args.out)
    if args.graph_dir:
        d = Path(args.graph_dir)
        d.mkdir(parents=True, exist_ok=True)
        write_edgelist(gg, d / "physical.csv")
        write_edgelist(gc, d / "coupling.csv")
        (d / "filter.json").write_text(spec.to_json())
    log.info("wrote %d samples (N=%d, M=%d) to %s", batch.s, batch.n, batch.m, args.out)
    return 0


def cmd_learn(args) -> int:
    opts = SolverOptions(tol_abs=args.tol_abs, max_iter=args.max_iter)
    res = run_from_signals(args.signals, args.n, args.m, _gamma(args), args.mode, args.out,
                           args.rho, args.eps, args.thr_frac, opts)
    diag = res["estimate"].diagnostics()
    summary = {
        "mode": args.mode,
        "converged": {"coupling": res["report_c"].converged, "physical": res["report_g"].converged},
        "eigengap_warnings": diag["eigengap_warnings"],
        "incomplete": diag["incomplete"],
    }
    print(json.dumps(summary))
    for w in diag["eigengap_warnings"]:
        log.warning(w)
    if not (res["report_c"].converged and res["report_g"].converged):
        log.error("spectral-template solver did not converge")
        return 2
    return 0


def cmd_centrality(args) -> int:
    batch = read_batch(args.signals)
    if (batch.n, batch.m) != (args.n, args.m):
        raise ConfigError(f"dimension mismatch: expected N={args.n}, M={args.m}; "
                          f"file has N={batch.n}, M={batch.m}")
    covs = sample_covariances(batch)
    if args.mode == "nkd":
        res = detect_centrality(sym_evd(covs.full).vectors, batch.n, batch.m)
    else:
        est = estimate_unfold(covs)
        res = detect_centrality_unfold(est.vg, est.vc)
    out = json.loads(res.to_json())
    out["top_k"] = [i + 1 for i in topk(res.cg, args.k)]
    out["top_k_coupling"] = [i + 1 for i in topk(res.cc, min(args.k, batch.m))]
    print(json.dumps(out))
    return 0


def cmd_experiment(args) -> int:
    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
    elif args.preset:
        cfg = PRESETS[args.preset]()
    else:
        raise ConfigError("experiment needs --config or --preset")
    overrides = {k: v for k, v in {
        "seed": args.seed, "trials": args.trials, "thr_frac": args.thr_frac,
        "rho": args.rho, "eps": args.eps, "binarize": args.binarize,
    }.items() if v is not None}
    if args.exact_cov:
        overrides["exact_cov"] = True
    if overrides:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **overrides})
    rows = run_experiment(cfg, threads=args.threads)
    text = format_rows(rows, timing=args.timing)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_aggregate(args) -> int:
    text = format_summary(aggregate(read_rows(args.results)))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prodgraph", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw factor graphs and write a signal CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=10, help="physical graph size N")
    p.add_argument("--m", type=int, default=3, help="layers M (path coupling graph)")
    p.add_argument("--graph", choices=("er", "core-periphery"), default="er")
    p.add_argument("--p", type=float, default=0.4, help="Erdos-Renyi edge probability")
    p.add_argument("--core-size", type=int, default=10)
    p.add_argument("--p-cp", type=float, default=0.2)
    p.add_argument("--p-pp", type=float, default=0.05)
    p.add_argument("--physical", help="edge-list CSV for the physical graph (overrides --graph)")
    p.add_argument("--coupling", help="edge-list CSV for the coupling graph (overrides --m)")
    _add_gamma(p)
    p.add_argument("--filter", choices=("exp", "inv"), default="exp")
    p.add_argument("--filter-json", help="FilterSpec JSON (overrides --filter)")
    p.add_argument("--tau-scale", type=float, default=1.0)
    p.add_argument("-S", "--samples", type=int, default=1000)
    p.add_argument("--sigma2", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--graph-dir", help="also write the true graphs and filter here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("learn", help="learn both factor graphs from a signal CSV")
    p.add_argument("signals")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    _add_gamma(p)
    p.add_argument("--mode", choices=("nkd", "unfold"), default="nkd")
    p.add_argument("--out", required=True, help="output directory")
    _add_solver(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("centrality", help="detect the top-k central physical nodes")
    p.add_argument("signals")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--mode", choices=("nkd", "unfold"), default="nkd")
    p.set_defaults(func=cmd_centrality)

    p = sub.add_parser("experiment", help="run a Monte-Carlo experiment and write per-trial CSV")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="ExperimentConfig JSON file")
    src.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--exact-cov", action="store_true")
    p.add_argument("--thr-frac", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--binarize", choices=("factor", "interaction"))
    p.add_argument("--timing", action="store_true", help="add a wall_time column")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("aggregate", help="summarize a per-trial results CSV")
    p.add_argument("results")
    p.add_argument("--out")
    p.set_defaults(func=cmd_aggregate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericError as exc:
        log.error("%s", exc)
        return 2
    except (ConfigError, GraphError, SignalFormatError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
