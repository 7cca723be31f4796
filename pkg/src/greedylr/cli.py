"""Command-line driver: ``fit``, ``verify`` and ``experiment``."""
import argparse
import logging
import os
import sys
from pathlib import Path

from . import io as gio
from .errors import GreedyLRError
from .experiments import (CLUSTERING_HEADER, RECOVERY_HEADER, ClusteringGrid, p_grid,
                          run_clustering_experiment, run_recovery_experiment)
from .objective import BinomialCounts, LinearMeasurements, LogisticPCA, QuadraticFull
from .seeding import derive_seed, rng_for
from .solvers import (SolverConfig, partition_pool, random_atoms, run_distributed_greedy,
                      run_geco, run_greedy)
from .suites import REPORT_HEADER, SUITE_NAMES, run_suite

log = logging.getLogger("greedylr")

EPILOG = """\
output schemas (UTF-8, LF, header row):
  fit        history.csv   iteration,gain,f_after,sigma_estimate
             support.txt   one atom per line: u entries | v entries
             B.mtx         MatrixMarket array
  verify     report CSV    check,seed,lhs,rhs,slack,holds  (holds: true|false|vacuous)
  sbm        CSV           method,k,p,run,reconstruction,generalization
  recovery   CSV           seed,m1,m2,r,n,sigma,k,error,rhs,m,C,holds,vacuous

The root seed defaults to $LOWRANK_SEED (or 0). Per-component seeds are
derived by hashing the root seed with a component tag.
"""


def _default_seed():
    return int(os.environ.get("LOWRANK_SEED", "0"))


def _positive_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be a nonnegative integer")
    return value


def _int_list(text):
    return tuple(int(x) for x in text.split(",") if x)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="greedylr", description="Greedy low-rank estimation by rank-1 atom selection.",
        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", help="flat key=value file; command-line flags win")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {}

    fit = sub.add_parser("fit", help="fit a low-rank estimate", epilog=EPILOG,
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    fit.add_argument("--loss", choices=["quadratic", "logistic", "binomial", "linear"],
                     default="quadratic")
    fit.add_argument("--input", help="MatrixMarket data matrix (design matrix for --loss linear)")
    fit.add_argument("--response", help="responses for --loss linear")
    fit.add_argument("--shape", type=int, nargs=2, metavar=("M1", "M2"),
                     help="parameter shape for --loss linear")
    fit.add_argument("--k", type=_positive_int, default=1)
    fit.add_argument("--algorithm", choices=["greedy", "geco", "distributed"], default="geco")
    fit.add_argument("--tau", type=float)
    fit.add_argument("--pool-size", type=int, default=16)
    fit.add_argument("--partitions", type=int, default=2, help="pools for --algorithm distributed")
    fit.add_argument("--seed", type=int, default=_default_seed())
    fit.add_argument("--jobs", type=int, default=1)
    fit.add_argument("--output-dir", default=".")
    parsers["fit"] = fit

    ver = sub.add_parser("verify", help="run numerical guarantee checks", epilog=EPILOG,
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    ver.add_argument("--suite", choices=SUITE_NAMES, default="quick")
    ver.add_argument("--instances", type=int)
    ver.add_argument("--seed", type=int, default=_default_seed())
    ver.add_argument("--jobs", type=int, default=1)
    ver.add_argument("--output", default="verify.csv")
    parsers["verify"] = ver

    exp = sub.add_parser("experiment", help="clustering and recovery studies")
    esub = exp.add_subparsers(dest="study", required=True)
    sbm = esub.add_parser("sbm", help="SBM clustering grid", epilog=EPILOG,
                          formatter_class=argparse.RawDescriptionHelpFormatter)
    sbm.add_argument("--n", type=int, default=60)
    sbm.add_argument("--k-true", type=int, default=3)
    sbm.add_argument("--p-grid", default="0.55:0.95:0.05", help="start:stop:step, inclusive")
    sbm.add_argument("--ks", type=_int_list, default=(3, 5, 10))
    sbm.add_argument("--runs", type=int, default=10)
    sbm.add_argument("--spectral-estimate", choices=["blocks", "eigen"], default="blocks",
                     help="baseline estimate: label block means or eigenvector projection")
    sbm.add_argument("--seed", type=int, default=_default_seed())
    sbm.add_argument("--jobs", type=int, default=1)
    sbm.add_argument("--output", default="sbm.csv")
    parsers["sbm"] = sbm
    rec = esub.add_parser("recovery", help="Gaussian linear-measurement recovery", epilog=EPILOG,
                          formatter_class=argparse.RawDescriptionHelpFormatter)
    rec.add_argument("--m1", type=int, default=8)
    rec.add_argument("--m2", type=int, default=8)
    rec.add_argument("--r", type=int, default=2)
    rec.add_argument("--n", type=int, default=600)
    rec.add_argument("--sigma", type=float, default=0.1)
    rec.add_argument("--k", type=int, default=4)
    rec.add_argument("--seeds", type=int, default=1, help="number of instances")
    rec.add_argument("--seed", type=int, default=_default_seed())
    rec.add_argument("--output", default="recovery.csv")
    parsers["recovery"] = rec
    return parser, parsers


def read_config(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config(parser, parsers, argv):
    known, _ = parser.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    entries = read_config(known.config)
    target = parsers[known.study] if known.command == "experiment" else parsers[known.command]
    defaults = {}
    for action in target._actions:
        if action.dest in entries:
            raw = entries[action.dest]
            if action.nargs in ("+", 2):
                defaults[action.dest] = [action.type(x) if action.type else x for x in raw.split()]
            else:
                defaults[action.dest] = action.type(raw) if action.type else raw
    target.set_defaults(**defaults)
    return parser.parse_args(argv)


def _load_objective(args, parser):
    if not args.input:
        parser.error("fit needs --input")
    data = gio.read_matrix(args.input)
    if args.loss == "quadratic":
        return QuadraticFull(data)
    if args.loss == "logistic":
        return LogisticPCA(data)
    if args.loss == "binomial":
        return BinomialCounts(data)
    if not args.response or not args.shape:
        parser.error("--loss linear needs --response and --shape")
    return LinearMeasurements.from_design(data, gio.read_matrix(args.response).ravel(), args.shape)


def cmd_fit(args, parser):
    obj = _load_objective(args, parser)
    cfg = SolverConfig(k=args.k, tau=args.tau, pool_size=args.pool_size, seed=args.seed,
                       jobs=args.jobs)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.algorithm == "geco":
        support, sol, history = run_geco(obj, cfg)
    elif args.algorithm == "greedy":
        support, sol, history = run_greedy(obj, cfg)
    else:
        pool = random_atoms(obj.n, obj.d, args.pool_size, rng_for(args.seed, "fit-pool"))
        support, sol, report = run_distributed_greedy(obj, partition_pool(pool, args.partitions), cfg)
        if report.chosen == "merged":
            history = report.merged_history
        else:
            history = report.partition_histories[int(report.chosen.split(":")[1])]
        gio.write_csv(out / "distributed.csv", ["part", "f_value"],
                      [[j, repr(v)] for j, v in enumerate(report.partition_values)]
                      + [["merged", repr(report.merged_value)]])
    gio.write_text(out / "support.txt", support.to_text())
    gio.write_matrix(out / "B.mtx", sol.B)
    gio.write_text(out / "history.csv", history.to_csv())
    flagged = [r.iteration for r in history.records if not r.refit_converged]
    if flagged:
        log.warning("refit hit max_iter at iterations %s", flagged)
    print(f"rank {len(support)}  f = {sol.f_value!r}")
    return 0


def cmd_verify(args, parser):
    if args.instances is not None and args.instances < 1:
        parser.error("--instances must be positive")
    rows = run_suite(args.suite, args.seed, args.instances, args.jobs)
    gio.write_csv(args.output, REPORT_HEADER, [r.as_csv_row() for r in rows])
    failing = [r for r in rows if not r.vacuous and not r.holds]
    print(f"{len(rows)} checks, {len(failing)} failing -> {args.output}")
    for r in failing:
        print(f"FAIL {r.check} seed={r.seed} lhs={r.lhs!r} rhs={r.rhs!r}", file=sys.stderr)
    return 1 if failing else 0


def cmd_sbm(args, parser):
    try:
        start, stop, step = (float(x) for x in args.p_grid.split(":"))
        ps = p_grid(start, stop, step)
    except ValueError as exc:
        parser.error(f"invalid --p-grid {args.p_grid!r}: {exc}")
    if any(not 0 < p <= 1 for p in ps):
        parser.error("p values must lie in (0, 1]")
    grid = ClusteringGrid(n=args.n, k_true=args.k_true, p_values=ps, ks=args.ks,
                          runs=args.runs, seed=args.seed,
                          spectral_estimate=args.spectral_estimate)
    rows, failures = run_clustering_experiment(grid, jobs=args.jobs)
    gio.write_csv(args.output, CLUSTERING_HEADER, [r.as_csv_row() for r in rows])
    cells = len(ps) * args.runs * len(grid.methods)
    ok = 1.0 - len(failures) / cells
    print(f"{len(rows)} rows, {len(failures)} failed cells -> {args.output}")
    return 0 if ok >= 0.95 else 1


def cmd_recovery(args, parser):
    if min(args.m1, args.m2, args.n) < 1 or args.r < 0 or args.k < 0 or args.sigma < 0:
        parser.error("recovery parameters must be positive")
    reports = [run_recovery_experiment(args.m1, args.m2, args.r, args.n, args.sigma, args.k,
                                       seed=derive_seed(args.seed, "recovery", i))
               for i in range(args.seeds)]
    gio.write_csv(args.output, RECOVERY_HEADER, [r.as_csv_row() for r in reports])
    for r in reports:
        print(f"error={r.error!r} rhs={r.rhs!r} holds={r.holds}")
    return 0 if all(r.holds for r in reports) else 1


def main(argv=None):
    parser, parsers = build_parser()
    args = _apply_config(parser, parsers, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "fit":
            return cmd_fit(args, parsers["fit"])
        if args.command == "verify":
            return cmd_verify(args, parsers["verify"])
        if args.study == "sbm":
            return cmd_sbm(args, parsers["sbm"])
        return cmd_recovery(args, parsers["recovery"])
    except (OSError, GreedyLRError, ValueError) as exc:
        print(f"greedylr: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
