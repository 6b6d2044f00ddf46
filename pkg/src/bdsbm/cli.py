"""Command-line interface: ``bdsbm {simulate,fit,select,eval,ingest}``.

Exit codes: 0 on success, 2 on invalid input, 3 when a numerical solve fails.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np

from . import io
from .evaluation import report
from .exceptions import BDSBMError, SolverError
from .ingest import DISCARD, TIE_RULES, IngestConfig, ingest, parse_timestamp, read_publications
from .initialization import InitOptions, initialize
from .model import RATE_MODES, SHARED, ModelParams, TemporalNetwork
from .selection import icl, select_k
from .simulator import PI_HIGH, PI_LOW, SimConfig, simulate
from .vem import FitOptions, fit

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3
PRESETS = {"high": PI_HIGH, "low": PI_LOW}


class UsageError(BDSBMError, ValueError):
    pass


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def parse_k_range(text):
    """``"2..6"`` or ``"2,3,5"`` into a sorted list of ints."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        values = list(range(int(lo), int(hi) + 1))
    elif "-" in text and not text.startswith("-"):
        lo, hi = text.split("-", 1)
        values = list(range(int(lo), int(hi) + 1))
    else:
        values = [int(x) for x in text.split(",") if x.strip()]
    if not values:
        raise UsageError(f"empty K range {text!r}")
    return sorted(set(values))


def _rate(values, K, mode):
    if mode == SHARED:
        if len(values) != 1:
            raise UsageError("shared rate mode takes a single rate")
        return values[0]
    if len(values) == 1:
        return np.full(K, values[0])
    if len(values) != K:
        raise UsageError(f"expected {K} per-community rates")
    return np.array(values)


def _sim_params(args):
    if args.params:
        return io.read_params(args.params)
    if args.pi in PRESETS:
        pi = PRESETS[args.pi]
    else:
        pi = np.array(json.loads(args.pi), dtype=float)
    K = pi.shape[0]
    if args.beta:
        beta = np.array(_floats(args.beta))
    elif args.sizes:
        sizes = np.array(_floats(args.sizes))
        beta = sizes / sizes.sum()
    else:
        beta = np.full(K, 1.0 / K)
    return ModelParams(_rate(_floats(args.lam), K, args.rate_mode),
                       _rate(_floats(args.mu), K, args.rate_mode), beta, pi, args.rate_mode)


def cmd_simulate(args):
    params = _sim_params(args)
    sizes = [int(x) for x in _floats(args.sizes)] if args.sizes else None
    config = SimConfig(params, sizes=sizes, n0=args.n0, t0=args.t0, tT=args.tT,
                       snapshot_times=_floats(args.times) if args.times else None,
                       snapshot_spacing=args.spacing, seed=args.seed)
    sim = simulate(config)
    io.write_dataset(args.out, sim.history, sim.snapshots, {"extinct": bool(sim.extinct)})
    io.write_labels(os.path.join(args.out, "labels.csv"), sim.labels)
    io.write_params(os.path.join(args.out, "params.json"), params)
    print(f"simulated {sim.history.n_individuals} individuals, "
          f"{sim.history.n_events} events -> {args.out}")


def _options(args):
    fit_opts = FitOptions(args.max_iter, args.tol, args.sweeps, args.seed, args.rate_mode)
    init_opts = InitOptions(args.omega, args.restarts, args.seed)
    return fit_opts, init_opts


def cmd_fit(args):
    history, snaps = io.read_dataset(args.data)
    network = TemporalNetwork(history, snaps)
    fit_opts, init_opts = _options(args)
    delta, params = initialize(network, args.k, init_opts, args.rate_mode)
    result = fit(network, delta, params, fit_opts)
    os.makedirs(args.out, exist_ok=True)
    io.write_params(os.path.join(args.out, "params.json"), result.params)
    io.write_memberships(os.path.join(args.out, "memberships.csv"), result.state.delta)
    io.write_labels(os.path.join(args.out, "labels.csv"), result.labels)
    io.write_elbo(os.path.join(args.out, "elbo.csv"), result.elbo_trace)
    summary = {
        "converged": result.converged,
        "n_iter": result.n_iter,
        "elbo": result.elbo,
        "icl": icl(result, network),
        "diagnostics": {k: (float(v) if isinstance(v, float) else int(v))
                        for k, v in result.diagnostics.items()},
    }
    io._write_json(os.path.join(args.out, "fit.json"), summary)
    print(f"K={args.k} elbo={result.elbo:.6f} converged={result.converged} "
          f"iterations={result.n_iter} -> {args.out}")


def cmd_select(args):
    history, snaps = io.read_dataset(args.data)
    network = TemporalNetwork(history, snaps)
    fit_opts, init_opts = _options(args)
    table = select_k(network, parse_k_range(args.k_range), args.n_inits, fit_opts, init_opts,
                     seeds=[args.seed + s for s in range(args.n_inits)])
    io.write_icl_table(args.out, table)
    print(f"selected K={table.selected_K}; winners per seed: {table.histogram} -> {args.out}")


def cmd_eval(args):
    pred = io.read_labels(args.pred)
    truth = io.read_labels(args.truth)
    history = times = None
    if args.data:
        history, snaps = io.read_dataset(args.data)
        times = snaps.times
    K = args.k or int(max(pred.max(initial=0), truth.max(initial=0))) + 1
    rep = report(pred, truth, history, times, K)
    io.write_report(args.out, rep)
    print(f"accuracy={rep.accuracy:.6f} -> {args.out}")


def _time_arg(text):
    return parse_timestamp(text)


def cmd_ingest(args):
    records = read_publications(args.input)
    config = IngestConfig(_time_arg(args.start), _time_arg(args.end), args.ancestor_window,
                          args.bin_width, args.tie_rule, args.max_authors)
    result = ingest(records, config)
    io.write_dataset(args.out, result.history, result.snapshots,
                     {"discarded_authors": result.discarded})
    io.write_authors(os.path.join(args.out, "authors.csv"), result.authors)
    h = result.history
    print(f"N0={h.n0} N={h.n_individuals} M={h.n_events} bins={result.snapshots.times.size} "
          f"-> {args.out}")


def _add_fit_flags(p):
    p.add_argument("--data", required=True, help="directory with events.csv, snapshots.csv, meta.json")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--omega", type=float, default=0.9)
    p.add_argument("--restarts", type=int, default=10, help="k-means restarts")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--sweeps", type=int, default=1, help="fixed-point sweeps per VE step")
    p.add_argument("--rate-mode", choices=RATE_MODES, default=SHARED)


def build_parser():
    parser = argparse.ArgumentParser(prog="bdsbm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a temporal network")
    p.add_argument("--out", required=True)
    p.add_argument("--params", help="params.json to simulate from")
    p.add_argument("--pi", default="high", help="'high', 'low' or a JSON matrix")
    p.add_argument("--lambda", dest="lam", default="0.04")
    p.add_argument("--mu", default="0.02")
    p.add_argument("--beta", help="comma-separated proportions")
    p.add_argument("--sizes", help="comma-separated initial community sizes")
    p.add_argument("--n0", type=int, help="initial population when sizes are not given")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--tT", type=float, default=100.0)
    p.add_argument("--spacing", type=float, default=1.0)
    p.add_argument("--times", help="explicit comma-separated snapshot times")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rate-mode", choices=RATE_MODES, default=SHARED)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a BD-SBM with a given K")
    _add_fit_flags(p)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="ICL sweep over K")
    _add_fit_flags(p)
    p.add_argument("--k-range", required=True, help="e.g. 2..6 or 3,4,5")
    p.add_argument("--n-inits", type=int, default=10)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eval", help="accuracy against true labels")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--data", help="data directory, enables the accuracy series")
    p.add_argument("--k", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ingest", help="build a data set from publication records")
    p.add_argument("--input", required=True, help="publications.txt")
    p.add_argument("--out", required=True)
    p.add_argument("--start", required=True, help="ISO-8601 date or epoch seconds")
    p.add_argument("--end", required=True)
    p.add_argument("--ancestor-window", type=float, required=True, help="days")
    p.add_argument("--bin-width", type=float, default=61.0, help="days")
    p.add_argument("--tie-rule", choices=TIE_RULES, default=DISCARD)
    p.add_argument("--max-authors", type=int)
    p.set_defaults(func=cmd_ingest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except SolverError as exc:
        print(f"bdsbm: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (BDSBMError, ValueError, OSError) as exc:
        print(f"bdsbm: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
