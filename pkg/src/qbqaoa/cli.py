"""Command-line interface: ``qbqaoa <command> ...``."""

import argparse
import json
import sys
from pathlib import Path

from .analysis import run_experiment
from .config import load_config, validate_config
from .datasets import instance1_moments
from .encoding import build_layout
from .exceptions import QBQAOAError
from .market import (
    MarketMoments,
    compute_moments,
    frontier_variance,
    load_price_history,
    risk_factor_from_target,
    target_from_risk_factor,
)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _json(data):
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def cmd_moments(args):
    moments = compute_moments(load_price_history(args.prices))
    if args.tickers:
        moments = moments.subset(args.tickers)
    _emit(moments.to_json(indent=2, sort_keys=True) + "\n", args.output)


def cmd_frontier(args):
    if args.moments:
        moments = MarketMoments.from_json(Path(args.moments).read_text())
    else:
        moments = instance1_moments()
    if args.q is not None:
        q = args.q
        mu = target_from_risk_factor(moments, q)
    else:
        mu = args.mu
        q = risk_factor_from_target(moments, mu)
    _emit(_json({"q": q, "mu": mu, "variance": frontier_variance(moments, mu)}), args.output)


def cmd_encode(args):
    _emit(build_layout(args.R).to_json(indent=2) + "\n", args.output)


def _experiment(kind):
    def run(args):
        cfg = load_config(args.config) if args.config else validate_config({})
        if kind is not None:
            cfg["experiment"] = kind
        for path in run_experiment(cfg, args.output):
            print(path)

    return run


def build_parser():
    parser = argparse.ArgumentParser(prog="qbqaoa", description="Quasi-binary hard-constraint QAOA for integer portfolios.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="price CSV -> moments JSON")
    p.add_argument("prices")
    p.add_argument("--tickers", nargs="+")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("frontier", help="convert between risk factor q and target return mu")
    p.add_argument("--moments", help="moments JSON (default: bundled six-stock inputs)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--q", type=float)
    g.add_argument("--mu", type=float)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_frontier)

    p = sub.add_parser("encode", help="ranges R -> qubit layout JSON")
    p.add_argument("R", type=int, nargs="+")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_encode)

    for name, kind, text in [
        ("solve", "solve", "run QAOA on the configured instance"),
        ("mixability", "mixability", "mixability matrix as PGM, CSV and JSON"),
        ("iterate", "iterate", "precision increasing iteration"),
        ("sweep-qubits", "sweep-qubits", "qubit count per range"),
        ("run", None, "run the experiment named in the config"),
    ]:
        p = sub.add_parser(name, help=text)
        p.add_argument("config", nargs="?" if kind else None)
        p.add_argument("-o", "--output", required=True, help="output directory")
        p.set_defaults(func=_experiment(kind))
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (QBQAOAError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
