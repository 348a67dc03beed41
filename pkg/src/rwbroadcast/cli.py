"""Command-line front end.

Exit status: 0 on success, 2 on a usage or configuration error, 1 when a run
fails or a requested check does not hold.

Trial records (``--format jsonl``) carry ``schema, graph, n, k, seed, point,
trial, xi, capped, phase_entry[, diagnostics]``; ``phase_entry[l-1]`` is the
first round with at least ``l`` green agents. The summary CSV has columns
``schema, graph, n, k, trials, mean, median, q05, q25, q75, q95, se,
capped_count``. Per-round trace events (``--diagnostics trace``) carry
``schema, trial, round, phase, colocations, swaps, newly_green``.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys
from fractions import Fraction

from rwbroadcast import analytic, records
from rwbroadcast.broadcast import initialize, run_reference
from rwbroadcast.experiments import (DIAGNOSTICS, ConfigError, ExperimentConfig, KRule,
                                     coupled_summary, run_coupled_trials, run_trials,
                                     theorem_regime)
from rwbroadcast.topology import GraphTopology
from rwbroadcast.walk import SeedSpec

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
FIT_HALF_WIDTH = 0.15

CAP_HELP = ("round cap per trial (default 100*n^2, far above the n^2*omega upper "
            "envelope that holds for every k); trials reaching it are flagged "
            "capped and treated as right-censored")


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or comma list, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _diag_list(text: str) -> frozenset[str]:
    vals = frozenset(v.strip() for v in text.split(",") if v.strip())
    bad = vals - set(DIAGNOSTICS)
    if bad:
        raise argparse.ArgumentTypeError(f"unknown diagnostics {sorted(bad)}")
    return vals


def _add_run_flags(p: argparse.ArgumentParser, fmt_default: str) -> None:
    p.add_argument("--graph", choices=["path", "cycle"], required=True)
    p.add_argument("--n", type=_int_list, required=True, help="vertex count or comma list")
    kk = p.add_mutually_exclusive_group(required=True)
    kk.add_argument("--k", type=int, help="number of agents")
    kk.add_argument("--k-rule", help="const:c, power:x (k=ceil(n^x)) or nlogn:c (k=ceil(c n ln n))")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=None, help=CAP_HELP)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="-", help="output file (default standard output)")
    p.add_argument("--format", choices=["jsonl", "csv"], default=fmt_default)
    p.add_argument("--diagnostics", type=_diag_list, default=frozenset(),
                   help="comma list of occupancy, leaders, trace")
    p.add_argument("--trace-out", default=None,
                   help="file for trace events (default standard error)")
    p.add_argument("--closure", action="store_true",
                   help="let the message cross whole chains of same-round meetings "
                        "(default: only contact with agents green at the start of the round)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rwbroadcast", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    _add_run_flags(sub.add_parser("simulate", help="run trials, print summary statistics"), "csv")
    sw = sub.add_parser("sweep", help="run a sweep over n and fit the scaling exponent")
    _add_run_flags(sw, "jsonl")
    sw.add_argument("--summary", default=None, help="also write the summary CSV here")

    cp = sub.add_parser("couple", help="coupled runs on C_{2(n-1)} and P_n")
    cp.add_argument("--n", type=int, required=True)
    cp.add_argument("--k", type=int, required=True)
    cp.add_argument("--trials", type=int, default=1000)
    cp.add_argument("--seed", type=int, default=0)
    cp.add_argument("--cap", type=int, default=None, help=CAP_HELP)
    cp.add_argument("--workers", type=int, default=1)
    cp.add_argument("--out", default="-")
    cp.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    cp.add_argument("--closure", action="store_true")

    an = sub.add_parser("analytic", help="exact checks")
    an.add_argument("--check", required=True,
                    choices=["reversibility", "distribution", "zwalk", "hitting", "chernoff", "azuma"])
    an.add_argument("--graph", choices=["path", "cycle"])
    an.add_argument("--n", type=int)
    an.add_argument("--t", type=int)
    an.add_argument("--i", type=int, default=1, help="start vertex for --check distribution")
    an.add_argument("--a", type=int)
    an.add_argument("--lazy", action="store_true")
    an.add_argument("--eps", type=float)
    an.add_argument("--p", type=float)
    an.add_argument("--b", type=int)
    an.add_argument("--tol", type=float, default=1e-12)

    orc = sub.add_parser("oracle", help="exact expected broadcasting time (n <= 6, k <= 3)")
    orc.add_argument("--graph", choices=["path", "cycle"], required=True)
    orc.add_argument("--n", type=int, required=True)
    orc.add_argument("--k", type=int, required=True)
    orc.add_argument("--closure", action="store_true")

    rg = sub.add_parser("regime", help="classify (n, k) and evaluate the bound envelope")
    rg.add_argument("--n", type=int, required=True)
    rg.add_argument("--k", type=int, required=True)
    return parser


@contextlib.contextmanager
def _open_out(path: str | None, stream):
    if path is None or path == "-":
        yield stream
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _config(args) -> ExperimentConfig:
    rule = KRule("const", args.k) if args.k is not None else KRule.parse(args.k_rule)
    return ExperimentConfig(args.graph, tuple(args.n), rule, args.trials, args.seed, args.cap,
                            args.closure, args.diagnostics)


def _emit_traces(cfg: ExperimentConfig, path: str | None) -> None:
    with _open_out(path, sys.stderr) as fh:
        for p, (n, k) in enumerate(cfg.points()):
            g = GraphTopology(cfg.graph, n)
            for t in range(cfg.trials):
                seed = SeedSpec(cfg.base_seed, t, p)
                prev = {"green": initialize(g, k, seed).green}

                def on_round(state, rel, green, _t=t):
                    newly = sorted(green - prev["green"])
                    prev["green"] = green
                    coloc = [sorted(s) for s in rel.groups if len(s) > 1]
                    swaps = sorted(sorted(s) for s in rel.swaps)
                    if not coloc and not swaps:
                        return
                    fh.write(records.dumps({
                        "schema": records.SCHEMA_VERSION, "point": p, "trial": _t,
                        "round": state.round, "phase": state.phase,
                        "colocations": coloc, "swaps": swaps, "newly_green": newly,
                    }) + "\n")
                run_reference(g, k, seed, cfg.cap_for(n), cfg.closure, on_round)


def _cmd_run(args, sweep: bool) -> int:
    cfg = _config(args)
    if args.workers < 1:
        raise ConfigError("workers must be >= 1")
    result = run_trials(cfg, workers=args.workers)
    rows = [s.as_row() for s in result.summaries]
    with _open_out(args.out, sys.stdout) as fh:
        if args.format == "jsonl":
            records.write_jsonl(result.records, fh)
        else:
            records.write_summary_csv(rows, fh)
    if sweep and args.summary:
        with open(args.summary, "w", encoding="utf-8", newline="\n") as fh:
            records.write_summary_csv(rows, fh)
    if "trace" in cfg.diagnostics:
        _emit_traces(cfg, args.trace_out)
    if sweep:
        if result.fit is None:
            print("fitted exponent: unavailable (need >= 3 points with uncensored medians)",
                  file=sys.stderr)
        else:
            line = f"fitted exponent of median xi vs n: {result.fit:.4f}"
            if cfg.k_rule.kind == "power":
                target = 2 - min(1.0, cfg.k_rule.value)
                lo, hi = target - FIT_HALF_WIDTH, target + FIT_HALF_WIDTH
                inside = "inside" if lo <= result.fit <= hi else "OUTSIDE"
                line += f" (target {target:.2f}, acceptance window [{lo:.2f}, {hi:.2f}]: {inside})"
            print(line, file=sys.stderr)
    return EXIT_OK


def _cmd_couple(args) -> int:
    if args.workers < 1:
        raise ConfigError("workers must be >= 1")
    recs = run_coupled_trials(args.n, args.k, args.trials, args.seed, args.cap,
                              args.closure, args.workers)
    with _open_out(args.out, sys.stdout) as fh:
        if args.format == "jsonl":
            records.write_jsonl(recs, fh)
        else:
            summ = coupled_summary(recs)
            fh.write(",".join(summ) + "\n")
            fh.write(",".join("" if v is None else str(v) for v in summ.values()) + "\n")
    return EXIT_OK


def _need(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise ConfigError(f"--check {args.check} requires {', '.join(missing)}")


def _cmd_analytic(args) -> int:
    out: dict
    ok = True
    if args.check in ("reversibility", "distribution"):
        _need(args, "graph", "n", "t")
        g = GraphTopology(args.graph, args.n)
        if args.check == "reversibility":
            rep = analytic.check_reversibility(g, args.t, args.tol)
            ok = rep.ok
            out = {"check": "reversibility", "graph": args.graph, "n": args.n, "t": args.t,
                   "max_violation": rep.max_violation, "max_asymmetry": rep.max_asymmetry,
                   "ratio_bounds_hold": rep.ratio_ok, "ok": ok}
        else:
            dv = analytic.evolve_distribution(g, args.i, args.t, exact=True)
            out = {"check": "distribution", "i": args.i, "t": args.t,
                   "probabilities": [str(p) for p in dv.probs]}
    elif args.check == "zwalk":
        _need(args, "t", "a")
        if args.t < 1 or args.a < 1:
            raise ConfigError("need --t >= 1 and --a >= 1")
        pm = analytic.z_walk_point_mass(args.t, args.a, args.lazy)
        below = analytic.z_walk_abs_below(args.t, args.a, args.lazy)
        bound = analytic.z_walk_anticoncentration_bound(args.t, args.a)
        ok = below <= Fraction(bound)
        out = {"check": "zwalk", "t": args.t, "a": args.a, "lazy": args.lazy,
               "point_mass": str(pm), "p_abs_below": float(below), "bound": bound, "ok": ok}
    elif args.check == "hitting":
        _need(args, "t", "a")
        if args.t < 1 or args.a < 1:
            raise ConfigError("need --t >= 1 and --a >= 1")
        tail = analytic.hitting_tail(args.t, args.a, args.lazy)
        bound = analytic.z_walk_anticoncentration_bound(args.t, args.a)
        ok = tail <= Fraction(bound)
        out = {"check": "hitting", "t": args.t, "a": args.a, "lazy": args.lazy,
               "tail": str(tail), "tail_float": float(tail), "bound": bound, "ok": ok}
    elif args.check == "chernoff":
        _need(args, "n", "p", "eps")
        tail, bound = analytic.chernoff_check(args.n, args.p, args.eps)
        ok = tail <= bound
        out = {"check": "chernoff", "n": args.n, "p": args.p, "eps": args.eps,
               "exact_tail": tail, "bound": bound, "ok": ok}
    else:
        _need(args, "t", "b")
        if args.t < 1 or args.b < 1:
            raise ConfigError("need --t >= 1 and --b >= 1")
        exact, bound = analytic.azuma_check(args.t, args.b)
        ok = exact <= bound
        out = {"check": "azuma", "t": args.t, "b": args.b, "exact": float(exact),
               "bound": bound, "ok": ok}
    print(json.dumps(out))
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_oracle(args) -> int:
    g = GraphTopology(args.graph, args.n)
    try:
        value = analytic.expected_xi_oracle(g, args.k, args.closure)
    except analytic.OracleTooLarge as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    print(value)
    print(f"{float(value):.12g}", file=sys.stderr)
    return EXIT_OK


def _cmd_regime(args) -> int:
    print(json.dumps(theorem_regime(args.n, args.k).as_dict()))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("simulate", "sweep"):
            return _cmd_run(args, args.command == "sweep")
        if args.command == "couple":
            return _cmd_couple(args)
        if args.command == "analytic":
            return _cmd_analytic(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        return _cmd_regime(args)
    except ConfigError as e:
        parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        # bad vertex counts, k < 2 and similar invalid inputs
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001
        print(f"error: run failed: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
