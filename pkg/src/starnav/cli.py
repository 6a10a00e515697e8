"""Command line: run a scenario, check its invariants, or replay a trace."""
import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .errors import StarnavError
from .harness import load_scenario, shipped_scenarios, simulate
from .harness.outputs import emit_outputs, replay


def _times(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated times, got {text!r}") from None


def _out_dir(arg, default):
    if arg is not None:
        return Path(arg)
    env = os.environ.get("STARNAV_OUT")
    return Path(env) / default if env else Path("out") / default


def _summary(res):
    recs = res.records
    d = min(r.min_obstacle_distance for r in recs) if recs else float("nan")
    total = np.median([r.timings["total"] for r in recs]) if recs else float("nan")
    arrival = f"{res.t_final:.1f} s" if res.reached else "not reached"
    return f"steps={len(recs)} goal={arrival} min_distance={d:.4f} median_step={total:.1f} ms"


def cmd_run(a):
    sc = load_scenario(a.scenario)
    times = sc.snapshots if a.snapshots is None else a.snapshots
    res = simulate(sc, detail_times=list(times))
    out = _out_dir(a.out, sc.name)
    files = emit_outputs(res, sc, out, times)
    print(f"{sc.name}: {_summary(res)}")
    print(f"wrote {len(files)} files to {out}")
    return 0


def check_result(res, sc):
    """Invariant violations of a finished run, as readable strings."""
    c = sc.control
    bad = []
    for r in res.records:
        if not r.min_obstacle_distance > 0:
            bad.append(f"k={r.k}: robot touches an obstacle (distance {r.min_obstacle_distance:.3g})")
        if r.trivial_residual > 1e-6:
            bad.append(f"k={r.k}: trivial solution residual {r.trivial_residual:.3g}")
        if r.path_clearance < -1e-6:
            bad.append(f"k={r.k}: reference path clearance {r.path_clearance:.3g} below rho")
        if r.cost > r.trivial_cost + 1e-9:
            bad.append(f"k={r.k}: cost {r.cost:.6g} above trivial {r.trivial_cost:.6g}")
        if r.constraint_residual > 1e-6:
            bad.append(f"k={r.k}: returned solution residual {r.constraint_residual:.3g}")
    if res.records and np.median([r.timings["total"] for r in res.records]) > 0.5e3 * c.dt:
        bad.append("median step time above half the sampling period")
    return bad


def cmd_check(a):
    sc = load_scenario(a.scenario)
    res = simulate(sc)
    bad = check_result(res, sc)
    print(f"{sc.name}: {_summary(res)}")
    for b in bad:
        print("  FAIL " + b)
    print("ok" if not bad else f"{len(bad)} violation(s)")
    return 0 if not bad else 1


def cmd_replay(a):
    out = _out_dir(a.out, Path(a.trace).stem + "_replay")
    files = replay(a.trace, out, a.snapshots)
    print(f"wrote {len(files)} files to {out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="starnav", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="simulate a scenario and write tables, trace and plots")
    r.add_argument("scenario", help=f"scenario file or shipped name ({', '.join(shipped_scenarios())})")
    r.add_argument("--out", help="output directory (default $STARNAV_OUT/<name> or out/<name>)")
    r.add_argument("--snapshots", type=_times, help="comma-separated plot times in seconds")
    r.set_defaults(func=cmd_run)
    c = sub.add_parser("check", help="simulate a scenario and check the safety and solver invariants")
    c.add_argument("scenario")
    c.set_defaults(func=cmd_check)
    y = sub.add_parser("replay", help="re-emit tables and plots from a trace file")
    y.add_argument("trace")
    y.add_argument("--out")
    y.add_argument("--snapshots", type=_times)
    y.set_defaults(func=cmd_replay)
    return p


def main(argv=None):
    a = build_parser().parse_args(argv)
    try:
        return a.func(a)
    except (StarnavError, FileNotFoundError, ValueError) as e:
        print(f"starnav: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
