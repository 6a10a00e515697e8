"""Trace files, tables and vector plots of a simulation run.

Everything written here is a pure function of the trace, except
``timings.csv``, which holds wall-clock measurements. The diagnostics table
and the plots are therefore byte-identical across runs with identical traces.
"""
import csv
import json
from pathlib import Path

import matplotlib
import numpy as np
import shapely
from matplotlib.figure import Figure

from .scenario import from_dict

FORMAT = "starnav-trace"
VERSION = 1

TRAJECTORY = ["k", "t", "px", "py", "theta", "v", "omega", "px_next", "py_next", "theta_next"]
DIAGNOSTICS = [
    "k", "t", "rho", "r0_x", "r0_y", "rg_x", "rg_y", "eps", "s_N", "solver_status", "cost", "trivial_cost",
    "constraint_residual", "trivial_residual", "min_obstacle_distance", "next_obstacle_distance",
    "path_clearance", "disjoint", "fallback_used", "n_stars", "path_n", "path_end", "path_goal_reached",
    "path_reused", "path_fit",
]
CONTROLS = ["k", "t", "v", "omega"]
TIMINGS = ["k", "t", "star", "path", "fit", "ocp", "total", "star_build"]
RECORD_FIELDS = [
    "k", "t", "x", "u", "x_next", "rho", "r0", "rg", "path", "eps", "s_N", "solver_status", "cost",
    "trivial_cost", "constraint_residual", "trivial_residual", "min_obstacle_distance",
    "next_obstacle_distance", "path_clearance", "disjoint", "fallback_used", "n_stars", "timings",
]


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if v is None:
        return ""
    v = float(v)
    return f"{v:.12g}" if np.isfinite(v) else str(v)


def _json(v):
    if isinstance(v, np.ndarray):
        return np.round(v.astype(float), 9).tolist()
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, dict):
        return {k: _json(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json(x) for x in v]
    return v


def _rings(geom):
    """Exterior rings of every polygon part of a shapely geometry."""
    return [np.asarray(p.exterior.coords) for p in shapely.get_parts(geom) if isinstance(p, shapely.Polygon)]


def geometry_dict(detail):
    """Plain-array form of a record's plotting detail."""
    if detail is None:
        return None
    return dict(
        obstacles=[[r for r in _rings(o.to_shapely(16))] for o in detail["obstacles"]],
        stars=[s.boundary_samples(360) for s in detail["stars"]],
        centers=np.array([s.center for s in detail["stars"]]).reshape(-1, 2),
        path=detail["path"], poly=detail["poly"], tunnel_radius=detail["tunnel_radius"],
        predicted=detail["predicted"], reference=detail["reference"],
    )


def record_dict(rec):
    """JSON-ready dict of a TraceRecord (geometry included when the record kept it)."""
    d = {f: _json(getattr(rec, f)) for f in RECORD_FIELDS}
    g = geometry_dict(rec.detail)
    if g is not None:
        d["geometry"] = _json(g)
    return d


def _records(trace):
    recs = getattr(trace, "records", trace)
    return [r if isinstance(r, dict) else record_dict(r) for r in recs]


def write_trace(trace, scenario, path):
    """One JSON header line, then one JSON record per line."""
    recs = _records(trace)
    header = dict(format=FORMAT, version=VERSION, scenario=_json(scenario.source), fields=RECORD_FIELDS,
                  summary=_json(_summary(trace, recs)))
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for r in recs:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    return Path(path)


def read_trace(path):
    """(scenario, header, records) from a trace file."""
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty trace")
    header = json.loads(lines[0])
    if header.get("format") != FORMAT:
        raise ValueError(f"{path}: not a {FORMAT} file")
    if header.get("version") != VERSION:
        raise ValueError(f"{path}: unsupported trace version {header.get('version')!r}")
    recs = [json.loads(ln) for ln in lines[1:]]
    return from_dict(header["scenario"]), header, recs


def _summary(trace, recs):
    s = dict(steps=len(recs))
    if hasattr(trace, "reached"):
        s.update(reached=bool(trace.reached), t_final=float(trace.t_final), x_final=trace.x_final)
    if recs:
        s["min_obstacle_distance"] = min(float(r["min_obstacle_distance"]) for r in recs)
    return s


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _tables(recs, out):
    traj, diag, ctrl, tim = [], [], [], []
    for r in recs:
        k, t = r["k"], _num(r["t"])
        x, u, xn = r["x"], r["u"], r["x_next"]
        traj.append([k, t, *map(_num, x), *map(_num, u), *map(_num, xn)])
        ctrl.append([k, t, *map(_num, u)])
        p = r["path"]
        diag.append([
            k, t, _num(r["rho"]), *map(_num, r["r0"]), *map(_num, r["rg"]), _num(r["eps"]), _num(r["s_N"]),
            r["solver_status"], _num(r["cost"]), _num(r["trivial_cost"]), _num(r["constraint_residual"]),
            _num(r["trivial_residual"]), _num(r["min_obstacle_distance"]), _num(r["next_obstacle_distance"]),
            _num(r["path_clearance"]), _num(r["disjoint"]), _num(r["fallback_used"]), r["n_stars"], p["n"],
            _num(p["end"]), _num(p["goal_reached"]), _num(p["reused"]), p["fit"],
        ])
        tim.append([k, t] + [_num(r["timings"].get(name)) for name in TIMINGS[2:]])
    files = {"trajectory.csv": (TRAJECTORY, traj), "diagnostics.csv": (DIAGNOSTICS, diag),
             "controls.csv": (CONTROLS, ctrl), "timings.csv": (TIMINGS, tim)}
    for name, (h, rows) in files.items():
        _write_csv(out / name, h, rows)
    return [out / n for n in files]


def _save(fig, path):
    with matplotlib.rc_context({"svg.hashsalt": "starnav", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None})


def _fill_rings(ax, rings, **kw):
    for ring in rings:
        ring = np.asarray(ring)
        if len(ring) >= 3:
            ax.fill(ring[:, 0], ring[:, 1], **kw)
            kw.pop("label", None)


def _tube(curve, radius):
    """Union of discs along the curve: the tunnel boundary around the fitted path."""
    C, R = np.asarray(curve), np.asarray(radius)
    ok = R > 0
    if not ok.any():
        return []
    discs = shapely.buffer(shapely.points(C[ok]), R[ok], quad_segs=8)
    return _rings(shapely.union_all(discs))


def _extent(scenario, recs):
    P = [np.array(r["x"][:2]) for r in recs] + [np.array(recs[-1]["x_next"][:2]), scenario.goal]
    for o in scenario.obstacles:
        for t in (0.0, scenario.duration):
            b = o.at(t).bounds()
            P += [b[:2], b[2:]]
    P = np.array(P)
    lo, hi = P.min(axis=0) - 0.8, P.max(axis=0) + 0.8
    return lo, hi


def plot_snapshot(scenario, recs, i, path, extent=None):
    """World at record i: obstacles, their dilation, star world, path, tunnel and prediction."""
    r = recs[i]
    g = r["geometry"]
    t = float(r["t"])
    fig = Figure(figsize=(6.0, 4.5))
    ax = fig.add_subplot()
    for j, o in enumerate(scenario.obstacles_at(t)):
        _fill_rings(ax, _rings(o.to_shapely(16)), color="0.25", lw=0, zorder=3, label="obstacle" if j == 0 else None)
    for j, rings in enumerate(g["obstacles"]):
        _fill_rings(ax, rings, color="0.75", lw=0, zorder=2, label="dilated" if j == 0 else None)
    for j, ring in enumerate(g["stars"]):
        ring = np.asarray(ring + ring[:1])
        ax.plot(ring[:, 0], ring[:, 1], "--", color="tab:red", lw=0.9, zorder=4,
                label="star world" if j == 0 else None)
    if g["centers"]:
        C = np.asarray(g["centers"])
        ax.plot(C[:, 0], C[:, 1], "+", color="tab:red", ms=6, zorder=4)
    if g["poly"] is not None and g["tunnel_radius"] is not None:
        for j, ring in enumerate(_tube(g["poly"], g["tunnel_radius"])):
            ax.fill(ring[:, 0], ring[:, 1], color="tab:green", alpha=0.18, lw=0, zorder=5,
                    label="tunnel" if j == 0 else None)
    P = np.asarray(g["path"])
    ax.plot(P[:, 0], P[:, 1], color="tab:green", lw=1.2, zorder=6, label="reference path")
    X = np.array([q["x"][:2] for q in recs[: i + 1]])
    ax.plot(X[:, 0], X[:, 1], color="k", lw=1.0, zorder=7, label="robot path")
    Q = np.asarray(g["predicted"])
    ax.plot(Q[:, 0], Q[:, 1], ".-", color="tab:blue", lw=1.0, ms=3, zorder=8, label="prediction")
    x0 = scenario.x0
    ax.plot(x0[0], x0[1], "s", color="k", ms=5, zorder=9)
    ax.plot(*scenario.goal, "*", color="tab:orange", ms=10, zorder=9)
    ax.plot(*r["r0"], "o", mfc="none", color="tab:purple", ms=5, zorder=9, label="r0")
    ax.plot(*r["rg"], "x", color="tab:purple", ms=6, zorder=9, label="rg")
    if extent is not None:
        (x0_, y0_), (x1_, y1_) = extent
        ax.set_xlim(x0_, x1_)
        ax.set_ylim(y0_, y1_)
    ax.set_aspect("equal")
    ax.set_title(f"{scenario.name}, t = {t:.1f} s")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(loc="upper left", fontsize=6, ncol=2, framealpha=0.8)
    fig.tight_layout()
    _save(fig, path)


def plot_controls(scenario, recs, path):
    """Applied speed and turn rate over time with their bounds."""
    t = np.array([r["t"] for r in recs])
    U = np.array([r["u"] for r in recs]).reshape(-1, 2)
    rp = scenario.control.robot
    fig = Figure(figsize=(6.0, 4.0))
    ax1, ax2 = fig.subplots(2, 1, sharex=True)
    ax1.step(t, U[:, 0], where="post", color="tab:blue")
    ax1.axhline(rp.v_max, color="0.5", ls=":", lw=0.8)
    ax1.axhline(rp.v_min, color="0.5", ls=":", lw=0.8)
    ax1.set_ylabel("v [m/s]")
    ax2.step(t, U[:, 1], where="post", color="tab:red")
    for b in (rp.w_max, -rp.w_max):
        ax2.axhline(b, color="0.5", ls=":", lw=0.8)
    ax2.set_ylabel("omega [rad/s]")
    ax2.set_xlabel("t [s]")
    ax1.set_title(f"{scenario.name}: control inputs")
    fig.tight_layout()
    _save(fig, path)


def snapshot_indices(recs, times):
    """Index of the record nearest to each time among those carrying geometry."""
    have = [i for i, r in enumerate(recs) if r.get("geometry") is not None]
    if not have:
        return []
    T = np.array([recs[i]["t"] for i in have])
    return [have[int(np.argmin(np.abs(T - t)))] for t in times]


def emit_outputs(trace, scenario, out_dir, snapshots=None, write_trace_file=True):
    """Write tables, the trace and plots to out_dir; returns the written paths.

    ``snapshots`` defaults to the scenario's snapshot times. One world plot is
    written per requested time, using the nearest record that kept geometry.
    """
    recs = _records(trace)
    if not recs:
        raise ValueError("cannot emit outputs of an empty trace")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = _tables(recs, out)
    if write_trace_file:
        written.append(write_trace(trace, scenario, out / "trace.jsonl"))
    times = list(scenario.snapshots if snapshots is None else snapshots)
    idx = snapshot_indices(recs, times)
    if times and not idx:
        raise ValueError("no trace record carries plot geometry")
    ext = _extent(scenario, recs)
    for n, (t, i) in enumerate(zip(times, idx)):
        p = out / f"snapshot_{n:02d}_t{t:06.2f}.svg"
        plot_snapshot(scenario, recs, i, p, ext)
        written.append(p)
    p = out / "controls.svg"
    plot_controls(scenario, recs, p)
    written.append(p)
    return written


def replay(trace_path, out_dir, snapshots=None):
    """Re-emit tables and plots from a trace file."""
    scenario, _, recs = read_trace(trace_path)
    return emit_outputs(recs, scenario, out_dir, snapshots, write_trace_file=False)
