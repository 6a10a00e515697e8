"""Closed-loop simulation of the reshape / path / MPC pipeline."""
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .. import ocp as ocp_mod
from .._kernels import warmup
from ..errors import ApproxTooCoarse, AssumptionViolated, RobotInCollision, TunnelViolated
from ..geometry.primitives import AtomBatch
from ..models import dp_max, unicycle
from ..refpath import fit_poly, integrate_path, maybe_reuse
from ..starworld import build_star_world


@dataclass(eq=False)
class TraceRecord:
    k: int
    t: float
    x: np.ndarray
    u: np.ndarray
    x_next: np.ndarray
    rho: float
    r0: np.ndarray
    rg: np.ndarray
    path: dict
    eps: float
    s_N: float
    solver_status: str
    cost: float
    trivial_cost: float
    constraint_residual: float
    trivial_residual: float
    min_obstacle_distance: float
    next_obstacle_distance: float
    path_clearance: float
    disjoint: bool
    fallback_used: bool
    n_stars: int
    timings: dict
    detail: dict = field(default=None, repr=False)


@dataclass(eq=False)
class SimResult:
    scenario: object
    records: list
    x_final: np.ndarray
    t_final: float
    reached: bool

    def __len__(self):
        return len(self.records)

    @property
    def positions(self):
        """Robot positions at each record plus the final one."""
        P = [r.x[:2] for r in self.records] + [self.x_final[:2]]
        return np.array(P)

    @property
    def arrival_time(self):
        return self.t_final if self.reached else None


def build_model(control):
    rp = control.robot
    return unicycle(rp.v_max, rp.w_max, control.dt, rp.radius, rp.v_min)


def _half_path(path):
    """The path frozen at half its moving length (constant tail afterwards)."""
    cut = 0.5 * path.end
    keep = path.s <= cut
    s = np.append(path.s[keep], [cut, path.N])
    P = np.vstack([path.points[keep], path.at(cut)[None], path.at(cut)[None]])
    s, idx = np.unique(s, return_index=True)
    return replace(path, s=s, points=P[idx], tail_from=cut, goal_reached=False)


def _fit(path, control, rho):
    try:
        return fit_poly(path, control.degree, rho), "full"
    except ApproxTooCoarse:
        pass
    try:
        return fit_poly(_half_path(path), control.degree, rho), "half"
    except ApproxTooCoarse:
        return None, "none"


def step_pipeline(scenario, x, O, t, prev_path=None, warm=None, u_prev=None, model=None, dpm=None,
                  now=time.perf_counter, detail=False):
    """One control step on the frozen dilated obstacles O; returns (record, path, solution)."""
    c = scenario.control
    model = build_model(c) if model is None else model
    dpm = dp_max(model) if dpm is None else dpm
    u_prev = model.idle_input if u_prev is None else u_prev
    N = c.ocp.N
    p = model.output(x)
    batch = AtomBatch([a for o in O for a in o.atoms()])
    d_now = batch.clearance(p) if len(batch) else np.inf
    T = {}
    t0 = now()
    world = build_star_world(O, p, scenario.goal, c.workspace, now=now)
    t1 = now()
    T["star"] = t1 - t0
    path = maybe_reuse(prev_path, world, p, c.path_max_time, now=now)
    reused = path is not None
    if path is None:
        left = max(0.0, c.path_max_time - (now() - t1))
        path = integrate_path(world.r0, world.rg, world, N, dpm, left, now=now)
    t2 = now()
    T["path"] = t2 - t1
    poly, fit_kind = _fit(path, c, world.rho)
    t3 = now()
    T["fit"] = t3 - t2
    if poly is not None:
        sol = ocp_mod.solve(x, poly, c.ocp, warm, model, u_prev, dpm, now=now)
    else:
        params = replace(c.ocp, tunnel_radius=world.rho, tunnel_mode="constant")
        sol = replace(ocp_mod.trivial_solution(x, world.r0, params, model, None, u_prev), status="fallback_trivial")
    t4 = now()
    T["ocp"] = t4 - t3
    T["total"] = t4 - t0
    T["star_build"] = world.construct_elapsed
    # independent check of the idle sequence (not part of the timed pipeline)
    if poly is not None:
        triv = ocp_mod.trivial_solution(x, world.r0, c.ocp, model, poly, u_prev)
        eps = poly.eps
    else:
        triv, eps = sol, np.nan
    u = ocp_mod.extract_control(sol)
    x_next = model.step(x, u)
    p_next = model.output(x_next)
    d_next = batch.clearance(p_next) if len(batch) else np.inf
    pc = batch.clearance(path.points) if len(batch) else np.full(len(path.points), np.inf)
    summary = dict(n=len(path), end=float(path.end), goal_reached=bool(path.goal_reached),
                   truncated_at=path.truncated_at, reused=reused, fit=fit_kind)
    rec = TraceRecord(
        k=0, t=t, x=np.array(x, float), u=u, x_next=x_next, rho=world.rho, r0=world.r0, rg=world.rg,
        path=summary, eps=float(eps), s_N=sol.s_N, solver_status=sol.status, cost=sol.cost,
        trivial_cost=triv.cost, constraint_residual=sol.constraint_residual,
        trivial_residual=triv.constraint_residual, min_obstacle_distance=float(d_now),
        next_obstacle_distance=float(d_next), path_clearance=float(np.min(pc) - world.rho),
        disjoint=world.disjoint, fallback_used=world.fallback_used, n_stars=len(world.obstacles),
        timings={k: 1e3 * v for k, v in T.items()},
    )
    if detail:
        S = np.linspace(0.0, N, 101)
        radius = None
        if poly is not None:
            try:
                radius = ocp_mod.Tunnel(poly, c.ocp, dpm)(S)[0]
            except TunnelViolated:
                pass
        rec.detail = dict(
            obstacles=O, stars=world.obstacles, path=path.points.copy(),
            poly=None if poly is None else poly(S), tunnel_radius=radius, predicted=sol.positions.copy(),
            reference=None if poly is None else poly(np.clip(sol.predicted_states[:, -1], 0, N)),
        )
    return rec, path, sol


def simulate(scenario, detail_times=None, now=time.perf_counter, max_steps=None):
    """Run the closed loop until the goal is reached or the duration elapses.

    ``detail_times`` selects the steps (nearest to each time) whose full
    geometry is kept for plotting; ``True`` keeps every step. Unless it is
    None the last step also keeps its geometry, so late snapshot times have
    something to show.
    """
    warmup()
    c = scenario.control
    model = build_model(c)
    dpm = dp_max(model)
    dt = c.dt
    x = np.array(scenario.x0, dtype=float)
    O = scenario.world_at(0.0)
    batch = AtomBatch([a for o in O for a in o.atoms()])
    if len(batch) and not batch.clearance(model.output(x)) > 0.0:
        raise RobotInCollision("initial robot position is not collision-free")
    steps = int(np.floor(scenario.duration / dt + 1e-9))
    if max_steps is not None:
        steps = min(steps, max_steps)
    if detail_times is True:
        keep = set(range(steps + 1))
    elif detail_times is None:
        keep = None
    else:
        keep = {int(round(tt / dt)) for tt in detail_times}
    records, prev_path, warm, u_prev = [], None, None, model.idle_input
    reached = False
    k = 0
    for k in range(steps + 1):
        t = k * dt
        if np.hypot(*(model.output(x) - scenario.goal)) < c.goal_tol:
            reached = True
            break
        if k == steps:
            break
        rec, prev_path, sol = step_pipeline(scenario, x, O, t, prev_path, warm, u_prev, model, dpm,
                                            now=now, detail=keep is not None)
        rec.k = k
        if records and records[-1].k not in (keep or ()):
            records[-1].detail = None
        records.append(rec)
        u_prev = rec.u
        warm = ocp_mod.shift_warm_start(sol, float(sol.inputs[0, -1]), c.ocp.N)
        x = rec.x_next
        O = scenario.world_at(t + dt)
        batch = AtomBatch([a for o in O for a in o.atoms()])
        if len(batch) and not batch.clearance(model.output(x)) > 0.0:
            raise AssumptionViolated(f"an obstacle moved onto the robot at t={t + dt:.3f}")
    return SimResult(scenario, records, x, k * dt, reached)

