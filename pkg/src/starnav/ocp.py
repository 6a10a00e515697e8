"""Tunnel-following MPC over a polynomial reference path.

The decision vector stacks, for each stage, the model input and the path
increment ``ds``.  Progress ``s_N`` is rewarded, the terminal tracking error
and input changes are penalized, and every predicted position must stay in a
ball around the reference point it is paired with.  No obstacle appears in the
problem: clearance comes from the path.
"""
import time
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from ._kernels import unicycle_tunnel
from .errors import TunnelViolated
from .geometry._vec import wrap_angle

MARGIN = 1e-9
# extra relative backoff handed to the solver so that its final iterate,
# which may sit on the constraint to round-off, passes the strict check
SOLVER_MARGIN = 1e-7


@dataclass(frozen=True)
class OcpParams:
    N: int = 5
    c_s: float = 500.0
    c_e: float = 100.0
    R: tuple = ((250.0, 0.0), (0.0, 2.5))
    tunnel_radius: float = None
    # "envelope": radius rho - e(s) with e the certified error growth from s = 0
    # "constant": the fixed radius ``tunnel_radius`` (or rho - eps)
    tunnel_mode: str = "envelope"
    max_iter: int = 100
    max_time: float = 0.02

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        if R.shape != (2, 2) or not np.allclose(R, R.T) or np.linalg.eigvalsh(R).min() <= 0:
            raise ValueError("R must be symmetric positive definite")
        if self.N < 1:
            raise ValueError("horizon must be positive")
        if self.c_s < 0 or self.c_e < 0:
            raise ValueError("cost weights must be non-negative")
        if self.tunnel_radius is not None and not self.tunnel_radius > 0:
            raise ValueError("tunnel radius must be positive")
        if self.tunnel_mode not in ("envelope", "constant"):
            raise ValueError("tunnel_mode must be 'envelope' or 'constant'")

    @property
    def R_matrix(self):
        return np.asarray(self.R, dtype=float)


@dataclass(frozen=True, eq=False)
class OcpSolution:
    inputs: np.ndarray
    predicted_states: np.ndarray
    cost: float
    status: str
    constraint_residual: float
    iterations: int = 0
    tunnel: np.ndarray = None
    trivial_cost: float = None

    @property
    def s_N(self):
        return float(self.predicted_states[-1, -1])

    @property
    def positions(self):
        return self.predicted_states[:, :2]


class Tunnel:
    """Radius of the tracking-error ball as a function of the path coordinate."""

    def __init__(self, path, params, dp_max=None):
        self.mode = params.tunnel_mode
        rho = path.rho
        eps = path.eps
        if self.mode == "constant":
            self.rc = params.tunnel_radius if params.tunnel_radius is not None else rho - eps
            if not self.rc > 0:
                raise TunnelViolated("tunnel radius rho - eps is not positive")
            return
        self.rho = rho
        self.eps = eps
        speed = getattr(path, "max_speed", None)
        if speed is None:
            speed = float(np.max(np.hypot(*path.derivative(np.linspace(0.0, path.N, 201)).T)))
        dp = dp_max if dp_max is not None else speed
        self.L = 1.05 * (dp + speed)
        self.s1 = eps / self.L if self.L > 0 else 0.0
        if not rho - eps > 0:
            raise TunnelViolated("approximation error is not below the clearance")

    def __call__(self, s):
        """Radius and its derivative with respect to s."""
        s = np.asarray(s, dtype=float)
        if self.mode == "constant":
            return np.full_like(s, self.rc), np.zeros_like(s)
        if self.s1 <= 0.0:
            return np.full_like(s, self.rho - self.eps), np.zeros_like(s)
        inside = s < self.s1
        e = np.where(inside, self.L * s * (2.0 - s / self.s1), self.eps)
        de = np.where(inside, self.L * (2.0 - 2.0 * s / self.s1), 0.0)
        return self.rho - e, -de


class Problem:
    """Single-shooting objective and constraints with analytic gradients."""

    def __init__(self, model, x0, path, params, u_prev=None, dp_max=None):
        self.model = model
        self.x0 = np.asarray(x0, dtype=float)
        self.path = path
        self.params = params
        self.N = params.N
        self.dt = model.dt
        self.Rm = params.R_matrix
        self.u_prev = np.asarray(model.idle_input if u_prev is None else u_prev, dtype=float)
        self.tunnel = Tunnel(path, params, dp_max)
        lb = np.append(model.input_lb, 0.0)
        ub = np.append(model.input_ub, 1.0)
        self.lb = np.tile(lb, self.N)
        self.ub = np.tile(ub, self.N)
        self.scale = max(1.0, params.c_s * self.N)
        tun = self.tunnel
        if tun.mode == "constant":
            self._tun = np.array([0.0, tun.rc, 0.0, 0.0, 0.0])
        else:
            self._tun = np.array([1.0, tun.rho, tun.eps, tun.L, tun.s1])
        self._fast = model.name == "unicycle" and hasattr(path, "_pw")

    def rollout(self, w, h=1e-7):
        """States (N+1, n), path coordinates (N+1,) and forward-difference sensitivities."""
        N = self.N
        W = w.reshape(N, 3)

        def sim(wv):
            Wv = wv.reshape(N, 3)
            X = [self.x0]
            for k in range(N):
                X.append(self.model.step(X[-1], Wv[k, :-1], check=False))
            return np.array(X)

        X = sim(w)
        dX = np.zeros((N + 1,) + X.shape[1:] + (3 * N,))
        for k in range(3 * N):
            if k % 3 == 2:
                continue
            e = np.zeros_like(w)
            e[k] = h
            dX[..., k] = (sim(w + e) - X) / h
        S = np.concatenate([[0.0], np.cumsum(W[:, 2])])
        return X, S, dX

    def evaluate(self, w):
        """Cost, its gradient, constraints g (N,) with g <= 0 feasible, and their Jacobian.

        Returns ``(J, gJ, g, Jg, X, S, E, rad)`` where E are the tracking
        errors and rad the tunnel radii at the predicted path coordinates.
        """
        if self._fast:
            p = self.params
            return unicycle_tunnel(np.ascontiguousarray(w, dtype=float), self.x0, self.dt, self.path.r0,
                                   self.path._pw, self.path._dpw, float(self.path.N), self._tun, self.u_prev,
                                   self.Rm, float(p.c_s), float(p.c_e), MARGIN)
        N = self.N
        W = w.reshape(N, 3)
        X, S, dX = self.rollout(w)
        Sc = S[1:]
        Rh, dRh = self.path.eval_with_derivative(np.clip(Sc, 0.0, self.path.N))
        E = Rh - X[1:, :2]
        dS = np.tril(np.ones((N, N)))  # d s_{i+1} / d ds_j
        # d eps_i / d w
        dE = -dX[1:, :2, :].copy()
        for i in range(N):
            dE[i, :, 2::3] += dRh[i][:, None] * dS[i][None, :]
        rad, drad = self.tunnel(Sc)
        ref = max(float(np.max(rad)), 1e-6) ** 2
        g = (np.einsum("ij,ij->i", E, E) - rad ** 2 + MARGIN) / ref
        Jg = (2.0 * np.einsum("ij,ijk->ik", E, dE)) / ref
        Jg[:, 2::3] -= ((2.0 * rad * drad)[:, None] * dS) / ref
        # cost
        U = W[:, :2]
        dU = U - np.vstack([self.u_prev, U[:-1]])
        RdU = dU @ self.Rm
        eN = E[-1]
        J = -self.params.c_s * S[-1] + self.params.c_e * float(eN @ eN) + float(np.sum(RdU * dU))
        gJ = np.zeros(3 * N)
        gJ[2::3] -= self.params.c_s
        gJ += 2.0 * self.params.c_e * (eN @ dE[-1])
        G = 2.0 * RdU
        gu = G.copy()
        gu[:-1] -= G[1:]
        gJ[0::3] += gu[:, 0]
        gJ[1::3] += gu[:, 1]
        return J, gJ, g, Jg, X, S, E, rad

    def trivial(self):
        w = np.tile(np.append(self.model.idle_input, 0.0), self.N)
        return w


def _pack(problem, w, status, iters=0, trivial_cost=None):
    J, _, g, _, X, S, E, rad = problem.evaluate(w)
    res = float(max(0.0, np.max(np.hypot(*E.T) - rad)))
    box = float(max(0.0, np.max(problem.lb - w), np.max(w - problem.ub)))
    Z = np.column_stack([X, S])
    return OcpSolution(w.reshape(problem.N, 3).copy(), Z, float(J), status, max(res, box), iters, rad, trivial_cost)


def _check(problem, w):
    """(feasible, cost) of the input vector w."""
    J, _, _, _, _, _, E, rad = problem.evaluate(w)
    inside = np.all(np.einsum("ij,ij->i", E, E) <= rad ** 2 - MARGIN)
    box = np.all(w >= problem.lb - 1e-12) and np.all(w <= problem.ub + 1e-12)
    return bool(inside and box), J


def _feasible(problem, w):
    return _check(problem, w)[0]


def trivial_solution(x, r0, params, model=None, path=None, u_prev=None):
    """The idle, zero-progress sequence; raises TunnelViolated if it is infeasible.

    When no path is given a constant path at ``r0`` with the constant tunnel
    radius ``params.tunnel_radius`` is used.
    """
    from .models import unicycle

    model = unicycle() if model is None else model
    if path is None:
        if params.tunnel_radius is None:
            raise ValueError("a path or an explicit tunnel radius is required")
        path = _ConstantPath(r0, params.N, params.tunnel_radius)
        params = replace(params, tunnel_mode="constant")
    prob = Problem(model, x, path, params, u_prev)
    w = prob.trivial()
    if not _feasible(prob, w):
        d = float(np.hypot(*(np.asarray(path(0.0)) - model.output(np.asarray(x, float)))))
        raise TunnelViolated(f"initial tracking error {d:.6g} is not inside the tunnel")
    sol = _pack(prob, w, "trivial")
    return replace(sol, trivial_cost=sol.cost)


class _ConstantPath:
    def __init__(self, r0, N, radius):
        self.r0 = np.asarray(r0, dtype=float)
        self.N = float(N)
        self.eps = 0.0
        self.rho = float(radius)
        self.max_speed = 0.0
        self._pw = np.zeros((1, 2))
        self._dpw = np.zeros((0, 2))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return np.broadcast_to(self.r0, s.shape + (2,)).copy()

    def derivative(self, s):
        return np.zeros(np.asarray(s).shape + (2,))

    def eval_with_derivative(self, s):
        return self(s), self.derivative(s)


class _Stop(Exception):
    pass


def solve(x, path, params, warm_start=None, model=None, u_prev=None, dp_max=None, now=time.monotonic):
    """Locally optimal feasible input sequence; falls back to the trivial solution.

    The dense 3N-variable problem is solved by sequential quadratic
    programming (SLSQP) with analytic gradients, stopped after
    ``params.max_iter`` iterations or ``params.max_time`` seconds.  The
    returned sequence is always feasible and never costs more than the
    trivial one.
    """
    from .models import unicycle

    model = unicycle() if model is None else model
    t0 = now()
    # leave room for the feasibility screening after the solver returns
    budget = 0.85 * params.max_time
    prob = Problem(model, x, path, params, u_prev, dp_max)
    w_triv = prob.trivial()
    ok, J_triv = _check(prob, w_triv)
    if not ok:
        raise TunnelViolated("the trivial solution violates the tunnel constraint")
    if warm_start is not None:
        w0 = np.clip(np.asarray(warm_start.inputs, dtype=float).ravel(), prob.lb, prob.ub)
    else:
        w0 = w_triv.copy()
    cache = {}

    def ev(w):
        k = w.tobytes()
        if k not in cache:
            if now() - t0 > budget:
                raise _Stop()
            cache.clear()
            cache[k] = prob.evaluate(w)
        return cache[k]

    scale = prob.scale
    state = dict(iters=0)

    def callback(w):
        state["last"] = np.array(w, dtype=float)
        state["iters"] += 1
        if state["iters"] >= params.max_iter or now() - t0 > budget:
            raise _Stop()

    def run(start):
        state["last"] = start.copy()
        try:
            with warnings.catch_warnings():
                # SLSQP clips line-search points to the bounds itself and says so
                warnings.simplefilter("ignore", RuntimeWarning)
                r = minimize(lambda w: ev(w)[0] / scale, start, jac=lambda w: ev(w)[1] / scale, method="SLSQP",
                             bounds=list(zip(prob.lb, prob.ub)),
                             constraints=[dict(type="ineq", fun=lambda w: -ev(w)[2] - SOLVER_MARGIN,
                                               jac=lambda w: -ev(w)[3])],
                             callback=callback, options=dict(maxiter=params.max_iter, ftol=1e-9))
            return np.clip(r.x, prob.lb, prob.ub), "optimal" if r.success else "max_iter"
        except _Stop:
            return np.clip(state["last"], prob.lb, prob.ub), "max_iter"

    def screen(w):
        cands = [w] + [w_triv + t * (w - w_triv) for t in (0.999, 0.99, 0.9, 0.7, 0.5, 0.3, 0.1)]
        bw, bJ = None, np.inf
        for c in cands:
            ok, Jc = _check(prob, c)
            if ok and Jc <= J_triv + 1e-9 and Jc < bJ:
                bw, bJ = c, Jc
            if ok and c is w:
                break
        return bw, bJ

    w, status = run(w0)
    best_w, best_J = screen(w)
    ok, J0 = _check(prob, w0)
    if ok and J0 <= J_triv + 1e-9 and J0 < best_J:
        best_w, best_J = w0, J0
    if best_w is not None and model.name == "unicycle":
        turned = _turn_in_place(prob, best_w)
        if turned is not None:
            ok, Jt = _check(prob, turned)
            if ok and Jt <= J_triv + 1e-9:
                best_w, best_J = turned, Jt
    iters = state["iters"]
    if best_w is None:
        return _pack(prob, w_triv, "fallback_trivial", iters, J_triv)
    return _pack(prob, best_w, status, iters, J_triv)


def _turn_in_place(prob, w, v_rest=1e-6, min_err=0.2):
    """w with its headings turned toward the reference when w leaves the unicycle at rest.

    At zero speed the heading has no effect on position, so a robot stopped
    facing away from the path is a stationary point of the problem: waiting
    is optimal over the short horizon and it would wait forever.  Turning in
    place keeps every position and path coordinate of w, hence its tunnel
    feasibility.  Returns None when w moves or is already aligned.
    """
    W = w.reshape(prob.N, 3).copy()
    if np.any(np.abs(W[:, 0]) > v_rest):
        return None
    S = np.clip(np.cumsum(W[:, 2]), 0.0, prob.path.N)
    p = prob.x0[:2]
    ahead = np.asarray(prob.path(np.array([S[-1], min(prob.path.N, S[-1] + 0.5)])), dtype=float)
    d = ahead[0] - p if np.hypot(*(ahead[0] - p)) > 1e-3 else ahead[1] - p
    if np.hypot(*d) <= 1e-9:
        return None
    err = float(wrap_angle(np.arctan2(d[1], d[0]) - prob.x0[2]))
    if abs(err) < min_err:
        return None
    lo, hi = prob.lb[1], prob.ub[1]
    for i in range(prob.N):
        W[i, 1] = float(np.clip(err / prob.dt, lo, hi))
        err -= W[i, 1] * prob.dt
    W[:, 0] = 0.0
    return W.ravel()


def _default_guess(prob):
    """Idle inputs with path progress matched to zero motion (always feasible)."""
    return prob.trivial()


def extract_control(sol):
    """First model input of the sequence."""
    return np.asarray(sol.inputs[0, :-1], dtype=float).copy()


def shift_warm_start(prev, path_shift=0.0, N=None):
    """Initial guess for the next step: inputs shifted by one stage, s reduced by the shift."""
    U = np.asarray(prev.inputs, dtype=float)
    U2 = np.vstack([U[1:], U[-1:]])
    Z = np.asarray(prev.predicted_states, dtype=float).copy()
    Z2 = np.vstack([Z[1:], Z[-1:]])
    top = float(len(U)) if N is None else float(N)
    Z2[:, -1] = np.clip(Z2[:, -1] - path_shift, 0.0, top)
    return OcpSolution(U2, Z2, np.nan, "guess", np.nan)
