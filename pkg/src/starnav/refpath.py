"""Receding-horizon reference paths and their polynomial approximation."""
import time
from dataclasses import dataclass, replace

import numpy as np

from . import dsfield
from .errors import ApproxTooCoarse, InteriorPoint, StartInObstacle
from .geometry._vec import TOL, pairwise_segment_distance

DS_BASE = 0.05
TOL_GOAL = 1e-3
MIN_DS = 1e-7


@dataclass(frozen=True, eq=False)
class PathSamples:
    """Samples r(s_i) of a path on s in [0, N], with an optional constant tail.

    ``tail_from`` is the path coordinate where motion stopped (goal reached,
    budget or guard exhaustion); samples beyond it repeat the last point.
    """

    s: np.ndarray
    points: np.ndarray
    dp_max: float
    N: float
    rho: float = np.inf
    truncated_at: float = None
    goal_reached: bool = False
    tail_from: float = None
    rg: np.ndarray = None

    def __len__(self):
        return len(self.s)

    @property
    def end(self):
        """Coordinate where the moving part ends."""
        return self.s[-1] if self.tail_from is None else self.tail_from

    def at(self, s):
        """Piecewise-linear evaluation, constant after the last sample."""
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.s[-1])
        x = np.interp(s, self.s, self.points[:, 0])
        y = np.interp(s, self.s, self.points[:, 1])
        return np.stack([x, y], axis=-1)


class _Batch:
    """Exact clearance of path segments against the rho-inflated atoms of a star world."""

    def __init__(self, world):
        from .geometry.primitives import AtomBatch

        self.atoms = AtomBatch([a for s in world.obstacles for a in s.atoms()])

    def point_clearance(self, P):
        return self.atoms.clearance(P)

    def polyline_clearance(self, P):
        """Smallest clearance over the polyline P (exact when non-negative)."""
        B = self.atoms
        if not len(B):
            return np.inf
        d = float(B.distances(P).min())
        if len(P) > 1:
            D = pairwise_segment_distance(P[:-1], P[1:], B.A, B.B)
            D = np.minimum.reduceat(D, B.starts, axis=1) - B.radius[None]
            d = min(d, float(D.min()))
        return d

    def segment_clearance(self, a, b):
        B = self.atoms
        if not len(B):
            return np.inf
        ab = b - a
        den = max(float(ab @ ab), 1e-300)
        # endpoint-to-edge distances
        d = B.distances(np.stack([a, b])).min(axis=0)
        # edge endpoints to the query segment, per atom
        best = d + B.radius
        E = np.concatenate([B.A, B.B])
        t = np.clip((E - a) @ ab / den, 0.0, 1.0)
        de = np.hypot(*(E - a - t[:, None] * ab).T)
        de = np.minimum(de[: len(B.A)], de[len(B.A):])
        per = np.minimum.reduceat(de, B.starts)
        best = np.minimum(best, per)
        # proper crossings of edges with the segment
        C, D = B.A, B.B
        cd = D - C
        d1 = ab[0] * (C[:, 1] - a[1]) - ab[1] * (C[:, 0] - a[0])
        d2 = ab[0] * (D[:, 1] - a[1]) - ab[1] * (D[:, 0] - a[0])
        d3 = cd[:, 0] * (a[1] - C[:, 1]) - cd[:, 1] * (a[0] - C[:, 0])
        d4 = cd[:, 0] * (b[1] - C[:, 1]) - cd[:, 1] * (b[0] - C[:, 0])
        cross_ = ((d1 > 0) & (d2 < 0) | (d1 < 0) & (d2 > 0)) & ((d3 > 0) & (d4 < 0) | (d3 < 0) & (d4 > 0))
        if cross_.any():
            hit = np.maximum.reduceat(cross_.astype(float), B.starts) > 0
            best = np.where(hit, 0.0, best)
        return float(np.min(best - B.radius))


def _guard(world):
    return _Batch(world)


def integrate_path(r0, rg, star_world, N, dp_max, max_time=0.02, ds_base=DS_BASE, tol_goal=TOL_GOAL,
                   s0=0.0, now=time.monotonic, _prefix=None):
    """Guarded explicit Euler integration of dr/ds = dp_max * unit field on [s0, N].

    A step is accepted only when its end point and midpoint are outside every
    star obstacle and the whole segment keeps non-negative clearance from the
    rho-inflated obstacles; otherwise the step is halved.  The path freezes
    (constant tail) when the goal is reached, the budget runs out, or the
    step falls below ``MIN_DS``.
    """
    t0 = now()
    r = np.asarray(r0, dtype=float).copy()
    rg = np.asarray(rg, dtype=float)
    world = star_world
    guard = _guard(world)
    if world.obstacles and np.min(world.gammas(r[None])) < 1.0 - 1e-9:
        raise StartInObstacle("path start lies inside the star world obstacles")
    S = [s0] if _prefix is None else list(_prefix[0])
    P = [r.copy()] if _prefix is None else [q for q in _prefix[1]]
    s = s0
    eta = dsfield.evaluate(r[None], rg, world)[0][0]
    # clearance of r from the inflated atoms: steps shorter than it need no segment test
    clr = guard.point_clearance(r[None])[0] if len(guard.atoms) else np.inf
    goal, trunc, tail = False, None, None
    while s < N - 1e-12:
        dist_goal = float(np.hypot(*(rg - r)))
        if dist_goal < tol_goal:
            goal, tail = True, s
            break
        if now() - t0 > max_time:
            trunc, tail = s, s
            break
        e = dsfield.normalize(eta)
        if not np.any(e):
            tail = s
            break
        ds = min(ds_base, N - s)
        snap = dist_goal <= dp_max * ds
        while True:
            if snap and dist_goal <= dp_max * ds:
                ds_try = dist_goal / dp_max
                q = rg.copy()
            else:
                ds_try = ds
                q = r + dp_max * ds * e
            mid = 0.5 * (r + q)
            ok = True
            if world.obstacles:
                data = world.index.evaluate(np.stack([mid, q]))
                G = data[0] / data[1]
                ok = G.min() >= 1.0
            if ok and (dp_max * ds_try < clr - TOL or guard.segment_clearance(r, q) >= -TOL):
                break
            ds *= 0.5
            snap = False
            if ds < MIN_DS:
                ok = False
                break
        if ds < MIN_DS:
            tail = s
            break
        s = s + ds_try
        r = q
        if len(guard.atoms):
            clr = guard.point_clearance(r[None])[0]
        S.append(s)
        P.append(r.copy())
        if np.hypot(*(rg - r)) < tol_goal:
            goal, tail = True, s
            break
        if world.obstacles:
            sub = tuple(x[1:2] for x in data)
            eta = dsfield.evaluate(r[None], rg, world, sub)[0][0]
        else:
            eta = rg - r
    if S[-1] < N:
        if tail is None:
            tail = S[-1]
        S.append(float(N))
        P.append(P[-1].copy())
    return PathSamples(np.array(S, dtype=float), np.array(P), float(dp_max), float(N), world.rho,
                       trunc, goal, tail, rg.copy())


def path_in_world(path, star_world, upto=None):
    """True if every sample and segment of ``path`` lies in the star world's free space."""
    P = path.points if upto is None else path.points[: upto + 1]
    if star_world.obstacles:
        Q = np.concatenate([P, 0.5 * (P[:-1] + P[1:])])
        if np.min(star_world.gammas(Q)) < 1.0 - 1e-9:
            return False
    return _guard(star_world).polyline_clearance(P) >= -TOL


def maybe_reuse(previous, star_world, p, max_time=0.02, now=time.monotonic):
    """Shift the previous path to start near ``p`` and extend it to N, or None.

    ``max_time`` bounds the whole call, the collision check included.
    """
    if previous is None:
        return None
    t0 = now()
    p = np.asarray(p, dtype=float)
    if previous.rg is not None and np.hypot(*(previous.rg - star_world.rg)) > 1e-9:
        return None
    end = int(np.searchsorted(previous.s, previous.end, side="right"))
    pts = previous.points[:end]
    s = previous.s[:end]
    d = np.hypot(*(pts - p).T)
    i = int(np.argmin(d))
    rho = star_world.rho
    # a robot that made no progress along the old path gets a fresh one; otherwise
    # a standstill would reproduce the same path and the same solution forever
    if not d[i] < rho or i == 0:
        return None
    if not path_in_world(replace(previous, points=pts, s=s), star_world):
        return None
    s_new = s[i:] - s[i]
    P_new = pts[i:]
    N = previous.N
    if s_new[-1] >= N - 1e-12:
        keep = int(np.searchsorted(s_new, N, side="right"))
        s_new, P_new = s_new[:keep], P_new[:keep]
        tail = None if s_new[-1] >= N - 1e-12 else s_new[-1]
        if tail is not None:
            s_new = np.append(s_new, N)
            P_new = np.vstack([P_new, P_new[-1:]])
        return PathSamples(s_new, P_new, previous.dp_max, N, rho, None, False, tail, star_world.rg.copy())
    if previous.goal_reached:
        s_out = np.append(s_new, N) if s_new[-1] < N else s_new
        P_out = np.vstack([P_new, P_new[-1:]]) if s_new[-1] < N else P_new
        return PathSamples(s_out, P_out, previous.dp_max, N, rho, None, True, float(s_new[-1]), star_world.rg.copy())
    try:
        left = max(0.0, max_time - (now() - t0))
        path = integrate_path(P_new[-1], star_world.rg, star_world, N, previous.dp_max, left,
                              s0=float(s_new[-1]), now=now, _prefix=(list(s_new), list(P_new)))
    except (StartInObstacle, InteriorPoint):
        return None
    # a tail from a changed field can turn back on the kept prefix
    return None if _folds(path.points) else path


def _folds(P):
    """True when consecutive moving segments of the polyline P point against each other."""
    D = np.diff(P, axis=0)
    D = D[np.hypot(*D.T) > 1e-9]
    return bool(len(D) > 1 and np.any(np.einsum("ij,ij->i", D[1:], D[:-1]) < 0.0))


class PolyPath:
    """Polynomial approximation r_hat(s) = r0 + sum_k a_k (T_k(x) - T_k(-1)), x = 2s/N - 1.

    The shifted Chebyshev basis vanishes at s = 0, so r_hat(0) equals r0
    exactly.
    """

    def __init__(self, r0, coef, N, eps, rho=np.inf):
        self.r0 = np.asarray(r0, dtype=float)
        self.coef = np.asarray(coef, dtype=float)
        self.N = float(N)
        self.eps = float(eps)
        self.rho = float(rho)
        self.degree = len(self.coef)
        # power-series form in x of the value and derivative, for fast batch evaluation
        from numpy.polynomial import chebyshev as C

        full = np.vstack([np.zeros((1, 2)), self.coef])
        full[0] = -np.sum(self.coef * np.array([(-1.0) ** k for k in range(1, self.degree + 1)])[:, None], axis=0)
        n = self.degree + 1
        pw = np.zeros((n, 2))
        for d in range(2):
            c = C.cheb2poly(full[:, d])
            pw[: len(c), d] = c
        self._pw = pw[::-1].copy()
        self._dpw = (self._pw[:-1] * np.arange(n - 1, 0, -1)[:, None]).copy()

    def __repr__(self):
        return f"PolyPath(degree={self.degree}, N={self.N:g}, eps={self.eps:.3g})"

    def _basis(self, s, deriv=False):
        x = 2.0 * np.asarray(s, dtype=float) / self.N - 1.0
        return _cheb_basis(x, self.degree, deriv)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        B = self._basis(s)
        return self.r0 + B @ self.coef

    def derivative(self, s):
        B = self._basis(s, deriv=True)
        return (2.0 / self.N) * (B @ self.coef)

    def eval_with_derivative(self, s):
        """Value and derivative through the power form (agrees to rounding)."""
        x = 2.0 * np.asarray(s, dtype=float) / self.N - 1.0
        V = np.vander(np.atleast_1d(x), len(self._pw))
        D = V[:, 1:]
        return self.r0 + V @ self._pw, (2.0 / self.N) * (D @ self._dpw)


def _cheb_basis_both(x, d):
    x = np.asarray(x, dtype=float)
    T = [np.ones_like(x), x]
    dT = [np.zeros_like(x), np.ones_like(x)]
    for k in range(1, d):
        T.append(2.0 * x * T[k] - T[k - 1])
        dT.append(2.0 * T[k] + 2.0 * x * dT[k] - dT[k - 1])
    sign = np.array([(-1.0) ** k for k in range(1, d + 1)])
    B = np.stack(T[1:d + 1], axis=-1) - sign
    return B, np.stack(dT[1:d + 1], axis=-1)


def _cheb_basis(x, d, deriv=False):
    B, dB = _cheb_basis_both(x, d)
    return dB if deriv else B


def fit_poly(path, degree=10, rho=None, fit_density=10, check_factor=10):
    """Least-squares polynomial through r(0) with a certified uniform error bound.

    The bound adds to the largest residual on a validation grid (``check_factor``
    times denser than the fit grid, plus the original samples) the worst
    growth possible between grid points given the speeds of both curves.
    """
    if degree < 1:
        raise ValueError("degree must be at least 1")
    rho = path.rho if rho is None else rho
    N = path.N
    r0 = path.points[0]
    m = max(degree + 1, int(np.ceil(fit_density * N)) + 1)
    s_fit = np.linspace(0.0, N, m)
    Y = path.at(s_fit) - r0
    B = _cheb_basis(2.0 * s_fit / N - 1.0, degree)
    coef, *_ = np.linalg.lstsq(B, Y, rcond=None)
    poly = PolyPath(r0, coef, N, 0.0, rho)
    nv = check_factor * (m - 1) + 1
    s_chk = np.union1d(np.linspace(0.0, N, nv), path.s)
    R, dR = poly.eval_with_derivative(s_chk)
    E = R - path.at(s_chk)
    res = np.hypot(*E.T)
    # the polyline is affine on every validation interval, so the error can
    # only drift by the mismatch of the two slopes across each interval
    h = np.diff(s_chk)
    slope = np.diff(path.at(s_chk), axis=0) / np.where(h > 0, h, 1.0)[:, None]
    mis = np.maximum(np.hypot(*(dR[:-1] - slope).T), np.hypot(*(dR[1:] - slope).T))
    drift = 0.5 * (res[:-1] + res[1:]) + 0.5 * h * 1.1 * mis
    eps = float(max(res.max(), drift.max() if len(drift) else 0.0))
    poly.eps = eps
    poly.max_residual = float(res.max())
    poly.max_speed = float(np.max(np.hypot(*dR.T)))
    if not eps < rho:
        raise ApproxTooCoarse(eps, rho)
    return poly
