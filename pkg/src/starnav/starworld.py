"""Workspace modification: clearance selection, reference projections and star-world construction."""
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import NoValidCenter, RobotInCollision
from .geometry import _vec
from .geometry.hull import cluster_indices, convex_hull
from .geometry.primitives import AtomBatch, inflate
from .geometry.star import RadialIndex, StarObstacle, atom_center, from_atom, star_distance, starshaped_hull

_GOLDEN = np.pi * (3.0 - np.sqrt(5.0))


@dataclass(frozen=True)
class WorkspaceParams:
    rho_bar: float = 0.3
    gamma: float = 0.5
    max_time: float = 0.05

    def __post_init__(self):
        if not self.rho_bar > 0:
            raise ValueError("rho_bar must be positive")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not self.max_time > 0:
            raise ValueError("max_time must be positive")


class AtomSet:
    """Flattened convex atoms of a list of regions for fast clearance queries."""

    def __init__(self, regions):
        self.regions = list(regions)
        self.atoms = [a for r in self.regions for a in r.atoms()]
        self.batch = AtomBatch(self.atoms)

    def __len__(self):
        return len(self.atoms)

    def clearance(self, q):
        return self.batch.clearance(q)

    def push_candidates(self, p, level):
        """Points reached from ``p`` by moving along each atom's distance gradient to ``level``."""
        out = []
        for a in self.atoms:
            d = float(a.distance(p[None])[0])
            if d >= level:
                continue
            g = _atom_gradient(a, p)
            if g is None:
                continue
            for q in g(level):
                out.append(q)
        return out


def _atom_gradient(atom, p):
    """Exact moves of ``p`` to the level set ``distance == level`` of one atom."""
    V = atom.vertices
    r = atom.radius
    A, B = _vec.edges(V)
    C = _vec.closest_on_segments(p[None], A, B)[0]
    dist = np.hypot(*(p - C).T)
    k = int(np.argmin(dist))
    inside = len(V) >= 3 and _vec.point_in_polygon(p[None], V)[0]
    if not inside and dist[k] > 1e-12:
        u = (p - C[k]) / dist[k]
        return lambda level: [C[k] + (level + r) * u]
    if len(V) == 1:
        return lambda level: [V[0] + (level + r) * np.array([1.0, 0.0])]
    if len(V) == 2:
        d = V[1] - V[0]
        n = np.array([d[1], -d[0]]) / np.hypot(*d)
        return lambda level: [p + (level + r) * n, p - (level + r) * n]
    # inside the base polygon: leave through the nearest edge line
    N = _vec.outward_normals(V)
    depth = np.einsum("ij,ij->i", A - p, N)
    return lambda level: [p + (depth[i] + r + level) * N[i] for i in np.argsort(depth)[:2]]


def _spiral(p, rho, n=256):
    k = np.arange(n)
    rad = rho * np.sqrt((k + 0.5) / n)
    ang = k * _GOLDEN
    return p + rad[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=1)


def _ray_first(p, angles, f, level, tmax, nt=32, iters=40):
    """Smallest ``t`` in [0, tmax] per ray with ``f(p + t*u) >= level`` (inf if none)."""
    U = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    T = np.linspace(0.0, tmax, nt)
    Q = p + T[:, None, None] * U[None]
    ok = (f(Q.reshape(-1, 2)) >= level).reshape(nt, len(U))
    hit = ok.any(axis=0)
    first = np.argmax(ok, axis=0)
    t = np.full(len(U), np.inf)
    idx = np.flatnonzero(hit)
    if len(idx) == 0:
        return t
    hi = T[first[idx]]
    lo = np.where(first[idx] > 0, T[np.maximum(first[idx] - 1, 0)], 0.0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        good = f(p + mid[:, None] * U[idx]) >= level
        hi = np.where(good, mid, hi)
        lo = np.where(good, lo, mid)
    t[idx] = np.where(first[idx] == 0, 0.0, hi)
    return t


def _polar(p, q):
    d = q - p
    return float(np.mod(np.arctan2(d[1], d[0]), 2.0 * np.pi)) if np.hypot(*d) > 0 else 0.0


def _best(p, cands, f, level, tmax):
    """Closest valid candidate, ties broken by polar angle in [0, 2*pi)."""
    best = None
    for q in cands:
        q = np.asarray(q, dtype=float)
        dq = float(np.hypot(*(q - p)))
        if dq > tmax + 1e-12 or f(q[None])[0] < level - 1e-12:
            continue
        key = (round(dq, 10), _polar(p, q))
        if best is None or key < best[0]:
            best = (key, q)
    return None if best is None else best[1]


def nearest_admissible(p, f, level, tmax, analytic=(), rays=96):
    """Closest point to ``p`` within ``tmax`` where ``f >= level``; None if none found.

    Combines exact per-atom projections with a ray search refined around the
    best direction.
    """
    p = np.asarray(p, dtype=float)
    if f(p[None])[0] >= level:
        return p.copy()
    cands = list(analytic)
    ang = 2.0 * np.pi * np.arange(rays) / rays
    t = _ray_first(p, ang, f, level, tmax)
    if np.isfinite(t).any():
        width = 2.0 * np.pi / rays
        for j in np.argsort(t, kind="stable")[:3]:
            if not np.isfinite(t[j]):
                break
            fine = ang[j] + np.linspace(-width, width, 33)
            tf = _ray_first(p, fine, f, level, min(tmax, 1.5 * t[j] + 1e-9), nt=16)
            i = int(np.argmin(tf))
            if np.isfinite(tf[i]):
                cands.append(p + tf[i] * np.array([np.cos(fine[i]), np.sin(fine[i])]))
            cands.append(p + t[j] * np.array([np.cos(ang[j]), np.sin(ang[j])]))
    return _best(p, cands, f, level, tmax)


@dataclass(frozen=True, eq=False)
class ClearanceBall:
    """The set P0 = B(p, rho) minus the rho-inflated obstacles."""

    p: np.ndarray
    rho: float
    atoms: AtomSet
    witness: np.ndarray = None

    def contains(self, q):
        P, single = _vec.as_points(q)
        ok = (np.hypot(*(P - self.p).T) <= self.rho + 1e-12) & (self.atoms.clearance(P) >= self.rho - 1e-12)
        return bool(ok[0]) if single else ok

    def is_empty(self):
        return self.witness is None


def _max_clearance(p, atoms, rho, starts):
    """Local maxima of the clearance over B(p, rho) from several starts: max t s.t. d_j(q) >= t."""
    # atoms farther than 2 rho from p cannot be the closest anywhere in the ball
    near = [a for a in atoms.atoms if a.distance(p[None])[0] < 2.0 * rho]
    if not near:
        return []
    batch = AtomBatch(near)
    cons = [dict(type="ineq", fun=lambda z: batch.distances(z[None, :2])[0] - z[2]),
            dict(type="ineq", fun=lambda z: rho * rho - np.sum((z[:2] - p) ** 2))]
    out = []
    for q in starts:
        z0 = np.append(q, batch.clearance(q[None])[0])
        r = minimize(lambda z: -z[2], z0, jac=lambda z: np.array([0.0, 0.0, -1.0]), method="SLSQP",
                     constraints=cons, options=dict(maxiter=50, ftol=1e-12))
        q = r.x[:2]
        if np.hypot(*(q - p)) > rho:
            q = p + (q - p) * (rho / np.hypot(*(q - p)))
        out.append(q)
    return out


def _p0_witness(p, atoms, rho):
    f = atoms.clearance
    if f(p[None])[0] >= rho:
        return p.copy()
    S = _spiral(p, rho)
    fs = f(S)
    ok = fs >= rho
    if ok.any():
        return S[np.argmax(ok)]
    cands = [q for q in atoms.push_candidates(p, rho) if np.hypot(*(q - p)) <= rho + 1e-12]
    q = _best(p, cands, f, rho, rho)
    if q is not None:
        return q
    q = nearest_admissible(p, f, rho, rho)
    if q is not None:
        return q
    # thin admissible pockets can fall between all samples: climb the clearance
    starts = [p] + [S[i] for i in np.argsort(-fs, kind="stable")[:4]]
    return _best(p, _max_clearance(p, atoms, rho, starts), f, rho, rho)


def select_clearance(p, obstacles, params):
    """Largest clearance rho_bar*gamma**k for which P0 is nonempty, and P0 itself."""
    p = np.asarray(p, dtype=float)
    atoms = obstacles if isinstance(obstacles, AtomSet) else AtomSet(obstacles)
    c0 = atoms.clearance(p[None])[0]
    if not c0 > 0.0:
        raise RobotInCollision(f"robot position {p.tolist()} is not in the free space")
    rho = params.rho_bar
    while True:
        w = _p0_witness(p, atoms, rho)
        if w is not None:
            return rho, ClearanceBall(p, rho, atoms, w)
        rho *= params.gamma


def _polish(p, q, atoms, rho):
    """Local refinement of an admissible ``q`` toward ``p``: min |q - p|^2 s.t. d_j(q) >= rho."""
    near = [a for a in atoms.atoms if a.distance(p[None])[0] < 2.0 * rho]
    if not near:
        return q
    batch = AtomBatch(near)
    r = minimize(lambda z: np.sum((z - p) ** 2), q, jac=lambda z: 2.0 * (z - p), method="SLSQP",
                 constraints=[dict(type="ineq", fun=lambda z: batch.distances(z[None])[0] - rho)],
                 options=dict(maxiter=50, ftol=1e-14))
    z = r.x
    # the ray search resolves the boundary only to its sampling; keep the refinement if it is better
    if np.hypot(*(z - p)) < np.hypot(*(q - p)) - 1e-12 and atoms.clearance(z[None])[0] >= rho:
        return z
    return q


def project_initial(p, P0):
    """Closest point of P0 to ``p``."""
    p = np.asarray(p, dtype=float)
    f = P0.atoms.clearance
    cands = [q for q in P0.atoms.push_candidates(p, P0.rho)]
    if P0.witness is not None:
        cands.append(P0.witness)
    q = nearest_admissible(p, f, P0.rho, P0.rho, cands)
    if q is None:
        return P0.witness.copy()
    if np.array_equal(q, p):
        return q
    return _polish(p, q, P0.atoms, P0.rho)


def project_goal(pg, inflated):
    """Closest point to ``pg`` outside the union of ``inflated`` regions."""
    pg = np.asarray(pg, dtype=float)
    atoms = inflated if isinstance(inflated, AtomSet) else AtomSet(inflated)
    f = atoms.clearance
    if f(pg[None])[0] >= 0.0:
        return pg.copy()
    cands = atoms.push_candidates(pg, 0.0)
    b = np.array([a.bounds() for a in atoms.atoms])
    span = float(np.hypot(*(b[:, 2:].max(axis=0) - b[:, :2].min(axis=0))))
    # the answer is no farther than the best exact candidate that is admissible
    valid = [q for q in cands if f(np.asarray(q)[None])[0] >= -1e-12]
    tmax = min(float(np.hypot(*(np.asarray(q) - pg))) for q in valid) if valid else None
    if tmax is not None:
        q = nearest_admissible(pg, f, 0.0, tmax + 1e-9, cands, rays=120)
        if q is not None:
            return q
    reach = max((float(np.hypot(*(np.asarray(q) - pg))) for q in cands), default=1e-2)
    while reach <= 2.0 * span + 1.0:
        q = nearest_admissible(pg, f, 0.0, reach, cands, rays=120)
        if q is not None:
            return q
        reach *= 2.0
    raise RobotInCollision("no admissible goal projection found")


@dataclass(eq=False)
class StarWorld:
    obstacles: list
    rho: float
    r0: np.ndarray
    rg: np.ndarray
    disjoint: bool
    fallback_used: bool
    inflated: list = field(default_factory=list)
    p: np.ndarray = None
    pg: np.ndarray = None
    elapsed: float = 0.0
    construct_elapsed: float = 0.0
    _index: RadialIndex = field(default=None, repr=False)

    @property
    def index(self):
        if self._index is None:
            self._index = RadialIndex(self.obstacles)
        return self._index

    def gammas(self, q):
        if not self.obstacles:
            P, _ = _vec.as_points(q)
            return np.full((len(P), 0), np.inf)
        return self.index.gammas(q)

    def contains(self, q, closed=False):
        """True where ``q`` lies in some obstacle of O* (open sets by default)."""
        g = self.gammas(q)
        if g.shape[1] == 0:
            return np.zeros(len(g), dtype=bool)
        m = g.min(axis=1)
        return m <= 1.0 + 1e-12 if closed else m < 1.0 - 1e-12

    def free(self, q):
        return ~self.contains(q)


class _Budget(Exception):
    pass


def _check(expired):
    if expired():
        raise _Budget()


def _convex_star(atom, ids, segment):
    try:
        return from_atom(atom, ids, "", segment), True
    except NoValidCenter:
        return StarObstacle(atom_center(atom), [atom], None, ids), False


def _hull_atom(atoms):
    H = convex_hull(list(atoms))
    return H.atoms()[0]


def _outside(atom, q):
    return float(atom.distance(np.asarray(q)[None])[0]) > 1e-9


def build_star_world(obstacles, p, pg, params, now=time.monotonic):
    """Disjoint star world inside the rho-clearance free space (or a flagged fallback)."""
    t0 = now()
    p = np.asarray(p, dtype=float)
    pg = np.asarray(pg, dtype=float)
    atoms0 = AtomSet(obstacles)
    rho, P0 = select_clearance(p, atoms0, params)
    r0 = project_initial(p, P0)
    O_rho = [inflate(o, rho) for o in obstacles]
    A_rho = AtomSet(O_rho)
    rg = project_goal(pg, A_rho)
    segment = (r0, rg) if np.hypot(*(rg - r0)) > 1e-12 else None
    ids = [getattr(o, "id", str(i)) for i, o in enumerate(O_rho)]
    # the budget covers the star construction stages; projections always complete
    tc = now()
    deadline = tc + params.max_time
    world = dict(rho=rho, r0=r0, rg=rg, inflated=O_rho, p=p, pg=pg)
    try:
        stars, disjoint = _construct(O_rho, ids, r0, rg, segment, lambda: now() > deadline)
        fallback = False
    except _Budget:
        stars = [StarObstacle(atom_center(a), [a], None, (ids[i],)) for i, o in enumerate(O_rho) for a in o.atoms()]
        disjoint, fallback = False, True
    return StarWorld(stars, rho, r0, rg, disjoint, fallback, elapsed=now() - t0,
                     construct_elapsed=now() - tc, **{k: world[k] for k in ("inflated", "p", "pg")})


def _construct(O_rho, ids, r0, rg, segment, expired):
    clusters = [list(g) for g in cluster_indices(O_rho)]
    cl_atoms = [[a for i in g for a in O_rho[i].atoms()] for g in clusters]
    cl_ids = [[ids[i] for i in g] for g in clusters]
    n = len(clusters)
    disjoint = True
    # a cluster whose hull excludes r0, rg and clears every other cluster's hull
    # is the end result of star construction followed by convexification
    hulls = [_hull_atom(a) for a in cl_atoms]
    hull_stars = [StarObstacle(atom_center(h), [h]) for h in hulls]
    final = [None] * n
    for j in range(n):
        if not (_outside(hulls[j], r0) and _outside(hulls[j], rg)):
            continue
        if all(star_distance(hull_stars[j], hull_stars[k]) > 1e-9 for k in range(n) if k != j):
            final[j], ok = _convex_star(hulls[j], cl_ids[j], segment)
            disjoint &= ok
    _check(expired)
    # star hulls of the remaining clusters, merging clusters whose hulls touch
    groups = [[j] for j in range(n) if final[j] is None]
    stars = {}
    while True:
        for g in groups:
            key = tuple(g)
            if key in stars:
                continue
            atoms = [a for j in g for a in cl_atoms[j]]
            gids = [i for j in g for i in cl_ids[j]]
            others = [a for k in range(n) if k not in g for a in cl_atoms[k]]
            stars[key] = _star_for(atoms, gids, r0, rg, segment, others, expired)
            _check(expired)
        merged = False
        for x in range(len(groups)):
            for y in range(x + 1, len(groups)):
                sx, sy = stars[tuple(groups[x])], stars[tuple(groups[y])]
                if isinstance(sx, list) or isinstance(sy, list):
                    continue
                if star_distance(sx, sy) <= 1e-9:
                    groups[x] = sorted(groups[x] + groups[y])
                    del groups[y]
                    merged = True
                    break
            if merged:
                break
        if not merged:
            break
    # place results in cluster order (group keyed by first member)
    out = []
    order = {g[0]: tuple(g) for g in groups}
    for j in range(n):
        if final[j] is not None:
            out.append([final[j]])
        elif j in order:
            s = stars[order[j]]
            if isinstance(s, list):
                disjoint = False
                out.append(s)
            else:
                if not s.center_ok:
                    disjoint = False
                out.append([s])
    flat = [s for grp in out for s in grp]
    # convexification in input order against the current set
    for j, s in enumerate(flat):
        if s.is_convex():
            continue
        h = _hull_atom(s.atoms())
        if not (_outside(h, r0) and _outside(h, rg)):
            continue
        cand, ok = _convex_star(h, s.member_ids, segment)
        if all(star_distance(cand, flat[k]) > 1e-9 for k in range(len(flat)) if k != j):
            flat[j] = cand
            if not ok:
                disjoint = False
        _check(expired)
    if disjoint:
        for x in range(len(flat)):
            for y in range(x + 1, len(flat)):
                if star_distance(flat[x], flat[y]) <= 0.0:
                    disjoint = False
    return flat, disjoint


def _star_for(atoms, ids, r0, rg, segment, others, expired=None):
    """Star hull of a cluster; a list of convex pieces if no valid center exists."""
    if len(atoms) == 1:
        s, ok = _convex_star(atoms[0], ids, segment)
        s.center_ok = ok
        return s
    try:
        s = starshaped_hull(atoms, [r0, rg], avoid=others, segment=segment, ids=ids, expired=expired)
        s.center_ok = True
        return s
    except NoValidCenter:
        pieces = []
        for a in atoms:
            s, _ = _convex_star(a, ids, segment)
            pieces.append(s)
        return pieces
