"""Strictly starshaped obstacles and their radial boundary functions.

A :class:`StarObstacle` is the radial closure, about its center ``c``, of a
union of convex atoms together with an optional filler polygon that is
starshaped with respect to a small disc around ``c``.  Its boundary radius in
direction ``u`` is the farthest exit of the ray ``c + t*u`` over all pieces,
which makes the set strictly starshaped by construction.
"""
import numpy as np
import shapely
from shapely.ops import polylabel

from .._kernels import radial
from ..errors import NoValidCenter
from . import _vec
from ._vec import TOL, as_points
from .hull import kernel
from .primitives import atom_distance

QUAD_SEGS = 8
# inscribed buffer polygons lose at most r * (1 - cos(pi / (4 * QUAD_SEGS))) per arc
_BULGE = 1.0 - np.cos(np.pi / (4 * QUAD_SEGS))


class RadialIndex:
    """Batched ray-exit evaluation for a list of star obstacles.

    All boundary pieces (vertex discs and straight edges) of all obstacles are
    packed into flat arrays so one call evaluates every obstacle at every
    query point.
    """

    def __init__(self, stars):
        self.stars = list(stars)
        m = len(self.stars)
        self.centers = np.array([s.center for s in self.stars]).reshape(m, 2)
        cv, cr, co = [], [], []
        sa, sb, sn, so = [], [], [], []
        for j, s in enumerate(self.stars):
            for a in s.atoms():
                if a.radius > 0.0:
                    cv.append(a.vertices)
                    cr.append(np.full(len(a.vertices), a.radius))
                    co.append(np.full(len(a.vertices), j))
                if len(a._A):
                    sa.append(a._A + a.radius * a._n)
                    sb.append(a._B + a.radius * a._n)
                    sn.append(a._n)
                    so.append(np.full(len(a._A), j))
            if s.filler is not None:
                F = s.filler
                sa.append(F)
                sb.append(np.roll(F, -1, axis=0))
                sn.append(_vec.outward_normals(F))
                so.append(np.full(len(F), j))
        cat = lambda L, shape: np.concatenate(L) if L else np.zeros(shape)
        self.cv, self.cr = cat(cv, (0, 2)), cat(cr, (0,))
        self.co = cat(co, (0,)).astype(int)
        self.sa, self.sb, self.sn = cat(sa, (0, 2)), cat(sb, (0, 2)), cat(sn, (0, 2))
        self.so = cat(so, (0,)).astype(int)
        self.cw = self.cv - self.centers[self.co] if m else self.cv
        self.cc = np.einsum("ij,ij->i", self.cw, self.cw) - self.cr ** 2
        self.sw = self.sa - self.centers[self.so] if m else self.sa
        self.sd = self.sb - self.sa
        self.swd = _vec.cross(self.sw, self.sd)

    def __len__(self):
        return len(self.stars)

    def evaluate(self, q):
        """Radial data at points ``q`` (n, 2).

        Returns ``(dist, R, U, N)``: distances to each center (n, m), boundary
        radii along the rays through ``q`` (n, m), unit directions (n, m, 2) and
        outward boundary normals at the ray exits (n, m, 2).
        """
        P, _ = as_points(q)
        return radial(np.ascontiguousarray(P, dtype=float), self.centers, self.cv, self.cr, self.co, self.cw,
                      self.cc, self.sa, self.sn, self.so, self.sw, self.sd, self.swd)

    def gammas(self, q):
        dist, R, _, _ = self.evaluate(q)
        return dist / R


class StarObstacle:
    """Region strictly starshaped with respect to ``center``.

    ``atoms`` are the exact convex pieces of the source obstacles and
    ``filler`` an optional counter-clockwise polygon starshaped about a disc
    around the center.
    """

    def __init__(self, center, atoms, filler=None, member_ids=(), id=""):
        self.center = np.asarray(center, dtype=float).reshape(2)
        self._atoms = tuple(atoms)
        self.filler = None if filler is None else np.asarray(filler, dtype=float)
        self.member_ids = frozenset(member_ids)
        self.id = id
        self._index = None
        self._shape = None
        # False when the center could not be kept off the start-goal segment
        self.center_ok = True

    def __repr__(self):
        return f"StarObstacle(id={self.id!r}, center={self.center.round(3).tolist()}, atoms={len(self._atoms)}, filler={self.filler is not None})"

    def atoms(self):
        return self._atoms

    @property
    def index(self):
        if self._index is None:
            self._index = RadialIndex([self])
        return self._index

    def is_convex(self):
        return self.filler is None and len(self._atoms) == 1

    def radius_at(self, angles):
        """Boundary radius R(theta) about the center."""
        th = np.atleast_1d(np.asarray(angles, dtype=float))
        q = self.center + 1e-3 * np.stack([np.cos(th), np.sin(th)], axis=1)
        _, R, _, _ = self.index.evaluate(q)
        return R[:, 0]

    def gamma(self, q):
        P, single = as_points(q)
        g = self.index.gammas(P)[:, 0]
        return float(g[0]) if single else g

    def contains(self, q, closed=True):
        g = self.gamma(q)
        return g <= 1.0 + TOL if closed else g < 1.0 - TOL

    def boundary_point(self, q):
        """Radial projection of ``q`` onto the boundary and the outward normal there."""
        P, single = as_points(q)
        _, R, U, N = self.index.evaluate(P)
        B = self.center + R[:, 0, None] * U[:, 0]
        return (B[0], N[0, 0]) if single else (B, N[:, 0])

    def normal(self, q):
        return self.boundary_point(q)[1]

    def boundary_samples(self, n=720):
        th = 2.0 * np.pi * np.arange(n) / n
        U = np.stack([np.cos(th), np.sin(th)], axis=1)
        R = self.radius_at(th)
        return self.center + R[:, None] * U

    def distance(self, q):
        """Signed distance to the union of atoms and filler.

        Negative values are exact inside atoms; outside, the radial shadow of
        atom arcs behind the filler (at most a few mm) is not included.
        """
        P, single = as_points(q)
        d = np.min([a.distance(P) for a in self._atoms], axis=0)
        if self.filler is not None:
            d = np.minimum(d, _vec.polygon_signed_distance(P, self.filler))
        return float(d[0]) if single else d

    def margin(self):
        """Upper bound on how far the region extends beyond atoms and filler."""
        if self.filler is None:
            return 0.0
        return _BULGE * max(a.radius for a in self._atoms)

    def to_shapely(self, n=720):
        if self._shape is None:
            self._shape = shapely.Polygon(self.boundary_samples(n))
        return self._shape

    def area(self):
        if self.is_convex():
            a = self._atoms[0]
            P = shapely.Polygon(a.vertices) if len(a.vertices) >= 3 else None
            base = 0.0 if P is None else P.area
            perim = 0.0 if P is None else P.length
            if len(a.vertices) == 2:
                perim = 2.0 * np.hypot(*(a.vertices[1] - a.vertices[0]))
            return base + perim * a.radius + np.pi * a.radius ** 2
        return float(self.to_shapely(2880).area)

    def bounds(self):
        b = np.array([a.bounds() for a in self._atoms])
        lo, hi = b[:, :2].min(axis=0), b[:, 2:].max(axis=0)
        if self.filler is not None:
            lo = np.minimum(lo, self.filler.min(axis=0))
            hi = np.maximum(hi, self.filler.max(axis=0))
        return np.concatenate([lo, hi])


def piece_distance(atoms_a, filler_a, atoms_b, filler_b):
    """Distance between unions of atoms and filler polygons (<= 0 on contact)."""
    d = min(atom_distance(x, y) for x in atoms_a for y in atoms_b)
    if filler_a is not None:
        d = min(d, min(_vec.base_distance(y.vertices, filler_a) - y.radius for y in atoms_b))
    if filler_b is not None:
        d = min(d, min(_vec.base_distance(x.vertices, filler_b) - x.radius for x in atoms_a))
    if filler_a is not None and filler_b is not None:
        d = min(d, float(shapely.distance(shapely.Polygon(filler_a), shapely.Polygon(filler_b))))
    return d


def star_distance(a, b):
    """Conservative gap between two star obstacles (non-positive means possible contact)."""
    return piece_distance(a.atoms(), a.filler, b.atoms(), b.filler) - a.margin() - b.margin()


def atom_center(atom):
    V = atom.vertices
    if len(V) >= 3:
        return np.asarray(shapely.Polygon(V).centroid.coords[0])
    return V.mean(axis=0)


def _off_segment(c, segment, inside):
    """Push ``c`` off the segment ``l(r0, rg)`` when it lies within 1e-3 of it."""
    if segment is None:
        return c
    a, b = (np.asarray(p, dtype=float) for p in segment)
    d = _vec.point_segment_distance(c[None], a[None], b[None])[0, 0]
    if d > 1e-3:
        return c
    ab = b - a
    L = np.hypot(*ab)
    perp = np.array([-ab[1], ab[0]]) / L if L > 0 else np.array([0.0, 1.0])
    for sgn in (1.0, -1.0):
        cand = c + sgn * 1e-2 * perp
        if inside(cand) and _vec.point_segment_distance(cand[None], a[None], b[None])[0, 0] > 1e-3:
            return cand
    return None


def from_atom(atom, ids=(), id="", segment=None):
    """Star obstacle for a single convex atom, centered at its base centroid."""
    c = atom_center(atom)
    c2 = _off_segment(c, segment, lambda q: atom.distance(q[None])[0] < -1e-6)
    if c2 is None:
        raise NoValidCenter("convex obstacle center cannot be moved off the start-goal segment")
    return StarObstacle(c2, [atom], None, ids, id)


def from_region(region, segment=None):
    """Star obstacle equal to a convex primitive (circle, convex polygon, convex disc-polygon)."""
    atoms = region.atoms()
    if len(atoms) != 1:
        raise ValueError("from_region expects a convex region; use starshaped_hull")
    rid = getattr(region, "id", "")
    return from_atom(atoms[0], (rid,), rid, segment)


def _inscribed_union(atoms):
    shape = shapely.union_all([a.to_shapely(QUAD_SEGS) for a in atoms])
    if isinstance(shape, shapely.MultiPolygon):
        parts = sorted(shape.geoms, key=lambda g: -g.area)
        links = []
        for k in range(1, len(parts)):
            line = shapely.shortest_line(parts[k], shapely.union_all(parts[:k]))
            links.append(line.buffer(1e-4, quad_segs=1))
        shape = shapely.union_all(parts + links)
        if isinstance(shape, shapely.MultiPolygon):
            shape = max(shape.geoms, key=lambda g: g.area)
    return shapely.Polygon(shape.exterior).normalize()


def _ccw_ring(poly):
    V = np.asarray(poly.exterior.coords)[:-1]
    if _vec.signed_area(V) < 0:
        V = V[::-1]
    return V


def _cone(y, V, far):
    """Centers ``c`` from which some point of the ring ``V`` lies behind ``y``.

    These are ``y + s*(y - z)`` for ``z`` in the polygon; since the polygon is
    connected, the directions from ``y`` to it form one arc, so the set is a
    single wedge at ``y``.  Returns None when ``y`` is enclosed or the
    directions wrap all the way round.
    """
    d = V - y
    ang = np.arctan2(d[:, 1], d[:, 0])
    step = _vec.wrap_angle(np.diff(np.append(ang, ang[0])))
    if abs(step.sum()) > np.pi:
        return None
    un = ang[0] + np.concatenate([[0.0], np.cumsum(step[:-1])])
    lo, hi = un.min() + np.pi, un.max() + np.pi
    if hi - lo >= 2 * np.pi - 1e-9:
        return None
    k = max(2, int(np.ceil((hi - lo) / (np.pi / 32))) + 1)
    th = np.linspace(lo, hi, k)
    # circumscribe the arc so the wedge is fully covered
    r = far / np.cos((hi - lo) / (2 * (k - 1)))
    pts = np.vstack([y[None], y + r * np.stack([np.cos(th), np.sin(th)], axis=1)])
    return shapely.Polygon(pts)


def _filler(P_in, c, delta, K):
    """P_in made starshaped about the disc B(c, delta).

    When the disc already lies in the kernel ``K`` of P_in this is P_in itself;
    otherwise the hulls of the disc with every front-facing edge are added,
    which covers the radial closure of P_in.
    """
    ang = 2.0 * np.pi * np.arange(8) / 8
    Q = c + delta * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    V = _ccw_ring(P_in)
    if len(K) and np.all(_vec.polygon_signed_distance(Q, K) < 0.0):
        return V
    B = np.roll(V, -1, axis=0)
    front = _vec.cross(V - c, B - V) > 0.0
    V, B = V[front], B[front]
    pts = np.concatenate([np.broadcast_to(Q, (len(V), 8, 2)), V[:, None], B[:, None]], axis=1)
    pieces = shapely.convex_hull(shapely.multipoints(pts))
    F = shapely.union_all(np.append(pieces, shapely.Polygon(Q)))
    if isinstance(F, shapely.MultiPolygon):
        F = max(F.geoms, key=lambda g: g.area)
    F = shapely.Polygon(F.exterior).simplify(0.0)
    return _ccw_ring(F)


def _candidates(P_in, K, excluded, segment, budget=8):
    """Candidate star centers, best interior clearance first."""
    A = P_in
    xmin, ymin, xmax, ymax = P_in.bounds
    far = 4.0 * max(xmax - xmin, ymax - ymin) + 1.0
    V = _ccw_ring(P_in)
    for y in excluded:
        cone = _cone(np.asarray(y, float), V, far)
        if cone is None:
            return []
        A = A.difference(cone)
    if segment is not None:
        A = A.difference(shapely.LineString(np.asarray(segment, float)).buffer(2e-3))
    cands = []
    seeds = []
    if len(K):
        kp = shapely.Polygon(K).intersection(A)
        if not kp.is_empty:
            seeds.append(kp)
    if not A.is_empty:
        seeds.append(A)
    for region in seeds:
        parts = list(region.geoms) if hasattr(region, "geoms") else [region]
        parts = sorted((p for p in parts if isinstance(p, shapely.Polygon) and p.area > 1e-10), key=lambda g: -g.area)
        for p in parts[:3]:
            cands.append(np.asarray(polylabel(p, tolerance=1e-3).coords[0]))
    if not A.is_empty and A.area > 1e-10:
        gx = np.linspace(xmin, xmax, 9)[1:-1]
        gy = np.linspace(ymin, ymax, 9)[1:-1]
        G = np.array([(x, y) for x in gx for y in gy])
        inside = shapely.contains_xy(A, G[:, 0], G[:, 1])
        G = G[inside]
        if len(G):
            dep = shapely.distance(A.boundary, shapely.points(G))
            cands.extend(G[np.argsort(-dep, kind="stable")[:budget]])
    uniq = []
    for c in cands:
        if all(np.hypot(*(c - u)) > 1e-6 for u in uniq):
            uniq.append(c)
    # deepest first: the center is the admissible point of largest interior clearance
    if uniq:
        depth = shapely.distance(P_in.exterior, shapely.points(np.array(uniq)))
        uniq = [uniq[i] for i in np.argsort(-depth, kind="stable")]
    return uniq[:budget]


def starshaped_hull(cluster, excluded_points=(), avoid=(), segment=None, ids=None, id="", max_valid=1,
                    expired=None):
    """Starshaped superset of a connected cluster that leaves ``excluded_points`` outside.

    ``cluster`` is a region or a list of regions.  ``avoid`` lists convex atoms
    the result must not touch, and ``segment`` is a pair of points no center
    may lie on (default: the first two excluded points).  Once ``expired()``
    turns true no further candidates are tried.
    """
    regions = list(cluster) if isinstance(cluster, (list, tuple)) else [cluster]
    atoms = [a for r in regions for a in r.atoms()]
    if ids is None:
        ids = [getattr(r, "id", "") for r in regions]
    excluded = [np.asarray(y, dtype=float) for y in excluded_points]
    if segment is None and len(excluded) >= 2:
        segment = (excluded[0], excluded[1])
    if len(atoms) == 1:
        return from_atom(atoms[0], ids, id, segment)
    P_in = _inscribed_union(atoms)
    best = None
    valid = 0
    K = kernel(_ccw_ring(P_in))
    for c in _candidates(P_in, K, excluded, segment):
        if valid >= max_valid or (expired is not None and expired()):
            break
        c = _off_segment(c, segment, lambda q: P_in.contains(shapely.Point(q)))
        if c is None:
            continue
        depth = float(P_in.exterior.distance(shapely.Point(c)))
        delta = min(0.2, 0.5 * depth)
        if delta <= 1e-6:
            continue
        F = _filler(P_in, c, delta, K)
        star = StarObstacle(c, atoms, F, ids, id)
        if excluded and np.min(star.gamma(np.array(excluded))) < 1.0:
            continue
        if avoid and piece_distance(atoms, F, list(avoid), None) <= star.margin():
            continue
        valid += 1
        area = float(shapely.Polygon(F).area)
        if best is None or area < best[0] - 1e-12:
            best = (area, star)
    if best is None:
        raise NoValidCenter("no admissible star center for the obstacle cluster")
    return best[1]
