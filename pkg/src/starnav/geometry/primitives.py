"""Obstacle primitives with exact membership and signed distance.

Every region used by the planner is a finite union of *convex atoms*, each
being the Minkowski sum of a convex point set (point, segment or convex
polygon) with a closed disc.  Inflation only increases atom radii, so arcs
stay exact and ``distance(inflate(O, r), q) == distance(O, q) - r`` holds
identically.
"""
from dataclasses import dataclass, field

import numpy as np
import shapely

from .._kernels import atom_distances
from ..errors import GeometryError
from . import _vec
from ._vec import TOL, as_points
from .decompose import convex_decomposition


def _rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _clean_vertices(vertices, min_count):
    V = np.asarray(vertices, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(V)):
        raise GeometryError("non-finite vertex coordinates")
    keep = np.ones(len(V), dtype=bool)
    keep[1:] = np.any(np.abs(np.diff(V, axis=0)) > TOL, axis=1)
    V = V[keep]
    if len(V) > 1 and np.all(np.abs(V[0] - V[-1]) <= TOL):
        V = V[:-1]
    if len(V) < min_count:
        raise GeometryError(f"need at least {min_count} distinct vertices, got {len(V)}")
    return V


def _ccw_polygon(vertices):
    V = _clean_vertices(vertices, 3)
    area = _vec.signed_area(V)
    if abs(area) < 1e-12:
        raise GeometryError("degenerate polygon with zero area")
    if area < 0:
        V = V[::-1].copy()
    return V


def _is_simple(V):
    A, B = _vec.edges(V)
    n = len(V)
    for i in range(n):
        others = [j for j in range(n) if j != i and j != (i + 1) % n and (j + 1) % n != i]
        if not others:
            continue
        if _vec.proper_crossings(A[i], B[i], A[others], B[others], tol=0.0).any():
            return False
    return True


class ConvexAtom:
    """Convex point set ``conv(vertices)`` dilated by a closed disc of ``radius``.

    ``vertices`` holds one point, the two ends of a segment, or a
    counter-clockwise convex polygon.
    """

    __slots__ = ("vertices", "radius", "_A", "_B", "_n")

    def __init__(self, vertices, radius=0.0):
        V = np.asarray(vertices, dtype=float).reshape(-1, 2)
        self.vertices = V
        self.radius = float(radius)
        if len(V) == 1:
            self._A = self._B = self._n = np.zeros((0, 2))
        elif len(V) == 2:
            d = V[1] - V[0]
            n = np.array([d[1], -d[0]]) / np.hypot(*d)
            self._A = np.stack([V[0], V[1]])
            self._B = np.stack([V[1], V[0]])
            self._n = np.stack([n, -n])
        else:
            self._A = V
            self._B = np.roll(V, -1, axis=0)
            self._n = _vec.outward_normals(V)

    def __repr__(self):
        return f"ConvexAtom(k={len(self.vertices)}, radius={self.radius:.4g})"

    def atoms(self):
        return (self,)

    def inflated(self, rho):
        return ConvexAtom(self.vertices, self.radius + rho)

    def base_distance(self, P):
        return _vec.polygon_signed_distance(P, self.vertices)

    def distance(self, P):
        return self.base_distance(P) - self.radius

    def ray_exit(self, c, U):
        """Farthest hit ``t`` of rays ``c + t*U`` with the atom and outward normals there."""
        n = len(U)
        t = np.full(n, -np.inf)
        nrm = np.zeros((n, 2))
        r = self.radius
        if r > 0.0:
            tc = _vec.ray_circle_far(c, U, self.vertices, r)
            k = np.argmax(tc, axis=1)
            t = tc[np.arange(n), k]
            ok = np.isfinite(t)
            hit = c + t[ok, None] * U[ok]
            nrm[ok] = (hit - self.vertices[k[ok]]) / r
        if len(self._A):
            A = self._A + r * self._n
            B = self._B + r * self._n
            te = _vec.ray_segment_hits(c, U, A, B)
            k = np.argmax(te, axis=1)
            tk = te[np.arange(n), k]
            better = tk > t
            t = np.where(better, tk, t)
            nrm[better] = self._n[k[better]]
        return t, nrm

    def segment_clearance(self, a, b):
        """Clearance of segment a->b from the atom (negative when it enters)."""
        if len(self.vertices) == 1:
            d = _vec.point_segment_distance(self.vertices, a[None], b[None])[0, 0]
            return d - self.radius
        A, B = _vec.edges(self.vertices) if len(self.vertices) >= 3 else (self.vertices[:1], self.vertices[1:])
        d = float(_vec.segment_segment_distance(a, b, A, B).min())
        if len(self.vertices) >= 3 and _vec.point_in_polygon(np.stack([a, b]), self.vertices).any():
            d = 0.0
        return d - self.radius

    def to_shapely(self, quad_segs=8):
        V = self.vertices
        if len(V) == 1:
            base = shapely.Point(V[0])
        elif len(V) == 2:
            base = shapely.LineString(V)
        else:
            base = shapely.Polygon(V)
        if self.radius > 0:
            return base.buffer(self.radius, quad_segs=quad_segs)
        return base

    def circumscribed_vertices(self, quad_segs=8):
        """Vertices of a convex polygon containing the atom (arcs replaced by tangent chains)."""
        if self.radius <= 0.0:
            return self.vertices.copy()
        step = np.pi / (2 * quad_segs)
        scale = self.radius / np.cos(step / 2)
        ang = np.arange(4 * quad_segs) * step + step / 2
        ring = scale * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        return (self.vertices[:, None, :] + ring[None]).reshape(-1, 2)

    def bounds(self):
        lo = self.vertices.min(axis=0) - self.radius
        hi = self.vertices.max(axis=0) + self.radius
        return np.concatenate([lo, hi])


def atom_distance(a, b):
    """Distance between two convex atoms (<= 0 when they intersect)."""
    return _vec.base_distance(a.vertices, b.vertices) - a.radius - b.radius


class _Region:
    """Shared behaviour of closed planar regions."""

    def atoms(self):
        raise NotImplementedError

    def distance(self, q):
        P, single = as_points(q)
        d = self._distance(P)
        return float(d[0]) if single else d

    def contains(self, q, closed=True):
        d = self.distance(q)
        return d <= TOL if closed else d < -TOL

    def bounds(self):
        b = np.array([a.bounds() for a in self.atoms()])
        return np.concatenate([b[:, :2].min(axis=0), b[:, 2:].max(axis=0)])

    def to_shapely(self, quad_segs=8):
        parts = [a.to_shapely(quad_segs) for a in self.atoms()]
        return shapely.union_all(parts) if len(parts) > 1 else parts[0]

    def area(self):
        return float(self.to_shapely(quad_segs=256).area)


@dataclass(frozen=True, eq=False)
class Circle(_Region):
    center: np.ndarray
    radius: float
    id: str = ""

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(2)
        if not np.all(np.isfinite(c)):
            raise GeometryError("non-finite circle center")
        if not self.radius > 0:
            raise GeometryError("circle radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    def atoms(self):
        return (ConvexAtom(self.center[None], self.radius),)

    def _distance(self, P):
        return np.hypot(*(P - self.center).T) - self.radius

    def inflate(self, rho):
        return Circle(self.center, self.radius + rho, self.id) if rho > 0 else self

    def transformed(self, x, y, theta):
        return Circle(_rotation(theta) @ self.center + (x, y), self.radius, self.id)


@dataclass(frozen=True, eq=False)
class ConvexPolygon(_Region):
    vertices: np.ndarray
    id: str = ""

    def __post_init__(self):
        V = _ccw_polygon(self.vertices)
        n = len(V)
        turns = [_vec.cross(V[i] - V[i - 1], V[(i + 1) % n] - V[i]) for i in range(n)]
        if min(turns) < -1e-9:
            raise GeometryError("vertices do not form a convex chain")
        object.__setattr__(self, "vertices", V)

    def atoms(self):
        return (ConvexAtom(self.vertices, 0.0),)

    def _distance(self, P):
        return _vec.polygon_signed_distance(P, self.vertices)

    def centroid(self):
        return np.asarray(shapely.Polygon(self.vertices).centroid.coords[0])

    def inflate(self, rho):
        return DiscPolygon(self.vertices, rho, self.id) if rho > 0 else self

    def transformed(self, x, y, theta):
        return ConvexPolygon(self.vertices @ _rotation(theta).T + (x, y), self.id)


@dataclass(frozen=True, eq=False)
class Polygon(_Region):
    """Simple (possibly non-convex) polygon."""

    vertices: np.ndarray
    id: str = ""
    _pieces: tuple = field(default=(), repr=False)

    def __post_init__(self):
        V = _ccw_polygon(self.vertices)
        if not _is_simple(V):
            raise GeometryError("polygon is self-intersecting")
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "_pieces", tuple(convex_decomposition(V)))

    def atoms(self):
        return tuple(ConvexAtom(p, 0.0) for p in self._pieces)

    def _distance(self, P):
        return _vec.polygon_signed_distance(P, self.vertices)

    def is_convex(self):
        return len(self._pieces) == 1

    def inflate(self, rho):
        return DiscPolygon(self.vertices, rho, self.id) if rho > 0 else self

    def transformed(self, x, y, theta):
        return Polygon(self.vertices @ _rotation(theta).T + (x, y), self.id)


@dataclass(frozen=True, eq=False)
class DiscPolygon(_Region):
    """Point set ``base`` (point, segment or simple polygon) dilated by a closed disc.

    Boundaries consist of offset line segments and circular arcs of
    ``radius``.
    """

    base: np.ndarray
    radius: float
    id: str = ""
    _pieces: tuple = field(default=(), repr=False)

    def __post_init__(self):
        V = np.asarray(self.base, dtype=float).reshape(-1, 2)
        if len(V) >= 3:
            V = _ccw_polygon(V)
            if not _is_simple(V):
                raise GeometryError("polygon is self-intersecting")
            pieces = tuple(convex_decomposition(V))
        else:
            V = _clean_vertices(V, 1)
            pieces = (V,)
        if self.radius < 0:
            raise GeometryError("negative dilation radius")
        object.__setattr__(self, "base", V)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "_pieces", pieces)

    @property
    def vertices(self):
        return self.base

    def atoms(self):
        return tuple(ConvexAtom(p, self.radius) for p in self._pieces)

    def is_convex(self):
        return len(self._pieces) == 1

    def _distance(self, P):
        return _vec.polygon_signed_distance(P, self.base) - self.radius

    def inflate(self, rho):
        return DiscPolygon(self.base, self.radius + rho, self.id) if rho > 0 else self

    def transformed(self, x, y, theta):
        return DiscPolygon(self.base @ _rotation(theta).T + (x, y), self.radius, self.id)


def contains(obstacle, q, closed=True):
    """Membership of ``q`` in the closed (or open) region."""
    return obstacle.contains(q, closed=closed)


def distance(obstacle, q):
    """Signed distance from ``q`` to the region boundary, negative inside.

    For dilated regions this is the dilation-consistent signed distance
    ``distance(base, q) - radius``; it equals the Euclidean boundary
    distance everywhere outside the region.
    """
    return obstacle.distance(q)


def inflate(obstacle, rho):
    """Minkowski sum of ``obstacle`` with the closed disc of radius ``rho``."""
    if rho < 0:
        raise GeometryError("inflation radius must be non-negative")
    return obstacle.inflate(rho)


def intersects(a, b):
    """True iff the closed regions ``a`` and ``b`` share a point."""
    return region_distance(a, b) <= TOL


def region_distance(a, b):
    """Lower-is-closer gap between two regions; non-positive when they intersect."""
    return min(atom_distance(x, y) for x in a.atoms() for y in b.atoms())


def clearance(obstacles, q):
    """Minimum signed distance from ``q`` (or each row of ``q``) to a list of regions."""
    P, single = as_points(q)
    if not obstacles:
        d = np.full(len(P), np.inf)
    else:
        d = np.min([o.distance(P) for o in obstacles], axis=0)
    return float(d[0]) if single else d


class AtomBatch:
    """Signed distance to many convex atoms at once.

    Convex bases make the interior distance a maximum over edge half-planes,
    so every atom reduces to grouped minima and maxima over one flat edge table.
    """

    def __init__(self, atoms):
        self.atoms = list(atoms)
        A, B, N, own, poly = [], [], [], [], []
        for j, a in enumerate(self.atoms):
            V = a.vertices
            if len(V) >= 3:
                A.append(V)
                B.append(np.roll(V, -1, axis=0))
                N.append(_vec.outward_normals(V))
            else:
                ea, eb = _vec.edges(V)
                A.append(ea)
                B.append(eb)
                N.append(np.zeros((len(ea), 2)))
            own.append(np.full(len(A[-1]), j))
            poly.append(len(V) >= 3)
        self.A = np.concatenate(A) if A else np.zeros((0, 2))
        self.B = np.concatenate(B) if B else np.zeros((0, 2))
        self.N = np.concatenate(N) if N else np.zeros((0, 2))
        own = np.concatenate(own) if own else np.zeros(0, dtype=int)
        self.starts = np.flatnonzero(np.diff(np.concatenate([[-1], own])))
        self.poly = np.array(poly, dtype=bool)
        self.radius = np.array([a.radius for a in self.atoms])
        self.AB = self.B - self.A
        den = np.einsum("ij,ij->i", self.AB, self.AB)
        self.den = np.where(den > 0.0, den, 1.0)

    def __len__(self):
        return len(self.atoms)

    def distances(self, P):
        """Signed distances (n, m) from points P to each atom."""
        if not self.atoms:
            return np.zeros((len(P), 0))
        return atom_distances(np.ascontiguousarray(P, dtype=float), self.A, self.AB, self.den, self.N,
                              self.starts, self.poly, self.radius)

    def clearance(self, q):
        P, single = as_points(q)
        d = self.distances(P).min(axis=1) if self.atoms else np.full(len(P), np.inf)
        return float(d[0]) if single else d
