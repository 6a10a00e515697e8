"""Convex hulls, polygon kernels and intersecting-cluster partitions."""
import numpy as np

from ._vec import TOL, cross
from .primitives import Circle, ConvexAtom, ConvexPolygon, DiscPolygon, atom_distance


def monotone_chain(P):
    """Counter-clockwise convex hull of a point cloud, collinear points dropped."""
    P = np.unique(np.asarray(P, dtype=float).reshape(-1, 2), axis=0)
    if len(P) <= 2:
        return P

    def half(points):
        out = []
        for q in points:
            while len(out) >= 2 and cross(out[-1] - out[-2], q - out[-2]) <= TOL * max(1.0, np.abs(q).max()):
                out.pop()
            out.append(q)
        return out

    lower = half(P)
    upper = half(P[::-1])
    H = np.array(lower[:-1] + upper[:-1])
    return H


def _atoms_of(region):
    if isinstance(region, (list, tuple)):
        return [a for r in region for a in _atoms_of(r)]
    if isinstance(region, ConvexAtom):
        return [region]
    return list(region.atoms())


def convex_hull(region, quad_segs=8):
    """Smallest convex superset of a region or a list of regions.

    Unions of atoms sharing one dilation radius have an exact hull (hull of
    the base points dilated by that radius).  Mixed radii get a conservative
    superset: the excess radius of each atom is replaced by a circumscribed
    polygon before dilating by the smallest radius.
    """
    single = not isinstance(region, (list, tuple))
    if single and isinstance(region, (Circle, ConvexPolygon)):
        return region
    atoms = _atoms_of(region)
    rid = region.id if single and hasattr(region, "id") else ""
    radii = np.array([a.radius for a in atoms])
    rmin = float(radii.min())
    if np.all(radii - rmin <= TOL):
        pts = np.concatenate([a.vertices for a in atoms])
    else:
        pts = np.concatenate([ConvexAtom(a.vertices, a.radius - rmin).circumscribed_vertices(quad_segs) for a in atoms])
    H = monotone_chain(pts)
    if len(H) == 1 and rmin > 0:
        return Circle(H[0], rmin, rid)
    if rmin <= TOL and len(H) >= 3:
        return ConvexPolygon(H, rid)
    return DiscPolygon(H, rmin, rid)


def _clip(poly, a, n):
    """Clip polygon to the half-plane {q : n.(q - a) <= 0}."""
    if len(poly) == 0:
        return poly
    d = (poly - a) @ n
    out = []
    m = len(poly)
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        dp, dq = d[i], d[(i + 1) % m]
        if dp <= 0:
            out.append(p)
        if (dp < 0 < dq) or (dq < 0 < dp):
            out.append(p + (q - p) * (dp / (dp - dq)))
    return np.array(out).reshape(-1, 2)


def kernel(V):
    """Kernel (set of star centers) of a counter-clockwise simple polygon.

    Returns the kernel vertex array, empty when the kernel has no interior.
    """
    V = np.asarray(V, dtype=float)
    lo, hi = V.min(axis=0) - 1.0, V.max(axis=0) + 1.0
    K = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    B = np.roll(V, -1, axis=0)
    D = B - V
    N = np.stack([D[:, 1], -D[:, 0]], axis=1)
    N /= np.linalg.norm(N, axis=1, keepdims=True)
    for a, n in zip(V, N):
        K = _clip(K, a, n)
        if len(K) < 3:
            return np.zeros((0, 2))
    area = 0.5 * abs(np.sum(K[:, 0] * np.roll(K[:, 1], -1) - np.roll(K[:, 0], -1) * K[:, 1]))
    return K if area > 1e-12 else np.zeros((0, 2))


def cluster_intersecting(obstacles):
    """Partition ``obstacles`` into lists of mutually connected intersecting regions."""
    return [[obstacles[i] for i in g] for g in cluster_indices(obstacles)]


def cluster_indices(obstacles):
    """Index form of :func:`cluster_intersecting`, groups ordered by first index."""
    n = len(obstacles)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    atoms = [list(o.atoms()) for o in obstacles]
    boxes = [o.bounds() for o in obstacles]
    for i in range(n):
        for j in range(i + 1, n):
            bi, bj = boxes[i], boxes[j]
            if bi[0] > bj[2] + TOL or bj[0] > bi[2] + TOL or bi[1] > bj[3] + TOL or bj[1] > bi[3] + TOL:
                continue
            if find(i) == find(j):
                continue
            if min(atom_distance(a, b) for a in atoms[i] for b in atoms[j]) <= TOL:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])
