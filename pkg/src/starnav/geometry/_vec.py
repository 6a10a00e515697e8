"""Vectorized planar primitives shared by the geometry modules.

All functions take float arrays of shape (..., 2) and never copy more than
needed; callers are responsible for shape normalization.
"""
import numpy as np

TOL = 1e-9


def as_points(q):
    """Return ``(points (n, 2), single)`` for a point or an array of points."""
    a = np.asarray(q, dtype=float)
    return a.reshape(-1, 2), a.ndim == 1


def cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def signed_area(V):
    x, y = V[:, 0], V[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def edges(V):
    """Edge start/end arrays; points give a zero-length edge, segments one edge."""
    if len(V) == 1:
        return V, V
    if len(V) == 2:
        return V[:1], V[1:]
    return V, np.roll(V, -1, axis=0)


def outward_normals(V):
    """Outward unit normals of a counter-clockwise polygon's edges."""
    d = np.roll(V, -1, axis=0) - V
    n = np.stack([d[:, 1], -d[:, 0]], axis=1)
    return n / np.linalg.norm(n, axis=1, keepdims=True)


def point_segment_distance(P, A, B):
    """Distances (n, m) from points P (n, 2) to segments A->B (m, 2)."""
    AB = B - A
    AP = P[:, None, :] - A[None, :, :]
    den = np.einsum("ij,ij->i", AB, AB)
    den = np.where(den > 0.0, den, 1.0)
    t = np.clip(np.einsum("nmj,mj->nm", AP, AB) / den, 0.0, 1.0)
    D = AP - t[..., None] * AB[None]
    return np.hypot(D[..., 0], D[..., 1])


def closest_on_segments(P, A, B):
    """Closest points (n, m, 2) on segments A->B to the points P."""
    AB = B - A
    AP = P[:, None, :] - A[None, :, :]
    den = np.einsum("ij,ij->i", AB, AB)
    den = np.where(den > 0.0, den, 1.0)
    t = np.clip(np.einsum("nmj,mj->nm", AP, AB) / den, 0.0, 1.0)
    return A[None] + t[..., None] * AB[None]


def point_in_polygon(P, V):
    """Crossing-number inside test; boundary points are unreliable by design."""
    x, y = P[:, 0:1], P[:, 1:2]
    xa, ya = V[:, 0][None], V[:, 1][None]
    xb, yb = np.roll(V[:, 0], -1)[None], np.roll(V[:, 1], -1)[None]
    cond = (ya > y) != (yb > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = xa + (y - ya) * (xb - xa) / (yb - ya)
    hits = cond & (x < xint)
    return (np.count_nonzero(hits, axis=1) % 2) == 1


def polygon_signed_distance(P, V):
    """Signed distance to a simple polygon (negative inside)."""
    A, B = edges(V)
    d = point_segment_distance(P, A, B).min(axis=1)
    if len(V) >= 3:
        d = np.where(point_in_polygon(P, V), -d, d)
    return d


def proper_crossings(a, b, C, D, tol=TOL):
    """Boolean (m,) mask of segments C->D strictly crossing segment a->b."""
    ab = b - a
    d1 = cross(ab[None], C - a)
    d2 = cross(ab[None], D - a)
    cd = D - C
    d3 = cross(cd, a - C)
    d4 = cross(cd, b - C)
    scale_ab = max(np.hypot(*ab), 1e-300)
    scale_cd = np.maximum(np.hypot(cd[:, 0], cd[:, 1]), 1e-300)
    d1, d2 = d1 / scale_ab, d2 / scale_ab
    d3, d4 = d3 / scale_cd, d4 / scale_cd
    return ((d1 > tol) & (d2 < -tol) | (d1 < -tol) & (d2 > tol)) & (
        (d3 > tol) & (d4 < -tol) | (d3 < -tol) & (d4 > tol)
    )


def segment_segment_distance(a, b, C, D):
    """Distances (m,) from the segment a->b to the segments C->D."""
    d = np.minimum(
        point_segment_distance(np.stack([a, b]), C, D).min(axis=0),
        point_segment_distance(np.concatenate([C, D]), a[None], b[None])[:, 0].reshape(2, -1).min(axis=0),
    )
    return np.where(proper_crossings(a, b, C, D, tol=0.0), 0.0, d)


def _pt_seg(P, A, B):
    """Pairwise broadcast point-to-segment distance, shapes (..., 2)."""
    AB = B - A
    den = np.einsum("...j,...j->...", AB, AB)
    t = np.clip(np.einsum("...j,...j->...", P - A, AB) / np.where(den > 0.0, den, 1.0), 0.0, 1.0)
    D = P - A - t[..., None] * AB
    return np.hypot(D[..., 0], D[..., 1])


def pairwise_segment_distance(A1, B1, A2, B2):
    """Distances (k, m) between segments A1->B1 (k) and A2->B2 (m)."""
    a, b = A1[:, None, :], B1[:, None, :]
    c, d = A2[None], B2[None]
    dist = np.minimum(np.minimum(_pt_seg(a, c, d), _pt_seg(b, c, d)), np.minimum(_pt_seg(c, a, b), _pt_seg(d, a, b)))
    ab, cd = b - a, d - c
    d1, d2 = cross(ab, c - a), cross(ab, d - a)
    d3, d4 = cross(cd, a - c), cross(cd, b - c)
    hit = (((d1 > 0) & (d2 < 0)) | ((d1 < 0) & (d2 > 0))) & (((d3 > 0) & (d4 < 0)) | ((d3 < 0) & (d4 > 0)))
    return np.where(hit, 0.0, dist)


def base_distance(V1, V2):
    """Distance between two closed point sets given as point, segment or polygon vertex arrays."""
    if len(V1) >= 3 and point_in_polygon(V2[:1], V1)[0]:
        return 0.0
    if len(V2) >= 3 and point_in_polygon(V1[:1], V2)[0]:
        return 0.0
    A1, B1 = edges(V1)
    A2, B2 = edges(V2)
    return float(pairwise_segment_distance(A1, B1, A2, B2).min())


def ray_segment_hits(c, U, A, B, tol=1e-12):
    """Ray parameters (n, m) where rays c + t*U hit segments A->B; -inf if missed."""
    d = B - A
    den = cross(U[:, None, :], d[None])
    w = A[None] - c
    with np.errstate(divide="ignore", invalid="ignore"):
        t = cross(w, d[None]) / den
        lam = cross(w, U[:, None, :]) / den
    ok = (np.abs(den) > 1e-15) & (lam >= -tol) & (lam <= 1.0 + tol) & (t >= -tol)
    return np.where(ok, t, -np.inf)


def ray_circle_far(c, U, V, r):
    """Far intersection parameter (n, m) of rays with circles centered at V; -inf if missed."""
    w = V - c
    b = U @ w.T
    cc = np.einsum("ij,ij->i", w, w) - r * r
    disc = b * b - cc[None]
    with np.errstate(invalid="ignore"):
        t = b + np.sqrt(disc)
    return np.where((disc >= 0.0) & (t >= 0.0), t, -np.inf)


def wrap_angle(a):
    """Wrap angles to (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)
