"""Convex decomposition of simple polygons.

Ear clipping gives a triangulation; Hertel-Mehlhorn style greedy removal of
inessential diagonals then merges triangles into convex pieces.
"""
import numpy as np

from ..errors import GeometryError
from ._vec import TOL, cross


def _is_convex_turn(V, i, j, k):
    return cross(V[j] - V[i], V[k] - V[j]) > TOL


def _in_triangle(p, a, b, c):
    d1 = cross(b - a, p - a)
    d2 = cross(c - b, p - b)
    d3 = cross(a - c, p - c)
    return d1 >= -TOL and d2 >= -TOL and d3 >= -TOL


def triangulate(V):
    """Ear-clipping triangulation of a counter-clockwise simple polygon.

    Returns a list of index triples into ``V``.
    """
    idx = list(range(len(V)))
    tris = []
    guard = 0
    while len(idx) > 3:
        n = len(idx)
        for m in range(n):
            i, j, k = idx[m - 1], idx[m], idx[(m + 1) % n]
            if not _is_convex_turn(V, i, j, k):
                continue
            if any(_in_triangle(V[q], V[i], V[j], V[k]) for q in idx if q not in (i, j, k)):
                continue
            tris.append((i, j, k))
            del idx[m]
            break
        else:
            # only collinear or numerically ambiguous ears remain
            guard += 1
            if guard > 1:
                raise GeometryError("ear clipping failed; polygon is not simple")
            m = int(np.argmax([cross(V[idx[m]] - V[idx[m - 1]], V[idx[(m + 1) % n]] - V[idx[m]]) for m in range(n)]))
            tris.append((idx[m - 1], idx[m], idx[(m + 1) % n]))
            del idx[m]
            continue
        guard = 0
    tris.append(tuple(idx))
    return tris


def _piece_convex(V, piece):
    n = len(piece)
    return all(cross(V[piece[m]] - V[piece[m - 1]], V[piece[(m + 1) % n]] - V[piece[m]]) >= -TOL for m in range(n))


def _merge(a, b, i, j):
    """Merge pieces ``a`` (containing edge i->j) and ``b`` (containing j->i)."""
    ka = a.index(i)
    a_rot = a[ka + 1:] + a[:ka + 1]  # starts at j, ends at i
    kb = b.index(j)
    b_rot = b[kb + 1:] + b[:kb + 1]  # starts at i, ends at j
    return a_rot[:-1] + b_rot[:-1]


def convex_decomposition(V):
    """Split a counter-clockwise simple polygon into convex vertex arrays."""
    V = np.asarray(V, dtype=float)
    if _piece_convex(V, list(range(len(V)))):
        return [V.copy()]
    pieces = [list(t) for t in triangulate(V)]
    merged = True
    while merged:
        merged = False
        for a_pos in range(len(pieces)):
            a = pieces[a_pos]
            for e in range(len(a)):
                i, j = a[e], a[(e + 1) % len(a)]
                for b_pos in range(len(pieces)):
                    if b_pos == a_pos:
                        continue
                    b = pieces[b_pos]
                    if j in b and b[(b.index(j) + 1) % len(b)] == i:
                        cand = _merge(a, b, i, j)
                        if _piece_convex(V, cand):
                            pieces[a_pos] = cand
                            del pieces[b_pos]
                            merged = True
                        break
                if merged:
                    break
            if merged:
                break
    return [V[p] for p in pieces]
