"""Modulated attractor field over a star world."""
from dataclasses import dataclass

import numpy as np

from ._kernels import modulate
from .errors import InteriorPoint
from .geometry._vec import as_points, cross

ZERO = 1e-12


@dataclass(frozen=True, eq=False)
class FieldEval:
    velocity: np.ndarray
    unit_velocity: np.ndarray
    gammas: np.ndarray


def gamma(obstacle, r):
    """Radial proximity ``|r - c| / |b(r) - c|``; 1 on the boundary, growing outward."""
    P, single = as_points(r)
    g = obstacle.index.gammas(P)[:, 0]
    if np.any(g < 1.0 - 1e-9):
        raise InteriorPoint(f"point inside obstacle (gamma={g.min():.6g})")
    return float(g[0]) if single else g


def weights(G):
    """Partition-of-unity weights (n, m) from gammas, prop. to 1 / (gamma - 1)."""
    n, m = G.shape
    if m == 0:
        return G
    E = G - 1.0
    on = E <= 0.0
    with np.errstate(divide="ignore"):
        inv = np.where(on, 0.0, 1.0 / np.where(on, 1.0, E))
    hit = on.any(axis=1)
    tot = inv.sum(axis=1, keepdims=True)
    W = inv / np.where(hit[:, None], 1.0, tot)
    if hit.any():
        W[hit] = on[hit] / on[hit].sum(axis=1, keepdims=True)
    return W


def evaluate(P, rg, world, data=None):
    """Vectorized field at points P (n, 2): returns (eta (n, 2), gammas (n, m)).

    ``data`` may carry a precomputed ``world.index.evaluate(P)`` result.
    """
    P = np.asarray(P, dtype=float).reshape(-1, 2)
    F = np.asarray(rg, dtype=float)[None] - P
    if not world.obstacles:
        return F, np.zeros((len(P), 0))
    dist, R, U, N = world.index.evaluate(P) if data is None else data
    G = dist / R
    if np.any(G < 1.0 - 1e-9):
        raise InteriorPoint(f"point inside a star obstacle (gamma={G.min():.6g})")
    G = np.maximum(G, 1.0)
    return modulate(np.ascontiguousarray(F), G, U, N, ZERO), G


def normalize(eta):
    n = np.hypot(eta[..., 0], eta[..., 1])
    return np.where((n > ZERO)[..., None], eta / np.where(n > ZERO, n, 1.0)[..., None], 0.0)


def field(r, rg, star_world):
    """Field value, its normalization and the gammas at ``r``."""
    eta, G = evaluate(np.asarray(r, dtype=float)[None], rg, star_world)
    return FieldEval(eta[0], normalize(eta)[0], G[0])


def modulation(r, rg, star_world):
    """Matrix M(r) with ``field(r).velocity == M @ (rg - r)``.

    A single obstacle gives ``E diag(1 - 1/G, 1 + 1/G) E^-1`` with
    ``E = [reference direction, tangent]``; several obstacles give the
    scaled rotation that maps the nominal direction onto the combined one.
    """
    r = np.asarray(r, dtype=float)
    if not star_world.obstacles:
        return np.eye(2)
    dist, R, U, N = star_world.index.evaluate(r[None])
    G = dist / R
    if np.any(G < 1.0 - 1e-9):
        raise InteriorPoint(f"point inside a star obstacle (gamma={G.min():.6g})")
    G = np.maximum(G, 1.0)
    if G.shape[1] == 1:
        u, n = U[0, 0], N[0, 0]
        E = np.column_stack([u, [-n[1], n[0]]])
        D = np.diag([1.0 - 1.0 / G[0, 0], 1.0 + 1.0 / G[0, 0]])
        return E @ D @ np.linalg.inv(E)
    f = np.asarray(rg, dtype=float) - r
    nf = np.hypot(*f)
    if nf <= ZERO:
        return np.eye(2)
    v = evaluate(r[None], rg, star_world, (dist, R, U, N))[0][0]
    c, s = np.dot(f, v), cross(f, v)
    return np.array([[c, -s], [s, c]]) / (nf * nf)
