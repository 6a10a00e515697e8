"""Cached simulation runs and random worlds shared by several test modules."""
import functools
import time

import numpy as np
import shapely

from starnav.geometry import Circle, ConvexAtom, ConvexPolygon, Polygon, StarObstacle
from starnav.harness import load_scenario, shipped_scenarios, simulate
from starnav.harness.random_scenarios import run_random
from starnav.starworld import StarWorld

N_RANDOM = 100


class TickClock:
    """Clock that advances by a fixed step on every read."""

    def __init__(self, step):
        self.t = 0.0
        self.step = step

    def __call__(self):
        self.t += self.step
        return self.t


def frozen_clock():
    return 0.0


@functools.lru_cache(maxsize=None)
def shipped_runs():
    t = time.perf_counter()
    runs = {name: simulate(load_scenario(name)) for name in shipped_scenarios()}
    return runs, time.perf_counter() - t


@functools.lru_cache(maxsize=None)
def random_runs():
    t = time.perf_counter()
    runs, rejected = run_random(N_RANDOM, seed=0)
    return runs, rejected, time.perf_counter() - t


def all_records():
    shipped, _ = shipped_runs()
    rand, _, _ = random_runs()
    out = [(name, r) for name, res in shipped.items() for r in res.records]
    out += [(sc.name, r) for sc, res in rand for r in res.records]
    return out


def fan_star(rng, c, r_lo, r_hi):
    """Random polygon starshaped about c, as a fan of triangles; returns (star, vertices)."""
    k = int(rng.integers(5, 11))
    th = np.linspace(0, 2 * np.pi, k, endpoint=False) + rng.uniform(-0.3, 0.3, k) * np.pi / k
    R = rng.uniform(r_lo, r_hi, k)
    V = c + R[:, None] * np.stack([np.cos(th), np.sin(th)], axis=1)
    atoms = [ConvexAtom([c, V[i], V[(i + 1) % k]]) for i in range(k)]
    return StarObstacle(c, atoms), V


def disc_star(c, r):
    return StarObstacle(c, [ConvexAtom([c], r)])


def random_star_world(rng, n=None, r0=(0.0, 0.0), rg=(8.0, 0.0)):
    """Disjoint star obstacles between r0 and rg with centers off the segment.

    Returns (world, kinds) where kinds[i] is ("disc", c, r) or ("fan", c, V).
    """
    r0, rg = np.asarray(r0, float), np.asarray(rg, float)
    n = int(rng.integers(2, 6)) if n is None else n
    seg = shapely.LineString([r0, rg])
    stars, kinds, discs = [], [], []
    tries = 0
    while len(stars) < n and tries < 500:
        tries += 1
        c = np.array([rng.uniform(1.0, 7.0), rng.uniform(-2.0, 2.0)])
        size = rng.uniform(0.4, 1.2)
        if seg.distance(shapely.Point(c)) < 0.05:
            continue
        if np.hypot(*(c - r0)) < size + 0.3 or np.hypot(*(c - rg)) < size + 0.3:
            continue
        if any(np.hypot(*(c - d)) < size + s + 0.2 for d, s in discs):
            continue
        if rng.random() < 0.3:
            stars.append(disc_star(c, size))
            kinds.append(("disc", c, size))
        else:
            s, V = fan_star(rng, c, 0.4 * size, size)
            stars.append(s)
            kinds.append(("fan", c, V))
        discs.append((c, size))
    world = StarWorld(stars, 0.0, r0, rg, True, False)
    return world, kinds


def oracle_clearance(obs, Q):
    """Distance from points to the raw obstacles: analytic for circles, shapely for polygons."""
    d = np.full(len(Q), np.inf)
    pts = shapely.points(Q)
    for o in obs:
        if isinstance(o, Circle):
            d = np.minimum(d, np.hypot(*(Q - o.center).T) - o.radius)
        else:
            P = shapely.Polygon(o.vertices)
            dd = shapely.distance(P, pts)
            dd[shapely.contains(P, pts)] = -1.0
            d = np.minimum(d, dd)
    return d


def random_raw_world(rng):
    obs = []
    for _ in range(int(rng.integers(2, 9))):
        c = rng.uniform(-1.2, 1.2, 2)
        u = rng.random()
        if u < 0.4:
            obs.append(Circle(c, rng.uniform(0.1, 0.7)))
        elif u < 0.8:
            k = int(rng.integers(3, 7))
            th = np.linspace(0, 2 * np.pi, k, endpoint=False) + rng.uniform(0, 0.5)
            r = rng.uniform(0.1, 0.7)
            obs.append(ConvexPolygon(c + r * np.stack([np.cos(th), np.sin(th)], axis=1)))
        else:
            a, b = rng.uniform(0.3, 0.8), rng.uniform(0.1, 0.25)
            V = np.array([[0, 0], [a, 0], [a, b], [b, b], [b, a], [0, a]]) + c
            obs.append(Polygon(V))
    return obs
