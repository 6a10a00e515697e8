"""Seeded random scenarios for invariant sweeps.

Each scenario has 3 to 8 obstacles (circles, convex polygons and L-shaped
polygons) spread between the start and the goal. Some are placed on top of
their predecessor so that clusters of intersecting obstacles appear, and most
move along piecewise-linear pose schedules at walking speed.
"""
import numpy as np

from ..errors import AssumptionViolated, RobotInCollision
from .scenario import from_dict
from .simulate import simulate


def _convex(rng, size):
    k = int(rng.integers(3, 7))
    # jittered regular angles keep every gap below pi, so the origin stays inside
    ang = np.linspace(0, 2 * np.pi, k, endpoint=False) + rng.uniform(-0.4, 0.4, k) * np.pi / k
    r = size * rng.uniform(0.6, 1.0, k)
    return np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)


def _ell(rng, size):
    a, b = size, size * rng.uniform(0.35, 0.6)
    V = np.array([[0, 0], [2 * a, 0], [2 * a, b], [b, b], [b, 2 * a], [0, 2 * a]], float)
    return V - V.mean(axis=0)


def _shape(rng):
    u = rng.random()
    size = rng.uniform(0.25, 0.6)
    if u < 0.4:
        return {"type": "circle", "center": [0.0, 0.0], "radius": round(size, 4)}, size
    if u < 0.8:
        return {"type": "convex", "vertices": np.round(_convex(rng, size), 4).tolist()}, size
    return {"type": "polygon", "vertices": np.round(_ell(rng, size), 4).tolist()}, 1.5 * size


def _motion(rng, c, duration, speed):
    n = int(rng.integers(2, 4))
    T = np.sort(rng.uniform(0.0, duration, n - 1))
    rows = [[0.0, c[0], c[1], 0.0]]
    p, th = np.array(c, float), 0.0
    t_prev = 0.0
    for t in T:
        ang = rng.uniform(0, 2 * np.pi)
        step = speed * (t - t_prev) * rng.uniform(0.3, 1.0)
        p = p + step * np.array([np.cos(ang), np.sin(ang)])
        th += rng.uniform(-0.5, 0.5) * (t - t_prev)
        if t - t_prev > 1e-3:
            rows.append([float(t), *p.tolist(), th])
            t_prev = t
    return [[round(v, 4) for v in r] for r in rows]


def random_scenario_dict(seed, duration=2.0, max_speed=0.4):
    rng = np.random.default_rng(seed)
    L = rng.uniform(3.5, 5.5)
    goal = [round(L, 4), round(rng.uniform(-1.0, 1.0), 4)]
    radius = round(rng.uniform(0.1, 0.25), 4)
    obstacles = []
    centers = []
    for i in range(int(rng.integers(3, 9))):
        shape, size = _shape(rng)
        if centers and rng.random() < 0.4:
            # overlap the previous obstacle
            ang = rng.uniform(0, 2 * np.pi)
            c = centers[-1] + 0.8 * size * np.array([np.cos(ang), np.sin(ang)])
        else:
            # within reach of the robot during the short run
            c = np.array([rng.uniform(0.9, 3.2), rng.uniform(-1.8, 1.8)])
        centers.append(c)
        o = {"id": f"o{i}", "shape": shape}
        if rng.random() < 0.7:
            o["motion"] = _motion(rng, c, duration, max_speed)
        else:
            o["motion"] = [[0.0, round(c[0], 4), round(c[1], 4), 0.0]]
        obstacles.append(o)
    return {
        "name": f"random_{seed}",
        "description": "random sweep scenario",
        "duration": duration,
        "seed": int(seed),
        "goal": goal,
        "robot": {"state": [0.0, round(rng.uniform(-0.5, 0.5), 4), round(rng.uniform(-1.0, 1.0), 4)],
                  "radius": radius},
        "obstacles": obstacles,
    }


def random_scenario(seed, **kw):
    return from_dict(random_scenario_dict(seed, **kw))


def run_random(n, seed=0, max_draws=None, **sim_kw):
    """Simulate n random scenarios that satisfy the world assumptions.

    Draws whose robot starts in collision, or whose scripted obstacles move
    onto the robot, are rejected and replaced by the next seed. Returns
    (runs, rejected) where runs is a list of (scenario, SimResult).
    """
    runs, rejected = [], []
    draw = seed
    max_draws = 10 * n if max_draws is None else max_draws
    while len(runs) < n:
        if draw - seed >= max_draws:
            raise RuntimeError(f"only {len(runs)} of {n} random scenarios were admissible")
        sc = random_scenario(draw)
        try:
            runs.append((sc, simulate(sc, **sim_kw)))
        except (AssumptionViolated, RobotInCollision):
            rejected.append(draw)
        draw += 1
    return runs, rejected
