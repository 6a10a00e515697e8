"""Discrete-time robot models."""
from dataclasses import dataclass, field

import numpy as np

from .errors import InputOutOfBounds
from .geometry._vec import wrap_angle


def unicycle_step(x, u, dt, bounds=((0.0, 1.5), (-1.5, 1.5)), check=True):
    """Euler step of the unicycle: x + [v cos th, v sin th, w] * dt, angle re-wrapped."""
    x = np.asarray(x, dtype=float)
    v, w = float(u[0]), float(u[1])
    if check:
        (vlo, vhi), (wlo, whi) = bounds
        if not (vlo - 1e-12 <= v <= vhi + 1e-12 and wlo - 1e-12 <= w <= whi + 1e-12):
            raise InputOutOfBounds(f"input ({v:.6g}, {w:.6g}) outside the admissible box")
    th = x[2]
    return np.array([x[0] + v * np.cos(th) * dt, x[1] + v * np.sin(th) * dt, float(wrap_angle(th + w * dt))])


@dataclass(frozen=True, eq=False)
class RobotModel:
    """Discrete model x+ = f(x, u), p = h(x) with box inputs and an idle input."""

    state_dim: int
    input_dim: int
    step_fn: object
    output_fn: object
    input_lb: np.ndarray
    input_ub: np.ndarray
    idle_input: np.ndarray
    radius: float = 0.0
    dt: float = 0.2
    name: str = "custom"
    state_lb: np.ndarray = None
    state_ub: np.ndarray = None
    _dp: float = field(default=None, repr=False)

    def step(self, x, u, check=True):
        u = np.asarray(u, dtype=float)
        if check and (np.any(u < self.input_lb - 1e-12) or np.any(u > self.input_ub + 1e-12)):
            raise InputOutOfBounds(f"input {u.tolist()} outside the admissible box")
        return self.step_fn(np.asarray(x, dtype=float), u)

    def output(self, x):
        return self.output_fn(np.asarray(x, dtype=float))

    @property
    def dp_max(self):
        return dp_max(self)


class Unicycle(RobotModel):
    """Unicycle with state (px, py, theta) and input (v, w)."""


def unicycle(v_max=1.5, w_max=1.5, dt=0.2, radius=0.0, v_min=0.0):
    lb = np.array([v_min, -w_max])
    ub = np.array([v_max, w_max])
    bounds = ((v_min, v_max), (-w_max, w_max))
    return Unicycle(
        3, 2,
        lambda x, u: unicycle_step(x, u, dt, bounds, check=False),
        lambda x: x[:2].copy(),
        lb, ub, np.zeros(2), radius, dt, "unicycle",
    )


def dp_max(model, samples=64):
    """Largest one-sample displacement of the output over the input box.

    Exact for the unicycle (v_max * dt); other models use a dense grid over
    inputs and headings plus a 1 % safety factor.
    """
    if isinstance(model, Unicycle):
        v = max(abs(model.input_lb[0]), abs(model.input_ub[0]))
        d = v * model.dt
    else:
        grids = [np.linspace(lo, hi, 9) for lo, hi in zip(model.input_lb, model.input_ub)]
        U = np.stack(np.meshgrid(*grids), axis=-1).reshape(-1, model.input_dim)
        rng = np.random.default_rng(0)
        lo = np.full(model.state_dim, -1.0) if model.state_lb is None else model.state_lb
        hi = np.full(model.state_dim, 1.0) if model.state_ub is None else model.state_ub
        X = rng.uniform(lo, hi, size=(samples, model.state_dim))
        if model.state_dim >= 3:
            X[:, 2] = np.linspace(-np.pi, np.pi, samples)
        d = max(np.hypot(*(model.output(model.step(x, u, check=False)) - model.output(x))[:2]) for x in X for u in U)
        d *= 1.01
    if d <= 0.0:
        raise ValueError("model cannot move: the displacement bound is zero")
    return float(d)
