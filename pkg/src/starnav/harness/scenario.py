"""Scenario files: obstacles with scripted motion, robot, goal and control settings.

Schema (YAML)::

    name: str
    description: str                 # optional
    duration: float                  # seconds
    seed: int                        # optional, default 0
    goal: [x, y]
    robot:
      state: [px, py, theta]
      radius: float                  # robot disc radius, obstacles are dilated by it
      v_max, w_max, v_min: float     # optional input bounds
    control:                         # optional overrides of the defaults
      dt, degree, path_max_time, goal_tol: float
      workspace: {rho_bar, gamma, max_time}
      ocp: {N, c_s, c_e, R, tunnel_mode, tunnel_radius, max_iter, max_time}
    obstacles:
      - id: str
        shape: {type: circle, center: [x, y], radius: r}
             | {type: convex, vertices: [[x, y], ...]}
             | {type: polygon, vertices: [[x, y], ...]}
        motion: [[t, x, y, theta], ...]   # optional pose waypoints of the
                                          # shape frame, linear in between,
                                          # held outside the listed times
    regions:                         # optional named boxes [xmin, ymin, xmax, ymax]
      name: [..]
    snapshots: [t, ...]              # optional plot times
"""
import copy
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from ..config import ControlConfig
from ..errors import GeometryError
from ..geometry import Circle, ConvexPolygon, Polygon, inflate


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Motion:
    """Piecewise-linear pose schedule; rows are (t, x, y, theta)."""

    waypoints: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.waypoints, dtype=float).reshape(-1, 4)
        if len(W) == 0:
            W = np.zeros((1, 4))
        if np.any(np.diff(W[:, 0]) <= 0):
            raise ScenarioError("motion waypoint times must increase")
        object.__setattr__(self, "waypoints", W)

    def pose(self, t):
        W = self.waypoints
        return tuple(float(np.interp(t, W[:, 0], W[:, i])) for i in (1, 2, 3))

    @property
    def static(self):
        return len(self.waypoints) == 1 or np.all(self.waypoints[:, 1:] == self.waypoints[0, 1:])


@dataclass(frozen=True, eq=False)
class ScriptedObstacle:
    shape: object
    motion: Motion
    id: str = ""

    def at(self, t):
        x, y, th = self.motion.pose(t)
        if x == 0.0 and y == 0.0 and th == 0.0:
            return self.shape
        return self.shape.transformed(x, y, th)


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    obstacles: list
    x0: np.ndarray
    goal: np.ndarray
    control: ControlConfig
    duration: float
    seed: int = 0
    description: str = ""
    regions: dict = field(default_factory=dict)
    snapshots: tuple = ()
    source: dict = field(default=None, repr=False)

    @property
    def robot_radius(self):
        return self.control.robot.radius

    def obstacles_at(self, t):
        """Raw obstacle regions at time t."""
        return [o.at(t) for o in self.obstacles]

    def world_at(self, t):
        """Obstacles dilated by the robot radius at time t."""
        return dilate_world(self.obstacles_at(t), self.robot_radius)

    def with_control(self, **kw):
        return replace(self, control=replace(self.control, **kw))


def dilate_world(raw_obstacles, a):
    """Minkowski sum of every obstacle with the closed disc of radius a."""
    if a < 0:
        raise ValueError("robot radius must be non-negative")
    return [inflate(o, a) for o in raw_obstacles]


def _shape(d, oid):
    kind = d.get("type")
    try:
        if kind == "circle":
            return Circle(d["center"], d["radius"], oid)
        if kind == "convex":
            return ConvexPolygon(d["vertices"], oid)
        if kind == "polygon":
            return Polygon(d["vertices"], oid)
    except KeyError as e:
        raise ScenarioError(f"obstacle {oid!r}: missing field {e.args[0]!r}") from None
    except GeometryError as e:
        raise ScenarioError(f"obstacle {oid!r}: {e}") from None
    raise ScenarioError(f"obstacle {oid!r}: unknown shape type {kind!r}")


def from_dict(d):
    d = copy.deepcopy(d)
    src = copy.deepcopy(d)
    for key in ("name", "duration", "goal", "robot"):
        if key not in d:
            raise ScenarioError(f"missing scenario field {key!r}")
    rob = dict(d["robot"])
    if "state" not in rob:
        raise ScenarioError("robot.state is required")
    x0 = np.asarray(rob.pop("state"), dtype=float)
    if x0.shape != (3,):
        raise ScenarioError("robot.state must be [px, py, theta]")
    ctrl = dict(d.get("control") or {})
    ctrl["robot"] = {**(ctrl.get("robot") or {}), **rob}
    try:
        control = ControlConfig.from_dict(ctrl)
    except (TypeError, ValueError) as e:
        raise ScenarioError(str(e)) from None
    obstacles = []
    for i, o in enumerate(d.get("obstacles") or []):
        oid = str(o.get("id", f"o{i}"))
        if "shape" not in o:
            raise ScenarioError(f"obstacle {oid!r}: missing shape")
        obstacles.append(ScriptedObstacle(_shape(o["shape"], oid), Motion(o.get("motion") or []), oid))
    ids = [o.id for o in obstacles]
    if len(set(ids)) != len(ids):
        raise ScenarioError("obstacle ids must be unique")
    regions = {k: tuple(float(x) for x in v) for k, v in (d.get("regions") or {}).items()}
    for k, v in regions.items():
        if len(v) != 4 or v[0] >= v[2] or v[1] >= v[3]:
            raise ScenarioError(f"region {k!r} must be [xmin, ymin, xmax, ymax]")
    duration = float(d["duration"])
    if not duration > 0:
        raise ScenarioError("duration must be positive")
    goal = np.asarray(d["goal"], dtype=float)
    if goal.shape != (2,):
        raise ScenarioError("goal must be [x, y]")
    return Scenario(str(d["name"]), obstacles, x0, goal, control, duration, int(d.get("seed", 0)),
                    str(d.get("description", "")), regions, tuple(float(t) for t in d.get("snapshots") or ()), src)


def load_scenario(path):
    """Scenario from a YAML file, or by name from the shipped set."""
    p = Path(path)
    if not p.exists():
        shipped = SCENARIO_DIR / f"{path}.yaml"
        if not shipped.exists():
            raise FileNotFoundError(f"no scenario file or shipped scenario named {path!r}")
        p = shipped
    with open(p) as fh:
        return from_dict(yaml.safe_load(fh))


SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def shipped_scenarios():
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.yaml"))

