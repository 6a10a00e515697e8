"""Default control configuration and its canonical dump."""
import json
from dataclasses import asdict, dataclass, field, fields

from .ocp import OcpParams
from .starworld import WorkspaceParams


@dataclass(frozen=True)
class RobotParams:
    v_min: float = 0.0
    v_max: float = 1.5
    w_max: float = 1.5
    radius: float = 0.0


@dataclass(frozen=True)
class ControlConfig:
    dt: float = 0.2
    degree: int = 10
    path_max_time: float = 0.02
    goal_tol: float = 0.05
    workspace: WorkspaceParams = field(default_factory=WorkspaceParams)
    ocp: OcpParams = field(default_factory=OcpParams)
    robot: RobotParams = field(default_factory=RobotParams)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.degree < 1:
            raise ValueError("polynomial degree must be at least 1")
        if not self.goal_tol > 0:
            raise ValueError("goal_tol must be positive")

    @property
    def N(self):
        return self.ocp.N

    def to_dict(self):
        d = asdict(self)
        d["ocp"]["R"] = [list(r) for r in self.ocp.R]
        return d

    def dump(self):
        """Canonical JSON text: sorted keys, fixed separators, trailing newline."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown control keys: {sorted(unknown)}")
        sub = {}
        for key, kind in (("workspace", WorkspaceParams), ("ocp", OcpParams), ("robot", RobotParams)):
            vals = dict(d.pop(key, None) or {})
            bad = set(vals) - {f.name for f in fields(kind)}
            if bad:
                raise ValueError(f"unknown {key} keys: {sorted(bad)}")
            if key == "ocp" and "R" in vals:
                vals["R"] = tuple(tuple(float(x) for x in row) for row in vals["R"])
            sub[key] = kind(**vals)
        return cls(**d, **sub)


DEFAULT = ControlConfig()
