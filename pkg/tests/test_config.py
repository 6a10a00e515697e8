import json

import numpy as np
import pytest

from starnav.config import DEFAULT, ControlConfig


def test_defaults():
    d = DEFAULT
    assert (d.workspace.rho_bar, d.workspace.gamma, d.workspace.max_time) == (0.3, 0.5, 0.05)
    assert (d.ocp.N, d.ocp.c_s, d.ocp.c_e, d.ocp.max_iter, d.ocp.max_time) == (5, 500.0, 100.0, 100, 0.02)
    assert np.array_equal(d.ocp.R_matrix, np.diag([250.0, 2.5]))
    assert (d.dt, d.degree, d.goal_tol, d.N) == (0.2, 10, 0.05, 5)
    assert (d.robot.v_min, d.robot.v_max, d.robot.w_max, d.robot.radius) == (0.0, 1.5, 1.5, 0.0)


def test_dump_is_canonical_and_round_trips():
    text = DEFAULT.dump()
    assert text.endswith("\n") and text == DEFAULT.dump()
    d = json.loads(text)
    assert list(d) == sorted(d)
    again = ControlConfig.from_dict(d)
    assert again == DEFAULT and again.dump() == text


def test_overrides_and_validation():
    c = ControlConfig.from_dict(dict(dt=0.1, workspace=dict(rho_bar=0.2), ocp=dict(R=[[10, 0], [0, 1]])))
    assert c.dt == 0.1 and c.workspace.rho_bar == 0.2 and c.workspace.gamma == 0.5
    assert c.ocp.R == ((10.0, 0.0), (0.0, 1.0))
    for bad in (dict(dt=0), dict(degree=0), dict(goal_tol=0), dict(speed=1), dict(ocp=dict(horizon=3))):
        with pytest.raises(ValueError):
            ControlConfig.from_dict(bad)
    assert ControlConfig.from_dict(None) == DEFAULT
