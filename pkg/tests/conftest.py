import math

import pytest

from vrrjump.engine.models.kinematics import LegModel
from vrrjump.engine.models.mechanism import FrrParams, VrrParams
from vrrjump.engine.models.motor import default_motor
from vrrjump.engine.optimizer import SearchBox
from vrrjump.engine.sim import SimConfig

DEEP_CROUCH = -2.618


@pytest.fixture
def literal_leg():
    return LegModel.uniform(0.45, 0.45, 2.5, 5.0, 20.0)


@pytest.fixture
def leg():
    """Reference leg with the hip-height CoM amplitude."""
    return LegModel.uniform(0.45, 0.45, 2.5, 5.0, 20.0, jacobian_mode="hip")


@pytest.fixture
def geometric_leg():
    return LegModel.uniform(0.45, 0.45, 2.5, 5.0, 20.0, jacobian_mode="geometric")


@pytest.fixture
def motor():
    return default_motor()


@pytest.fixture
def vrr():
    return VrrParams(r=0.047, S0=0.150)


@pytest.fixture
def frr():
    return FrrParams(22.0)


@pytest.fixture
def fast_cfg():
    return SimConfig(q2_init=DEEP_CROUCH, dt=1e-3, t_max=1.0)


@pytest.fixture
def small_box():
    # 3 x 3 x 3 VRR grid around the reference optimum, 3 FRR ratios
    return SearchBox(
        r_range=(0.045, 0.049, 0.002),
        s0_range=(0.140, 0.160, 0.010),
        dtheta_range=(math.radians(-1), math.radians(1), math.radians(1)),
        frr_range=(20.0, 24.0, 2.0),
    )
