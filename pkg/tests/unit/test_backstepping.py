import math

import pytest

from prnn_abc import backstepping
from prnn_abc import plant
from prnn_abc.backstepping import ErrorCoords
from prnn_abc.config import Gains
from prnn_abc.config import PendulumParams
from prnn_abc.config import ReferenceSignal
from prnn_abc.exceptions import ControllabilityError
from prnn_abc.plant import PlantState

pytestmark = pytest.mark.backstepping

GAINS = Gains(c1=2.0, c2=3.0)


def test_error_coordinates_on_reference_vanish() -> None:
    e = backstepping.error_coords(PlantState(0.2, 0.5), (0.2, 0.5, 0.0), GAINS)
    assert e == ErrorCoords(S1=0.0, S2=0.0, gamma1=-0.0)


def test_error_coordinates_hand_values() -> None:
    e = backstepping.error_coords(PlantState(0.1, 0.0), (0.0, 0.0, 0.0), GAINS)
    assert e.S1 == pytest.approx(0.1)
    assert e.gamma1 == pytest.approx(-0.2)
    assert e.S2 == pytest.approx(0.2)


def test_lyapunov_functions() -> None:
    e = ErrorCoords(S1=0.3, S2=-0.4, gamma1=0.0)
    assert backstepping.lyapunov_v1(e) == pytest.approx(0.045)
    assert backstepping.lyapunov_v2(e) == pytest.approx(0.125)
    assert backstepping.ideal_v2_dot(e, GAINS) == pytest.approx(-2 * 0.09 - 3 * 0.16)


def test_exact_control_achieves_ideal_rate(prnn_params: PendulumParams) -> None:
    state = PlantState(0.25, -0.4)
    refs = (0.05, 0.1, -0.2)
    e = backstepping.error_coords(state, refs, GAINS)
    A = plant.drift_term(prnn_params, state)  # noqa: N806
    B = plant.gain_term(prnn_params, state)  # noqa: N806
    u = backstepping.exact_control(A, B, refs[2], e, GAINS)
    assert backstepping.tracking_term(A, refs[2], e, GAINS) + B * u == pytest.approx(
        0.0, abs=1e-12
    )
    assert backstepping.v2_dot(A, B, u, refs[2], e, GAINS) == pytest.approx(
        backstepping.ideal_v2_dot(e, GAINS), abs=1e-12
    )


def test_v2_dot_matches_chain_rule(prnn_params: PendulumParams) -> None:
    state = PlantState(-0.2, 0.3)
    refs = (0.0, 0.0, 0.0)
    e = backstepping.error_coords(state, refs, GAINS)
    A = plant.drift_term(prnn_params, state)  # noqa: N806
    B = plant.gain_term(prnn_params, state)  # noqa: N806
    u = 1.7
    s1_dot = e.S2 + e.gamma1
    expected = e.S1 * s1_dot + e.S2 * backstepping.s2_dot(A, B, u, 0.0, e, GAINS)
    assert backstepping.v2_dot(A, B, u, 0.0, e, GAINS) == pytest.approx(expected)


def test_gamma1_dot_closed_form() -> None:
    e = ErrorCoords(S1=0.1, S2=0.2, gamma1=-0.2)
    # d/dt(-c1 S1) with S1_dot = S2 - c1 S1
    assert backstepping.gamma1_dot(e, GAINS) == pytest.approx(-2.0 * (0.2 - 0.2))


def test_exact_control_refuses_vanishing_gain() -> None:
    e = ErrorCoords(S1=0.1, S2=0.1, gamma1=-0.2)
    with pytest.raises(ControllabilityError, match="t=2.000000"):
        backstepping.exact_control(1.0, 1e-12, 0.0, e, GAINS, t=2.0)


def test_reference_rejects_negative_time() -> None:
    with pytest.raises(ValueError, match="negative time"):
        backstepping.reference_at(ReferenceSignal(), -0.1)


def test_sinusoid_reference_derivatives() -> None:
    ref = ReferenceSignal(kind="sinusoid", setpoint=0.1, amplitude=0.2, frequency=0.5)
    x1d, dx1d, ddx1d = backstepping.reference_at(ref, 0.25)
    omega = math.pi
    assert x1d == pytest.approx(0.1 + 0.2 * math.sin(omega * 0.25))
    assert dx1d == pytest.approx(0.2 * omega * math.cos(omega * 0.25))
    assert ddx1d == pytest.approx(-0.2 * omega**2 * math.sin(omega * 0.25))
