import dataclasses
import itertools
import math

import numpy as np
import pytest

from prnn_abc import plant
from prnn_abc import rls
from prnn_abc import sim
from prnn_abc.config import Scenario
from prnn_abc.exceptions import ConfigError
from prnn_abc.exceptions import ControllabilityError
from prnn_abc.exceptions import SimulationAbort
from prnn_abc.plant import PlantState

pytestmark = pytest.mark.simulation


@pytest.mark.prnn_scenario(**{"initial.x1": 0.0, "timing.duration": 1.0})
def test_on_reference_start_stays_put(prnn_scenario: Scenario) -> None:
    result = sim.run(prnn_scenario)
    assert result.summary.max_abs_s1 == 0.0
    assert all(r.u == 0.0 for r in result.trace)


def test_default_scenario_stabilises(prnn_scenario: Scenario) -> None:
    result = sim.run(prnn_scenario)
    bounds = prnn_scenario.bounds
    assert abs(result.trace[-1].x1) < 0.01
    assert result.summary.settled
    assert result.summary.steps == 500
    assert all(bounds.u_min <= r.u <= bounds.u_max for r in result.trace)
    assert result.summary.lyapunov_violations == 0


@pytest.mark.prnn_scenario(**{"timing.duration": 1.0})
def test_runs_are_deterministic(prnn_scenario: Scenario) -> None:
    assert sim.run(prnn_scenario).trace == sim.run(prnn_scenario).trace


@pytest.mark.prnn_scenario(bounds=1000.0, **{"timing.duration": 2.0})
def test_exact_baseline_decays_v2_at_ideal_rate(prnn_scenario: Scenario) -> None:
    trace = sim.run_exact_baseline(prnn_scenario).trace
    tolerance = 10.0 * prnn_scenario.timing.control_period + 1e-6
    assert max(sim.v2_rate_errors(trace)) <= tolerance
    assert all(now.V2 < before.V2 for before, now in itertools.pairwise(trace))
    assert sim.lyapunov_monitor(trace, prnn_scenario.gains) == []


@pytest.mark.prnn_scenario(
    **{"disturbance.kind": "constant", "disturbance.amplitude": 2.0}
)
def test_unmodelled_disturbance_trips_monitor(prnn_scenario: Scenario) -> None:
    result = sim.run(prnn_scenario)
    assert not result.summary.aborted
    assert result.summary.lyapunov_violations > 0
    assert all(r.d == 2.0 for r in result.trace)


@pytest.mark.prnn_scenario(bounds=0.1, **{"initial.x1": 1.0})
def test_abort_keeps_partial_result(prnn_scenario: Scenario) -> None:
    with pytest.raises(SimulationAbort) as err:
        sim.run(prnn_scenario)
    assert isinstance(err.value.cause, ControllabilityError)
    summary = err.value.result.summary
    assert summary.aborted
    assert "controllability lost" in summary.abort_reason
    assert 0 < summary.steps < prnn_scenario.timing.control_steps


@pytest.mark.prnn_scenario(adaptive=True, **{"timing.duration": 1.0})
def test_adaptive_run_starts_from_perturbed_prior(prnn_scenario: Scenario) -> None:
    result = sim.run(prnn_scenario)
    prior = rls.perturbed_theta(plant.theta_true(prnn_scenario.params), 0.3)
    first = result.trace[0]
    np.testing.assert_array_equal(
        [first.theta_hat_1, first.theta_hat_2, first.theta_hat_3], prior
    )
    np.testing.assert_array_equal(result.theta0, prior)
    assert result.regressors.shape == (len(result.measurements), 3)


def test_non_adaptive_run_reports_true_theta(prnn_scenario: Scenario) -> None:
    result = sim.run(sim.apply_override(prnn_scenario, "timing.duration", 0.1))
    assert result.summary.theta_error == 0.0
    assert result.theta0 is None


@pytest.mark.prnn_scenario(
    **{"reference.kind": "smoothstep", "reference.setpoint": 0.0, "timing.duration": 0.1}
)
def test_smoothstep_starts_at_initial_angle(prnn_scenario: Scenario) -> None:
    assert sim.resolve_reference(prnn_scenario).reference.start == 0.1
    assert sim.run(prnn_scenario).trace[0].S1 == 0.0


def test_empty_trace_summary(prnn_scenario: Scenario) -> None:
    summary = sim.summarize(prnn_scenario, [], aborted=True, reason="boom")
    assert summary.steps == 0
    assert summary.abort_reason == "boom"


def test_energy_drift_shrinks_with_step(prnn_scenario: Scenario) -> None:
    state = PlantState(0.3, 0.0)
    coarse = sim.energy_drift(prnn_scenario.params, state, 0.02, 2.0)
    fine = sim.energy_drift(prnn_scenario.params, state, 0.01, 2.0)
    assert fine < coarse
    assert sim.energy_drift(prnn_scenario.params, state, 0.001, 2.0) < 1e-8


def test_compare_traces(prnn_scenario: Scenario) -> None:
    short = sim.apply_override(prnn_scenario, "timing.duration", 0.2)
    trace = sim.run(short).trace
    assert sim.compare_traces(trace, trace) == 0.0
    assert sim.compare_traces(trace, []) == 0.0


def test_apply_override_aliases_and_paths(prnn_scenario: Scenario) -> None:
    assert sim.apply_override(prnn_scenario, "vartheta", 10.0).prnn.vartheta == 10.0
    assert sim.apply_override(prnn_scenario, "gains.c2", 3.0).gains.c2 == 3.0
    boxed = sim.apply_override(prnn_scenario, "bounds", 2.0).bounds
    assert (boxed.u_min, boxed.u_max) == (-2.0, 2.0)
    assert prnn_scenario.prnn.vartheta == 50.0


@pytest.mark.parametrize(
    ("key", "value", "message"),
    [
        ("gains.c3", 1.0, "unknown setting"),
        ("nowhere.c1", 1.0, "unknown setting"),
        ("c1", -1.0, "c1 > 0 required"),
        ("timing.plant_dt", math.pi, "integer multiple"),
    ],
)
def test_apply_override_rejects(
    prnn_scenario: Scenario, key: str, value: float, message: str
) -> None:
    with pytest.raises(ConfigError, match=message):
        sim.apply_override(prnn_scenario, key, value)


def test_faster_network_is_quasi_static(prnn_scenario: Scenario) -> None:
    slow = sim.run(prnn_scenario).summary
    fast = sim.run(
        sim.apply_override(
            sim.apply_override(prnn_scenario, "vartheta", 500.0),
            "prnn.inner_steps",
            200,
        )
    ).summary
    assert fast.max_abs_s1 == pytest.approx(slow.max_abs_s1, rel=1e-2)
    assert fast.tracking_ise == pytest.approx(slow.tracking_ise, rel=1e-2)


@pytest.mark.prnn_scenario(adaptive=True)
def test_adaptive_run_still_stabilises(prnn_scenario: Scenario) -> None:
    result = sim.run(prnn_scenario)
    assert abs(result.trace[-1].x1) < 0.01
    assert result.summary.settled
    assert not result.summary.nonphysical_estimate
    assert result.summary.theta_error < 0.5
    assert min(r.Q for r in result.trace) > 100.0


@pytest.mark.prnn_scenario(
    adaptive=True,
    **{
        "reference.kind": "sinusoid",
        "reference.amplitude": 0.3,
        "reference.frequency": 0.5,
        "timing.duration": 4.0,
    },
)
def test_adaptive_sinusoid_identifies_parameters(prnn_scenario: Scenario) -> None:
    result = sim.run(prnn_scenario)
    last = result.trace[-1]
    theta_hat = [last.theta_hat_1, last.theta_hat_2, last.theta_hat_3]
    batch = rls.batch_solve(
        result.regressors, result.measurements, result.theta0, 100.0 * np.eye(3)
    )
    assert not result.summary.aborted
    assert result.summary.theta_error < 0.05
    assert result.summary.max_abs_s1 < 0.3
    np.testing.assert_allclose(theta_hat, batch, atol=1e-6)


def _controller_with(
    scenario: Scenario, theta_hat: list[float], covariance: list[float]
) -> sim.PrnnAbcController:
    controller = sim.PrnnAbcController(scenario)
    controller.estimator = dataclasses.replace(
        controller.estimator,
        theta_hat=np.array(theta_hat),
        M=np.diag(covariance),
        k=100,
    )
    return controller


@pytest.mark.prnn_scenario(adaptive=True)
def test_collapsed_estimate_is_not_adopted(prnn_scenario: Scenario) -> None:
    controller = _controller_with(prnn_scenario, [0.117, 5e-4, 4e-4], [1e-4] * 3)
    prior = controller.estimate
    assert controller.current_estimate() is prior
    assert controller.model.l == pytest.approx(prior.l_hat)


@pytest.mark.prnn_scenario(adaptive=True)
def test_unexcited_estimate_is_not_adopted(prnn_scenario: Scenario) -> None:
    truth = list(plant.theta_true(prnn_scenario.params))
    controller = _controller_with(prnn_scenario, truth, [1e-4, 1e-4, 100.0])
    assert controller.current_estimate() is controller.estimate
    assert controller.model.l != pytest.approx(0.5)


@pytest.mark.prnn_scenario(adaptive=True)
def test_excited_estimate_is_adopted(prnn_scenario: Scenario) -> None:
    truth = list(plant.theta_true(prnn_scenario.params))
    controller = _controller_with(prnn_scenario, truth, [1e-4] * 3)
    assert controller.current_estimate().l_hat == pytest.approx(0.5)
    assert controller.model.l == pytest.approx(0.5)
    assert controller.model.m_c == pytest.approx(1.0)


@pytest.mark.prnn_scenario(
    **{
        "disturbance.kind": "bounded-uniform-random",
        "disturbance.amplitude": 0.5,
        "timing.duration": 0.5,
    }
)
def test_run_seed_keys_random_disturbance(prnn_scenario: Scenario) -> None:
    one = sim.run(sim.apply_override(prnn_scenario, "seed", 1)).trace
    two = sim.run(sim.apply_override(prnn_scenario, "seed", 2)).trace
    again = sim.run(sim.apply_override(prnn_scenario, "seed", 1)).trace
    assert [r.d for r in one] != [r.d for r in two]
    assert one != two
    assert one == again


@pytest.mark.parametrize("adaptive", [False, True])
def test_network_rate_matches_recorded_rate(
    prnn_scenario: Scenario, adaptive: bool
) -> None:
    scenario = sim.apply_override(
        sim.apply_override(prnn_scenario, "adaptive", adaptive), "timing.duration", 1.0
    )
    baseline = sim.run_exact_baseline(scenario).trace
    for record in [*sim.run(scenario).trace, *baseline]:
        assert sim.network_v2_rate(record, scenario.gains) == pytest.approx(
            record.V2_dot_predicted, rel=1e-9, abs=1e-12
        )


@pytest.mark.prnn_scenario(**{"prnn.phi0": 10.0, "timing.duration": 1.0})
def test_monitor_reads_network_term(prnn_scenario: Scenario) -> None:
    trace = sim.run(prnn_scenario).trace
    assert any(abs(r.phi_term) > 1e-9 for r in trace)
    after = 5.0 / prnn_scenario.prnn.vartheta
    assert sim.lyapunov_monitor(trace, prnn_scenario.gains, after=after) == []
    trace[50] = dataclasses.replace(trace[50], phi_term=trace[50].phi_term - 1e3)
    violations = sim.lyapunov_monitor(trace, prnn_scenario.gains, after=after)
    assert [v.t for v in violations] == [trace[50].t]
