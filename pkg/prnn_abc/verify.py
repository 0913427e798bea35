"""Desk scale verification suites.

Each suite exercises one property of the controller with fixed seeds and
returns a `SuiteResult` carrying its pass flag and the worst case residual it
saw, so the command line can print a compact report.
"""

from __future__ import annotations

import logging
import math
import typing
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import plant
from . import prnn
from . import qp
from . import rls
from . import sim
from .config import DisturbanceSpec
from .config import PrnnConfig
from .config import Scenario
from .config import default_scenario
from .const import SuiteName
from .const import SupportedSuites
from .exceptions import SimulationAbort
from .plant import PlantState
from .utils import check_suite

log = logging.getLogger(__name__)

ORACLE_SAMPLES = 1000
ORACLE_TOLERANCE = 1e-6
DECAY_RATES = (1.0, 10.0, 100.0)
DECAY_TOLERANCE = 1e-3
BACKSTEPPING_GAINS = ((1.0, 1.0), (2.0, 2.0), (3.0, 3.0))
CONSISTENCY_WEIGHTS = (1.0, 0.1, 0.01, 0.001)
CONSISTENCY_LIMIT = 1e-2
RLS_TOLERANCE = 0.01
BATCH_TOLERANCE = 1e-6
GRADIENT_SAMPLES = 1000
GRADIENT_TOLERANCE = 1e-8
PROJECTION_PAIRS = 100_000
RK4_STEPS = (0.04, 0.02, 0.01)
RK4_RATIO = (13.0, 19.0)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    worst: float
    detail: str

    def __str__(self: SuiteResult) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.name:<22} worst={self.worst:.3e}  {self.detail}"


def _variant(base: Scenario, **overrides: typing.Any) -> Scenario:
    """`base` with dotted-path overrides, e.g. ``_variant(s, **{"gains.c1": 3})``."""
    scenario = base
    for key, value in overrides.items():
        scenario = sim.apply_override(scenario, key, value)
    return scenario


def prnn_oracle_suite(seed: int, scenario: Scenario) -> SuiteResult:  # noqa: ARG001
    """Random frozen QPs relaxed to equilibrium against the clamp formula."""
    rng = np.random.default_rng(seed)
    cfg = PrnnConfig()
    worst = 0.0
    for _ in range(ORACLE_SAMPLES):
        lo, hi = np.sort(rng.uniform(-50.0, 50.0, size=2))
        if hi - lo < 1e-3:
            hi = lo + 1.0
        q = qp.QpCoefficients(
            P=float(rng.uniform(-100.0, 100.0)),
            Q=float(10.0 ** rng.uniform(-2.0, 2.0)),
            u_min=float(lo),
            u_max=float(hi),
        )
        start = prnn.initial_state(float(rng.uniform(-100.0, 100.0)), q)
        relaxed = prnn.relax_to_equilibrium(start, q, cfg)
        worst = max(worst, abs(relaxed.state.u - qp.solve_oracle(q)))
    return SuiteResult(
        SuiteName.PRNN_ORACLE,
        worst < ORACLE_TOLERANCE,
        worst,
        f"{ORACLE_SAMPLES} random QPs, |u - clamp(-P/Q)| < {ORACLE_TOLERANCE:g}",
    )


def interior_decay_suite(seed: int, scenario: Scenario) -> SuiteResult:  # noqa: ARG001
    """Fitted exponential rate of phi with inactive bounds equals vartheta."""
    q = qp.QpCoefficients(P=1.0, Q=2.0, u_min=-1e6, u_max=1e6)
    worst = 0.0
    settle_times = []
    for rate in DECAY_RATES:
        cfg = PrnnConfig(vartheta=rate, tol=1e-6)
        h = 0.01 / rate
        steps = round(5.0 / (rate * h))
        states = list(prnn.iterate(prnn.initial_state(1.0, q), q, cfg, h, steps))
        times = h * np.arange(1, steps + 1)
        slope = np.polyfit(times, np.log(np.abs([s.phi for s in states])), 1)[0]
        worst = max(worst, abs(-slope - rate) / rate)
        relaxed = prnn.relax_to_equilibrium(prnn.initial_state(1.0, q), q, cfg)
        settle_times.append(relaxed.elapsed)
    decreasing = all(a > b for a, b in zip(settle_times, settle_times[1:]))
    return SuiteResult(
        SuiteName.INTERIOR_DECAY,
        worst < DECAY_TOLERANCE and decreasing,
        worst,
        "time to 1e-6: " + ", ".join(f"{t:.4f}s" for t in settle_times),
    )


def backstepping_lyapunov_suite(seed: int, scenario: Scenario) -> SuiteResult:  # noqa: ARG001
    """Exact feedback runs decay V2 at -c1 S1^2 - c2 S2^2."""
    base = _variant(default_scenario(), bounds=1000.0, **{"timing.duration": 2.0})
    references = (
        {"reference.kind": "constant"},
        {
            "reference.kind": "sinusoid",
            "reference.amplitude": 0.05,
            "reference.frequency": 0.5,
        },
    )
    tolerance = 10.0 * base.timing.control_period + 1e-6
    worst = 0.0
    for c1, c2 in BACKSTEPPING_GAINS:
        for ref in references:
            case = _variant(base, **{"gains.c1": c1, "gains.c2": c2}, **ref)
            errors = sim.v2_rate_errors(sim.run_exact_baseline(case).trace)
            worst = max(worst, *errors)
    return SuiteResult(
        SuiteName.BACKSTEPPING,
        worst <= tolerance,
        worst,
        f"{len(BACKSTEPPING_GAINS) * len(references)} runs, tolerance {tolerance:g}",
    )


def closed_loop_suite(seed: int, scenario: Scenario) -> SuiteResult:  # noqa: ARG001
    """Default stabilisation: settles, respects the box, monitor stays quiet."""
    case = default_scenario()
    try:
        result = sim.run(case)
    except SimulationAbort as err:
        return SuiteResult(SuiteName.CLOSED_LOOP, False, math.inf, str(err))
    bounds = case.bounds
    in_box = all(bounds.u_min <= r.u <= bounds.u_max for r in result.trace)
    final = abs(result.trace[-1].x1)
    violations = sim.lyapunov_monitor(
        result.trace, case.gains, after=5.0 / case.prnn.vartheta
    )
    return SuiteResult(
        SuiteName.CLOSED_LOOP,
        final < 0.01 and result.summary.settled and in_box and not violations,
        final,
        f"settled at {result.summary.settling_time:.2f}s, "
        f"{len(violations)} monitor violations",
    )


def r_consistency_suite(seed: int, scenario: Scenario) -> SuiteResult:  # noqa: ARG001
    """PRNN control approaches the exact law as R shrinks."""
    base = _variant(default_scenario(), bounds=1000.0)
    gaps = []
    for weight in CONSISTENCY_WEIGHTS:
        case = _variant(base, **{"weights.R": weight})
        gaps.append(
            sim.compare_traces(sim.run(case).trace, sim.run_exact_baseline(case).trace)
        )
    decreasing = all(a > b for a, b in zip(gaps, gaps[1:]))
    return SuiteResult(
        SuiteName.R_CONSISTENCY,
        decreasing and gaps[-1] < CONSISTENCY_LIMIT,
        gaps[-1],
        "max|u - u_exact|: "
        + ", ".join(f"R={w:g}:{g:.2e}" for w, g in zip(CONSISTENCY_WEIGHTS, gaps)),
    )


def rls_suite(seed: int, scenario: Scenario) -> SuiteResult:  # noqa: ARG001
    """Adaptive run on an exciting reference identifies theta and agrees with
    the batch solution of the same samples."""
    case = _variant(
        default_scenario(),
        adaptive=True,
        **{
            "reference.kind": "sinusoid",
            "reference.amplitude": 0.3,
            "reference.frequency": 0.5,
            "timing.duration": 10.0,
        },
    )
    try:
        result = sim.run(case)
    except SimulationAbort as err:
        return SuiteResult(SuiteName.RLS, False, math.inf, str(err))
    last = result.trace[-1]
    theta_hat = np.array([last.theta_hat_1, last.theta_hat_2, last.theta_hat_3])
    error = rls.relative_error(theta_hat, plant.theta_true(case.params))
    batch = rls.batch_solve(
        result.regressors,
        result.measurements,
        result.theta0,
        case.rls.initial_covariance * np.eye(3),
    )
    gap = float(np.max(np.abs(batch - theta_hat)))
    return SuiteResult(
        SuiteName.RLS,
        error < RLS_TOLERANCE and gap < BATCH_TOLERANCE,
        error,
        f"batch gap {gap:.2e} over {len(result.measurements)} samples",
    )


def saturation_suite(seed: int, scenario: Scenario) -> SuiteResult:  # noqa: ARG001
    """Tight bounds: the control rides a bound yet the pendulum settles."""
    case = _variant(
        default_scenario(), bounds=2.0, **{"initial.x1": 0.15, "timing.duration": 10.0}
    )
    try:
        result = sim.run(case)
    except SimulationAbort as err:
        return SuiteResult(SuiteName.SATURATION, False, math.inf, str(err))
    overshoot = max(max(abs(r.u) for r in result.trace) - 2.0, 0.0)
    final = abs(result.trace[-1].x1)
    fraction = result.summary.saturation_fraction
    return SuiteResult(
        SuiteName.SATURATION,
        fraction > 0 and overshoot == 0 and final < 0.02,
        final,
        f"saturated {fraction:.1%} of steps",
    )


def _rk4_errors(case: Scenario) -> list[float]:
    params = case.params
    state0 = PlantState(0.01, 0.0)
    duration = 1.0

    def rhs(_t: float, x: typing.Sequence[float]) -> tuple[float, float]:
        return plant.derivatives(params, PlantState(x[0], x[1]), 0.0, 0.0)

    ref = solve_ivp(
        rhs,
        (0.0, duration),
        [state0.x1, state0.x2],
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
    )
    target = ref.y[:, -1]
    quiet = DisturbanceSpec()
    errors = []
    for dt in RK4_STEPS:
        state = state0
        for k in range(round(duration / dt)):
            state = plant.step(params, state, 0.0, quiet, k * dt, dt)
        errors.append(float(np.hypot(state.x1 - target[0], state.x2 - target[1])))
    return errors


def hygiene_suite(seed: int, scenario: Scenario) -> SuiteResult:  # noqa: ARG001
    """Gradient against finite differences, RK4 order, projection contraction."""
    rng = np.random.default_rng(seed)
    gradient_gap = 0.0
    for _ in range(GRADIENT_SAMPLES):
        q = qp.QpCoefficients(
            P=float(rng.uniform(-100.0, 100.0)),
            Q=float(10.0 ** rng.uniform(-2.0, 2.0)),
            u_min=-1.0,
            u_max=1.0,
        )
        u = float(rng.uniform(-10.0, 10.0))
        h = 1e-2 * max(1.0, abs(u))
        central = (qp.cost(q, u + h) - qp.cost(q, u - h)) / (2.0 * h)
        exact = qp.gradient(q, u)
        gradient_gap = max(gradient_gap, abs(central - exact) / max(1.0, abs(exact)))

    errors = _rk4_errors(scenario)
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    order_ok = all(RK4_RATIO[0] <= r <= RK4_RATIO[1] for r in ratios)

    pairs = rng.uniform(-100.0, 100.0, size=(PROJECTION_PAIRS, 2))
    boxes = np.sort(rng.uniform(-50.0, 50.0, size=(PROJECTION_PAIRS, 2)), axis=1)
    expansion = 0.0
    for (a, b), (lo, hi) in zip(pairs.tolist(), boxes.tolist()):
        if not lo < hi:
            continue
        gap = abs(prnn.project(a, lo, hi) - prnn.project(b, lo, hi)) - abs(a - b)
        expansion = max(expansion, gap)

    return SuiteResult(
        SuiteName.HYGIENE,
        gradient_gap < GRADIENT_TOLERANCE and order_ok and expansion <= 0.0,
        gradient_gap,
        "rk4 error ratios " + ", ".join(f"{r:.2f}" for r in ratios),
    )


def lyapunov_suite(seed: int, scenario: Scenario) -> SuiteResult:  # noqa: ARG001
    """The closed loop monitor on the given scenario, after the network transient."""
    try:
        result = sim.run(scenario)
    except SimulationAbort as err:
        return SuiteResult(SuiteName.LYAPUNOV, False, math.inf, str(err))
    violations = sim.lyapunov_monitor(
        result.trace, scenario.gains, after=5.0 / scenario.prnn.vartheta
    )
    worst = max((v.excess for v in violations), default=0.0)
    return SuiteResult(
        SuiteName.LYAPUNOV,
        not violations,
        worst,
        f"{len(violations)} violations on {scenario.name}",
    )


SUITE_FACTORY: dict[str, typing.Callable[[int, Scenario], SuiteResult]] = {
    SuiteName.PRNN_ORACLE: prnn_oracle_suite,
    SuiteName.INTERIOR_DECAY: interior_decay_suite,
    SuiteName.BACKSTEPPING: backstepping_lyapunov_suite,
    SuiteName.CLOSED_LOOP: closed_loop_suite,
    SuiteName.R_CONSISTENCY: r_consistency_suite,
    SuiteName.RLS: rls_suite,
    SuiteName.SATURATION: saturation_suite,
    SuiteName.HYGIENE: hygiene_suite,
    SuiteName.LYAPUNOV: lyapunov_suite,
}


def run_suites(
    names: typing.Sequence[str] | None = None,
    seed: int = 0,
    scenario: Scenario | None = None,
) -> list[SuiteResult]:
    """Run the named suites, all of them by default, in their listed order.

    :param scenario: Scenario for the suites that take one; the bundled
        default otherwise.
    """
    names = SupportedSuites if not names else names
    for name in names:
        check_suite(name)
    scenario = default_scenario() if scenario is None else scenario
    results = []
    for name in names:
        log.debug("running suite %s", name)
        result = SUITE_FACTORY[name](seed, scenario)
        log.debug("%s", result)
        results.append(result)
    return results
