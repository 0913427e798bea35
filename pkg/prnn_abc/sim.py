"""Closed loop orchestration of plant, backstepping, QP, network and estimator.

Per control period the loop reads the state, forms references and error
coordinates, updates the estimator (adaptive runs), assembles the QP, relaxes
the network, clamps the output and holds it on the plant for the period.
"""

from __future__ import annotations

import concurrent.futures
import itertools
import logging
import math
import typing
from dataclasses import dataclass
from dataclasses import field
from dataclasses import fields
from dataclasses import replace

import numpy as np

from . import backstepping
from . import plant
from . import prnn
from . import qp
from . import rls
from .config import Bounds
from .config import DisturbanceSpec
from .config import Gains
from .config import PendulumParams
from .config import Scenario
from .config import scenario_from_mapping
from .const import ReferenceKind
from .const import SweepAliases
from .exceptions import ConfigError
from .exceptions import IntegrationBlowupError
from .exceptions import NotIdentifiableError
from .exceptions import PrnnAbcError
from .exceptions import SimulationAbort
from .plant import PlantState
from .types import FloatArray
from .types import Grid
from .utils import first_time_after_which
from .utils import resolve_workers

log = logging.getLogger(__name__)

PRNN_SETTLE_TOLERANCE = 1e-6


@dataclass(frozen=True, slots=True)
class TraceRecord:
    t: float
    x1: float
    x2: float
    x1d: float
    dx1d: float
    ddx1d: float
    S1: float
    S2: float
    u: float
    u_raw: float
    phi: float
    A: float
    B: float
    P: float
    Q: float
    V2: float
    V2_dot_ideal: float
    V2_dot_predicted: float
    phi_term: float
    prnn_residual: float
    theta_hat_1: float
    theta_hat_2: float
    theta_hat_3: float
    condition_residual: float
    d: float


TRACE_FIELDS = tuple(f.name for f in fields(TraceRecord))


@dataclass(frozen=True, slots=True)
class RunSummary:
    name: str
    steps: int
    settling_time: float
    settled: bool
    max_abs_s1: float
    control_energy: float
    tracking_ise: float
    saturation_fraction: float
    theta_error: float
    prnn_settle_time: float
    max_condition_residual: float
    lyapunov_violations: int
    nonphysical_estimate: bool
    aborted: bool
    abort_reason: str = ""


SUMMARY_FIELDS = tuple(f.name for f in fields(RunSummary))


@dataclass(frozen=True)
class SimulationResult:
    trace: list[TraceRecord]
    summary: RunSummary
    regressors: FloatArray = field(default_factory=lambda: np.zeros((0, 3)))
    measurements: FloatArray = field(default_factory=lambda: np.zeros(0))
    theta0: FloatArray | None = None


@dataclass(frozen=True, slots=True)
class Violation:
    t: float
    observed: float
    predicted: float

    @property
    def excess(self: Violation) -> float:
        return self.observed - self.predicted


@dataclass(frozen=True, slots=True)
class ControlOutput:
    u_raw: float
    phi: float
    P: float
    Q: float
    residual: float


@dataclass(frozen=True)
class SweepRow:
    coords: dict[str, float]
    summary: RunSummary | None
    status: str


class Controller(typing.Protocol):
    clamps: bool
    nonphysical: bool

    def control(
        self: Controller,
        t: float,
        state: PlantState,
        ddx1d: float,
        e: backstepping.ErrorCoords,
        A: float,  # noqa: N803
        B: float,  # noqa: N803
    ) -> ControlOutput: ...

    def applied(self: Controller, state: PlantState, u: float) -> None: ...

    def theta(self: Controller) -> FloatArray: ...


class PrnnAbcController:
    """The network based controller, optionally on an RLS identified model."""

    clamps = True

    def __init__(self: PrnnAbcController, scenario: Scenario) -> None:
        self.scenario = scenario
        self.period = scenario.timing.control_period
        self.network: prnn.PrnnState | None = None
        self.nonphysical = False
        self.theta_true = plant.theta_true(scenario.params)
        self.estimator: rls.RlsState | None = None
        self.estimate: rls.EstimatedPhysical | None = None
        self.model = scenario.params
        self.previous: tuple[PlantState, float] | None = None
        self.pis: list[FloatArray] = []
        self.ys: list[float] = []
        if scenario.adaptive:
            opts = scenario.rls
            theta0 = rls.perturbed_theta(self.theta_true, opts.initial_perturbation)
            self.estimator = rls.initial_state(theta0, opts.initial_covariance)
            self.estimate = rls.extract_physical(theta0)
            self.model = self.estimate.to_params(scenario.params.g)

    def _adapt(self: PrnnAbcController, state: PlantState) -> None:
        if self.estimator is None or self.previous is None:
            return
        before, u = self.previous
        y = (state.x2 - before.x2) / self.period
        midpoint = PlantState(0.5 * (before.x1 + state.x1), 0.5 * (before.x2 + state.x2))
        pi = rls.regressor(midpoint, y, u, self.scenario.params.g)
        threshold = self.scenario.rls.excitation_threshold
        self.estimator = rls.update(self.estimator, pi, y, threshold)
        if np.linalg.norm(pi) >= threshold:
            self.pis.append(pi)
            self.ys.append(y)

    def current_estimate(self: PrnnAbcController) -> rls.EstimatedPhysical:
        """The estimate the controller should use now.

        The last adopted model, initially the prior, is held until the RLS
        estimate is past warm-up, excited in every direction and plausible
        next to that model."""
        opts = self.scenario.rls
        if self.estimator.k < opts.warmup_steps:
            return self.estimate
        weight = rls.prior_weight(self.estimator, opts.initial_covariance)
        if weight > opts.adoption_ratio:
            return self.estimate
        try:
            est = rls.extract_physical(self.estimator.theta_hat)
        except NotIdentifiableError:
            log.warning("estimate not identifiable, keeping previous model")
            self.nonphysical = True
            return self.estimate
        if not est.physical:
            log.warning("nonphysical estimate %s, keeping previous model", est)
            self.nonphysical = True
            return self.estimate
        if not rls.plausible(est, self.model, opts.trust_ratio):
            log.debug("estimate %s outside trust region, keeping previous model", est)
            return self.estimate
        self.estimate = est
        self.model = est.to_params(self.scenario.params.g)
        return est

    def _coefficients(
        self: PrnnAbcController,
        state: PlantState,
        ddx1d: float,
        e: backstepping.ErrorCoords,
        A: float,  # noqa: N803
        B: float,  # noqa: N803
    ) -> qp.QpCoefficients:
        sc = self.scenario
        if self.estimator is None:
            return qp.assemble(A, B, e, ddx1d, sc.gains, sc.weights, sc.bounds)
        return rls.adaptive_coefficients(
            self.current_estimate(),
            state,
            e,
            ddx1d,
            sc.gains,
            sc.weights,
            sc.bounds,
            sc.params.g,
            fallback=self.model,
        )

    def control(
        self: PrnnAbcController,
        t: float,  # noqa: ARG002
        state: PlantState,
        ddx1d: float,
        e: backstepping.ErrorCoords,
        A: float,  # noqa: N803
        B: float,  # noqa: N803
    ) -> ControlOutput:
        sc = self.scenario
        self._adapt(state)
        q = self._coefficients(state, ddx1d, e, A, B)
        if self.network is None:
            self.network = prnn.initial_state(sc.prnn.phi0, q)
        result = prnn.relax(self.network, q, sc.prnn, self.period)
        self.network = result.state
        return ControlOutput(
            u_raw=result.state.u,
            phi=result.state.phi,
            P=q.P,
            Q=q.Q,
            residual=result.residual,
        )

    def applied(self: PrnnAbcController, state: PlantState, u: float) -> None:
        self.previous = (state, u)

    def theta(self: PrnnAbcController) -> FloatArray:
        if self.estimator is None:
            return self.theta_true
        return self.estimator.theta_hat


class ExactFeedbackController:
    """Unconstrained, unoptimised control satisfying the stabilising
    condition exactly.  Its output is applied without clamping."""

    clamps = False
    nonphysical = False

    def __init__(self: ExactFeedbackController, scenario: Scenario) -> None:
        self.scenario = scenario
        self.theta_true = plant.theta_true(scenario.params)

    def control(
        self: ExactFeedbackController,
        t: float,
        state: PlantState,  # noqa: ARG002
        ddx1d: float,
        e: backstepping.ErrorCoords,
        A: float,  # noqa: N803
        B: float,  # noqa: N803
    ) -> ControlOutput:
        sc = self.scenario
        u = backstepping.exact_control(A, B, ddx1d, e, sc.gains, t)
        q = qp.assemble(A, B, e, ddx1d, sc.gains, sc.weights, sc.bounds)
        return ControlOutput(u_raw=u, phi=0.0, P=q.P, Q=q.Q, residual=0.0)

    def applied(self: ExactFeedbackController, state: PlantState, u: float) -> None:
        pass

    def theta(self: ExactFeedbackController) -> FloatArray:
        return self.theta_true


def resolve_reference(scenario: Scenario) -> Scenario:
    """Pin an open smoothstep start to the scenario's initial angle."""
    ref = scenario.reference
    if ref.kind == ReferenceKind.SMOOTHSTEP and ref.start is None:
        pinned = ref.model_copy(update={"start": scenario.initial.x1})
        return scenario.model_copy(update={"reference": pinned})
    return scenario


def run(scenario: Scenario) -> SimulationResult:
    """Simulate the PRNN-ABC closed loop.

    :raises SimulationAbort: on blowup, loss of controllability or any
        non-finite quantity; the partial result rides on the exception.
    """
    return _closed_loop(scenario, PrnnAbcController(scenario))


def run_exact_baseline(scenario: Scenario) -> SimulationResult:
    """Simulate the exact feedback law on the same timing, for comparison."""
    return _closed_loop(scenario, ExactFeedbackController(scenario))


def _closed_loop(scenario: Scenario, controller: Controller) -> SimulationResult:
    scenario = resolve_reference(scenario)
    params, gains, weights, bounds = (
        scenario.params,
        scenario.gains,
        scenario.weights,
        scenario.bounds,
    )
    timing = scenario.timing
    period, dt, substeps = timing.control_period, timing.plant_dt, timing.substeps
    state = PlantState(scenario.initial.x1, scenario.initial.x2)
    trace: list[TraceRecord] = []
    log.debug("starting run %s for %d control steps", scenario.name, timing.control_steps)
    try:
        for k in range(timing.control_steps):
            t = k * period
            plant.check_upright(state, t)
            x1d, dx1d, ddx1d = backstepping.reference_at(scenario.reference, t)
            e = backstepping.error_coords(state, (x1d, dx1d, ddx1d), gains)
            A = plant.drift_term(params, state)  # noqa: N806
            B = plant.gain_term(params, state)  # noqa: N806
            out = controller.control(t, state, ddx1d, e, A, B)
            if not math.isfinite(out.u_raw):
                raise IntegrationBlowupError(t, "control u")
            u = (
                prnn.project(out.u_raw, bounds.u_min, bounds.u_max)
                if controller.clamps
                else out.u_raw
            )
            theta = controller.theta()
            trace.append(
                TraceRecord(
                    t=t,
                    x1=state.x1,
                    x2=state.x2,
                    x1d=x1d,
                    dx1d=dx1d,
                    ddx1d=ddx1d,
                    S1=e.S1,
                    S2=e.S2,
                    u=u,
                    u_raw=out.u_raw,
                    phi=out.phi,
                    A=A,
                    B=B,
                    P=out.P,
                    Q=out.Q,
                    V2=backstepping.lyapunov_v2(e),
                    V2_dot_ideal=backstepping.ideal_v2_dot(e, gains),
                    V2_dot_predicted=backstepping.v2_dot(A, B, u, ddx1d, e, gains),
                    phi_term=e.S2 * B * out.phi / out.Q,
                    prnn_residual=out.residual,
                    theta_hat_1=float(theta[0]),
                    theta_hat_2=float(theta[1]),
                    theta_hat_3=float(theta[2]),
                    condition_residual=qp.condition_residual(B, weights),
                    d=plant.disturbance_at(scenario.disturbance, t, scenario.seed),
                )
            )
            for j in range(substeps):
                state = plant.step(
                    params,
                    state,
                    u,
                    scenario.disturbance,
                    t + j * dt,
                    dt,
                    seed=scenario.seed,
                )
            controller.applied(state, u)
    except PrnnAbcError as err:
        log.warning("run %s aborted: %s", scenario.name, err)
        result = _result(scenario, controller, trace, aborted=True, reason=str(err))
        raise SimulationAbort(err, result) from err
    log.debug("finished run %s", scenario.name)
    return _result(scenario, controller, trace, aborted=False, reason="")


def _result(
    scenario: Scenario,
    controller: Controller,
    trace: list[TraceRecord],
    *,
    aborted: bool,
    reason: str,
) -> SimulationResult:
    summary = summarize(scenario, trace, aborted=aborted, reason=reason)
    if controller.nonphysical:
        summary = replace(summary, nonphysical_estimate=True)
    if isinstance(controller, PrnnAbcController) and controller.estimator is not None:
        pis = np.array(controller.pis).reshape(-1, 3)
        return SimulationResult(
            trace=trace,
            summary=summary,
            regressors=pis,
            measurements=np.array(controller.ys),
            theta0=rls.perturbed_theta(
                controller.theta_true, scenario.rls.initial_perturbation
            ),
        )
    return SimulationResult(trace=trace, summary=summary)


def summarize(
    scenario: Scenario,
    trace: typing.Sequence[TraceRecord],
    *,
    aborted: bool = False,
    reason: str = "",
) -> RunSummary:
    """Reduce a trace to its run metrics."""
    period = scenario.timing.control_period
    if not trace:
        return RunSummary(
            name=scenario.name,
            steps=0,
            settling_time=0.0,
            settled=False,
            max_abs_s1=0.0,
            control_energy=0.0,
            tracking_ise=0.0,
            saturation_fraction=0.0,
            theta_error=0.0,
            prnn_settle_time=0.0,
            max_condition_residual=0.0,
            lyapunov_violations=0,
            nonphysical_estimate=False,
            aborted=aborted,
            abort_reason=reason,
        )
    times = [r.t for r in trace]
    horizon = times[-1] + period
    settle = first_time_after_which(
        times, [abs(r.S1) < scenario.settle_tolerance for r in trace]
    )
    prnn_settle = first_time_after_which(
        times, [r.prnn_residual < PRNN_SETTLE_TOLERANCE for r in trace]
    )
    bounds = scenario.bounds
    saturated = sum(1 for r in trace if not bounds.u_min <= r.u_raw <= bounds.u_max)
    last = trace[-1]
    theta_hat = np.array([last.theta_hat_1, last.theta_hat_2, last.theta_hat_3])
    after = 5.0 / scenario.prnn.vartheta
    violations = lyapunov_monitor(trace, scenario.gains, after=after)
    return RunSummary(
        name=scenario.name,
        steps=len(trace),
        settling_time=horizon if settle is None else settle,
        settled=settle is not None,
        max_abs_s1=max(abs(r.S1) for r in trace),
        control_energy=sum(r.u * r.u for r in trace) * period,
        tracking_ise=sum(r.S1 * r.S1 for r in trace) * period,
        saturation_fraction=saturated / len(trace),
        theta_error=rls.relative_error(theta_hat, plant.theta_true(scenario.params)),
        prnn_settle_time=horizon if prnn_settle is None else prnn_settle,
        max_condition_residual=max(r.condition_residual for r in trace),
        lyapunov_violations=len(violations),
        nonphysical_estimate=False,
        aborted=aborted,
        abort_reason=reason,
    )


def network_v2_rate(record: TraceRecord, gains: Gains) -> float:
    """V2 rate of one record assembled from the network's terms.

        -c1 S1^2 - c2 S2^2 + S2 B Q^-1 phi
            + S2 (r - B Q^-1 P)                 effort weight and model mismatch
            + S2 B (u - Q^-1 (phi - P))         clamp, or a non network u

    with r the tracking term.  The sum equals the V2 rate of the applied u
    on the true plant, undisturbed.
    """
    e = backstepping.ErrorCoords(
        S1=record.S1, S2=record.S2, gamma1=-gains.c1 * record.S1
    )
    r = backstepping.tracking_term(record.A, record.ddx1d, e, gains)
    network_u = (record.phi - record.P) / record.Q
    return (
        record.V2_dot_ideal
        + record.phi_term
        + record.S2 * (r - record.B * record.P / record.Q)
        + record.S2 * record.B * (record.u - network_u)
    )


def lyapunov_monitor(
    trace: typing.Sequence[TraceRecord],
    gains: Gains,
    after: float = 0.0,
    tolerance: float | None = None,
) -> list[Violation]:
    """Steps where V2 grows faster than the closed loop rate allows.

    The finite difference of V2 over each control period is compared with
    `network_v2_rate`.  Disturbances are not part of the prediction, so
    disturbed runs report violations.

    :param after: Ignore steps before this time (network transient).
    :param tolerance: Allowed excess; defaults to 10 dt + 1e-6.
    """
    if len(trace) < 2:
        return []
    dt = trace[1].t - trace[0].t
    tol = 10.0 * dt + 1e-6 if tolerance is None else tolerance
    violations = []
    for before, now in itertools.pairwise(trace):
        if before.t < after:
            continue
        observed = (now.V2 - before.V2) / dt
        predicted = network_v2_rate(before, gains)
        if observed > predicted + tol:
            violations.append(Violation(before.t, observed, predicted))
    return violations


def v2_rate_errors(trace: typing.Sequence[TraceRecord]) -> list[float]:
    """|finite difference V2 rate - (-c1 S1^2 - c2 S2^2)| per control period."""
    if len(trace) < 2:
        return []
    dt = trace[1].t - trace[0].t
    return [
        abs((now.V2 - before.V2) / dt - before.V2_dot_ideal)
        for before, now in itertools.pairwise(trace)
    ]


def compare_traces(
    a: typing.Sequence[TraceRecord], b: typing.Sequence[TraceRecord]
) -> float:
    """max |u_a - u_b| over the steps both traces cover."""
    return max((abs(ra.u - rb.u) for ra, rb in zip(a, b)), default=0.0)


def energy_drift(
    params: PendulumParams, state0: PlantState, dt: float, duration: float
) -> float:
    """|E(T) - E(0)| of the unforced, undisturbed plant integrated with `dt`."""
    quiet = DisturbanceSpec()
    state = state0
    for k in range(round(duration / dt)):
        state = plant.step(params, state, 0.0, quiet, k * dt, dt)
    return abs(plant.energy(params, state) - plant.energy(params, state0))


def apply_override(scenario: Scenario, key: str, value: typing.Any) -> Scenario:
    """Return a copy of `scenario` with one setting replaced.

    `key` is a dotted path into the scenario (``gains.c1``) or a sweep alias
    (``c1``, ``T``, ``vartheta``, ...).  ``bounds`` sets a symmetric box."""
    data = scenario.model_dump()
    if key == "bounds":
        box = Bounds.symmetric(float(value))
        data["bounds"] = box.model_dump()
        return scenario_from_mapping(data, source="override")
    node, leaf = _setting(data, key)
    node[leaf] = value
    return scenario_from_mapping(data, source="override")


def _setting(
    data: dict[str, typing.Any], key: str
) -> tuple[dict[str, typing.Any], str]:
    """The mapping holding `key` inside a dumped scenario, and its last part."""
    path = SweepAliases.get(key, key).split(".")
    node = data
    for part in path[:-1]:
        if not isinstance(node.get(part), dict):
            raise ConfigError("override", "unknown setting", key=key)
        node = node[part]
    if path[-1] not in node:
        raise ConfigError("override", "unknown setting", key=key)
    return node, path[-1]


def grid_cells(
    grid: Grid,
) -> list[dict[str, float]]:
    """Cartesian product of the grid in key order then value order."""
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*grid.values())]


def cell_scenario(base: Scenario, coords: dict[str, float]) -> Scenario:
    """`base` with one grid cell's overrides applied and the cell in its name."""
    scenario = base
    for key, value in coords.items():
        scenario = apply_override(scenario, key, value)
    label = ",".join(f"{k}={v}" for k, v in coords.items())
    return scenario.model_copy(update={"name": f"{base.name}[{label}]"})


def _run_cell(
    job: tuple[Scenario, dict[str, float]],
) -> tuple[RunSummary | None, str]:
    base, coords = job
    try:
        return run(cell_scenario(base, coords)).summary, "ok"
    except SimulationAbort as err:
        return err.result.summary, f"aborted: {err.cause}"
    except Exception as err:  # noqa: BLE001
        return None, f"error: {err}"


def sweep(
    base: Scenario,
    grid: Grid,
    workers: int | None = None,
) -> list[SweepRow]:
    """Run one scenario per grid cell and collect the summaries in grid order.

    Cells run in separate processes.  A cell whose values are rejected or
    whose run fails is recorded in its row's status and the sweep carries on.

    :param workers: Process count, defaults to `resolve_workers()`.
    :raises ConfigError: when a grid key names no setting.
    """
    if not grid or any(not values for values in grid.values()):
        raise ValueError("sweep grid is empty")
    dumped = base.model_dump()
    for key in grid:
        if key != "bounds":
            _setting(dumped, key)
    cells = grid_cells(grid)
    jobs = [(base, coords) for coords in cells]
    workers = resolve_workers() if workers is None else workers
    if workers <= 1 or len(jobs) == 1:
        outcomes = [_run_cell(job) for job in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            outcomes = list(executor.map(_run_cell, jobs))
    rows = []
    for coords, (summary, status) in zip(cells, outcomes):
        if status != "ok":
            log.warning("sweep cell %s: %s", coords, status)
        rows.append(SweepRow(coords=coords, summary=summary, status=status))
    return rows
