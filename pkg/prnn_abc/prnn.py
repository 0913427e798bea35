"""Projection recurrent network solving the per-step QP.

The network state phi evolves as

    dphi/dt = vartheta (PR(u - phi) - u),    u = Q^-1 (phi - P)

and its equilibria are exactly the QP minimisers.  With the ``divide`` rate
convention the right hand side is divided by vartheta instead.
"""

from __future__ import annotations

import logging
import math
import typing
from dataclasses import dataclass

from .config import PrnnConfig
from .const import RateConvention
from .exceptions import IntegrationBlowupError
from .qp import QpCoefficients
from .qp import clamp
from .qp import solve_oracle

log = logging.getLogger(__name__)

# Sub-steps are kept below this multiple of the inverse stiffest rate, inside
# the real axis stability interval of classic RK4 (about 2.78).
STABLE_STEP = 1.5


@dataclass(frozen=True, slots=True)
class PrnnState:
    phi: float
    u: float


@dataclass(frozen=True, slots=True)
class RelaxResult:
    state: PrnnState
    residual: float
    elapsed: float
    steps: int


def project(u: float, u_min: float, u_max: float) -> float:
    """Nearest point of [u_min, u_max] to `u`."""
    if not u_min < u_max:
        raise ValueError(f"empty box [{u_min}, {u_max}]")
    return clamp(u, u_min, u_max)


def output(phi: float, q: QpCoefficients) -> float:
    """The algebraic network output u = Q^-1 (phi - P)."""
    return (phi - q.P) / q.Q


def initial_state(phi0: float, q: QpCoefficients) -> PrnnState:
    return PrnnState(phi=phi0, u=output(phi0, q))


def _rate(cfg: PrnnConfig) -> float:
    if cfg.rate_convention == RateConvention.DIVIDE:
        return 1.0 / cfg.vartheta
    return cfg.vartheta


def _rhs(phi: float, q: QpCoefficients, rate: float) -> float:
    u = (phi - q.P) / q.Q
    return rate * (clamp(u - phi, q.u_min, q.u_max) - u)


def phi_derivative(s: PrnnState, q: QpCoefficients, cfg: PrnnConfig) -> float:
    """Network vector field at `s.phi` with the output recomputed from phi."""
    return _rhs(s.phi, q, _rate(cfg))


def equilibrium_residual(s: PrnnState, q: QpCoefficients) -> float:
    """|PR(u - phi) - u|, zero exactly at a network equilibrium."""
    return abs(clamp(s.u - s.phi, q.u_min, q.u_max) - s.u)


def stationarity_residual(s: PrnnState, q: QpCoefficients) -> float:
    """Q u + P - phi; vanishes whenever `s.u` came from `output`."""
    return q.Q * s.u + q.P - s.phi


def equilibrium_phi(q: QpCoefficients) -> float:
    """phi* = Q u* + P for the QP minimiser u*."""
    return q.Q * solve_oracle(q) + q.P


def network_lyapunov(phi: float, phi_star: float, Q: float, delta: float = 1.0) -> float:  # noqa: N803
    """(delta/2)(phi - phi*)^2 + (delta/2) Q^-1 (phi - phi*)^2."""
    gap = (phi - phi_star) ** 2
    return 0.5 * delta * gap + 0.5 * delta * gap / Q


def stiffest_rate(q: QpCoefficients, cfg: PrnnConfig) -> float:
    """Largest local decay rate of the network: vartheta inside the box,
    vartheta / Q on a bound."""
    return _rate(cfg) * max(1.0, 1.0 / q.Q)


def _rk4(phi: float, q: QpCoefficients, rate: float, h: float) -> float:
    k1 = _rhs(phi, q, rate)
    k2 = _rhs(phi + 0.5 * h * k1, q, rate)
    k3 = _rhs(phi + 0.5 * h * k2, q, rate)
    k4 = _rhs(phi + h * k3, q, rate)
    return phi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def iterate(
    s: PrnnState, q: QpCoefficients, cfg: PrnnConfig, h: float, steps: int
) -> typing.Iterator[PrnnState]:
    """Yield the state after each of `steps` RK4 sub-steps of length `h`,
    holding P and Q frozen."""
    rate = _rate(cfg)
    phi = s.phi
    for _ in range(steps):
        phi = _rk4(phi, q, rate, h)
        if not math.isfinite(phi):
            raise IntegrationBlowupError(h * steps, "prnn state phi")
        yield PrnnState(phi=phi, u=output(phi, q))


def relax(
    s: PrnnState, q: QpCoefficients, cfg: PrnnConfig, period: float
) -> RelaxResult:
    """Integrate the network over one control period.

    Uses `cfg.inner_steps` sub-steps, or more when the frozen coefficients
    make the network stiffer than that step count can integrate stably.
    """
    steps = max(cfg.inner_steps, math.ceil(period * stiffest_rate(q, cfg) / STABLE_STEP))
    state = s
    for state in iterate(s, q, cfg, period / steps, steps):  # noqa: B007
        pass
    return RelaxResult(
        state=state,
        residual=equilibrium_residual(state, q),
        elapsed=period,
        steps=steps,
    )


def relax_to_equilibrium(
    s: PrnnState,
    q: QpCoefficients,
    cfg: PrnnConfig,
    max_time: float | None = None,
) -> RelaxResult:
    """Integrate until the equilibrium residual drops below `cfg.tol`.

    :param max_time: Network time budget; defaults to fifty time constants of
        the slowest local rate.
    """
    rate = _rate(cfg)
    h = STABLE_STEP / stiffest_rate(q, cfg)
    if max_time is None:
        max_time = 50.0 / (rate * min(1.0, 1.0 / q.Q))
    max_steps = max(1, math.ceil(max_time / h))
    phi = s.phi
    state = PrnnState(phi=phi, u=output(phi, q))
    residual = equilibrium_residual(state, q)
    steps = 0
    while residual >= cfg.tol and steps < max_steps:
        phi = _rk4(phi, q, rate, h)
        if not math.isfinite(phi):
            raise IntegrationBlowupError(steps * h, "prnn state phi")
        state = PrnnState(phi=phi, u=output(phi, q))
        residual = equilibrium_residual(state, q)
        steps += 1
    if residual >= cfg.tol:
        log.warning(
            "prnn residual %.3e still above tolerance %.1e after %.3fs",
            residual,
            cfg.tol,
            steps * h,
        )
    return RelaxResult(state=state, residual=residual, elapsed=steps * h, steps=steps)
