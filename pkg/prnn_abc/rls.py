"""Recursive least squares identification of the pendulum parameters.

The rearranged angle dynamics are linear in

    theta = [m/(m_c+m), 1/l, 1/(l (m_c+m))]

with regressor

    Pi = [3/4 x2dot cos^2 x1 - 3/4 x2^2 cos x1 sin x1,  3/4 g sin x1,  3/4 cos(x1) u]

and measurement y = x2dot.  The estimate feeds the adaptive P, Q coefficients.
"""

from __future__ import annotations

import logging
import math
import typing
from dataclasses import dataclass
from dataclasses import replace

import numpy as np
import scipy.linalg

from . import plant
from . import qp
from .backstepping import ErrorCoords
from .config import Bounds
from .config import Gains
from .config import PendulumParams
from .config import Weights
from .exceptions import NotIdentifiableError
from .plant import PlantState
from .types import FloatArray

log = logging.getLogger(__name__)

IDENTIFIABLE_EPS = 1e-6


@dataclass(frozen=True, slots=True)
class RlsState:
    theta_hat: FloatArray
    M: FloatArray
    G: FloatArray
    last_x2: float | None = None
    k: int = 0
    error: float = 0.0


@dataclass(frozen=True, slots=True)
class EstimatedPhysical:
    l_hat: float
    m_sum_hat: float
    m_hat: float

    @property
    def physical(self: EstimatedPhysical) -> bool:
        """Length and both masses strictly positive."""
        return self.l_hat > 0 and self.m_hat > 0 and self.m_sum_hat > self.m_hat

    def to_params(self: EstimatedPhysical, g: float) -> PendulumParams:
        return PendulumParams(
            g=g, m_c=self.m_sum_hat - self.m_hat, m=self.m_hat, l=self.l_hat
        )


def initial_state(theta0: typing.Sequence[float], kappa: float) -> RlsState:
    theta = np.asarray(theta0, dtype=float).copy()
    return RlsState(theta_hat=theta, M=kappa * np.eye(theta.size), G=np.zeros(theta.size))


def perturbed_theta(theta: FloatArray, perturbation: float) -> FloatArray:
    """Scale every component by 1 + `perturbation`.

    A common scale leaves m_c + m and the ratio A/B of the prior model exact."""
    return theta * (1.0 + perturbation)


def regressor(state: PlantState, x2dot: float, u: float, g: float) -> FloatArray:
    s, c = math.sin(state.x1), math.cos(state.x1)
    return np.array(
        [
            0.75 * x2dot * c * c - 0.75 * state.x2**2 * c * s,
            0.75 * g * s,
            0.75 * c * u,
        ]
    )


def update(
    s: RlsState, pi: FloatArray, y: float, excitation_threshold: float = 0.0
) -> RlsState:
    """One forgetting free RLS step.

        G = M Pi / (1 + Pi' M Pi)
        theta+ = theta + G (y - Pi' theta)
        M+ = (I - G Pi') M, symmetrised

    Regressors with norm below `excitation_threshold` leave the estimate
    and covariance untouched.
    """
    pi = np.asarray(pi, dtype=float)
    error = float(y - pi @ s.theta_hat)
    if np.linalg.norm(pi) < excitation_threshold:
        return replace(s, k=s.k + 1, error=error, G=np.zeros_like(s.G))
    m_pi = s.M @ pi
    denominator = 1.0 + float(pi @ m_pi)
    assert denominator > 0, "covariance lost positive definiteness"
    gain = m_pi / denominator
    covariance = s.M - np.outer(gain, pi) @ s.M
    return replace(
        s,
        theta_hat=s.theta_hat + gain * error,
        M=0.5 * (covariance + covariance.T),
        G=gain,
        k=s.k + 1,
        error=error,
    )


def extract_physical(theta_hat: FloatArray) -> EstimatedPhysical:
    """Invert theta onto (l, m_c + m, m).

    :raises NotIdentifiableError: when theta_2 or theta_3 is too close to zero.
    """
    t1, t2, t3 = (float(v) for v in theta_hat)
    if t2 <= IDENTIFIABLE_EPS or t3 <= IDENTIFIABLE_EPS:
        raise NotIdentifiableError(theta_hat)
    total = t2 / t3
    return EstimatedPhysical(l_hat=1.0 / t2, m_sum_hat=total, m_hat=t1 * total)


def adaptive_coefficients(
    est: EstimatedPhysical,
    state: PlantState,
    e: ErrorCoords,
    ddx1d: float,
    gains: Gains,
    w: Weights,
    bounds: Bounds,
    g: float,
    fallback: PendulumParams,
) -> qp.QpCoefficients:
    """P-hat, Q-hat: the QP assembled from the estimated model.

    A nonphysical estimate is replaced by `fallback` with a warning."""
    if est.physical:
        model = est.to_params(g)
    else:
        log.warning("nonphysical estimate %s, using fallback parameters", est)
        model = fallback
    return qp.assemble(
        plant.drift_term(model, state),
        plant.gain_term(model, state),
        e,
        ddx1d,
        gains,
        w,
        bounds,
    )


def batch_solve(
    pis: FloatArray, ys: FloatArray, theta0: FloatArray, M0: FloatArray  # noqa: N803
) -> FloatArray:
    """Regularised least squares over a block of samples.

    Solves (M0^-1 + sum Pi Pi') theta = M0^-1 theta0 + sum Pi y, which is
    exactly what RLS started from (theta0, M0) reaches after the same samples.
    """
    pis = np.atleast_2d(np.asarray(pis, dtype=float))
    ys = np.asarray(ys, dtype=float)
    prior = np.linalg.inv(M0)
    lhs = prior + pis.T @ pis
    rhs = prior @ theta0 + pis.T @ ys
    return scipy.linalg.solve(lhs, rhs, assume_a="pos")


def min_eigenvalue(M: FloatArray) -> float:  # noqa: N803
    return float(scipy.linalg.eigvalsh(M)[0])


def relative_error(theta_hat: FloatArray, theta: FloatArray) -> float:
    return float(np.linalg.norm(theta_hat - theta) / np.linalg.norm(theta))


def prior_weight(s: RlsState, kappa: float) -> float:
    """Largest eigenvalue of M over its initial value `kappa`.

    Small only once every direction of theta has been excited; along the
    least excited direction the estimate still carries this share of the
    prior's error."""
    return float(scipy.linalg.eigvalsh(s.M)[-1]) / kappa


def plausible(
    est: EstimatedPhysical, model: PendulumParams, trust_ratio: float
) -> bool:
    """Length, total mass and pole mass each within a factor `trust_ratio`
    of `model`."""
    pairs = (
        (est.l_hat, model.l),
        (est.m_sum_hat, model.m_c + model.m),
        (est.m_hat, model.m),
    )
    return all(1.0 / trust_ratio <= new / old <= trust_ratio for new, old in pairs)
