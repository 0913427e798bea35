from __future__ import annotations

import math

import numpy as np

from .config import DisturbanceSpec
from .const import DisturbanceKind


def none_disturbance_strategy(
    spec: DisturbanceSpec, t: float, seed: int = 0  # noqa: ARG001
) -> float:
    """No external disturbance."""
    return 0.0


def constant_disturbance_strategy(
    spec: DisturbanceSpec, t: float, seed: int = 0  # noqa: ARG001
) -> float:
    """A constant angular acceleration offset of `spec.amplitude`."""
    return spec.amplitude


def sinusoid_disturbance_strategy(
    spec: DisturbanceSpec, t: float, seed: int = 0  # noqa: ARG001
) -> float:
    """`amplitude * sin(2 pi f t)`."""
    return spec.amplitude * math.sin(2.0 * math.pi * spec.frequency * t)


def random_disturbance_strategy(
    spec: DisturbanceSpec, t: float, seed: int = 0
) -> float:
    """Uniform noise on [-amplitude, amplitude] held for `spec.hold` seconds.

    Each held value is drawn from a stream keyed by (run `seed`, `spec.seed`,
    interval index), so any time can be evaluated in any order and give the
    same answer."""
    index = max(0, math.floor(t / spec.hold + 1e-9))
    rng = np.random.default_rng([seed, spec.seed, index])
    return spec.amplitude * (2.0 * float(rng.random()) - 1.0)


DISTURBANCE_FACTORY = {
    DisturbanceKind.NONE: none_disturbance_strategy,
    DisturbanceKind.CONSTANT: constant_disturbance_strategy,
    DisturbanceKind.SINUSOID: sinusoid_disturbance_strategy,
    DisturbanceKind.RANDOM: random_disturbance_strategy,
}
