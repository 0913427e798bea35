from __future__ import annotations

import math

from .config import ReferenceSignal
from .const import ReferenceKind
from .types import ReferenceTriple


def constant_reference_strategy(ref: ReferenceSignal, t: float) -> ReferenceTriple:  # noqa: ARG001
    """Hold `ref.setpoint`."""
    return ref.setpoint, 0.0, 0.0


def sinusoid_reference_strategy(ref: ReferenceSignal, t: float) -> ReferenceTriple:
    """`setpoint + amplitude * sin(w t)` with its two analytic derivatives."""
    omega = 2.0 * math.pi * ref.frequency
    s, c = math.sin(omega * t), math.cos(omega * t)
    return (
        ref.setpoint + ref.amplitude * s,
        ref.amplitude * omega * c,
        -ref.amplitude * omega * omega * s,
    )


def smoothstep_reference_strategy(ref: ReferenceSignal, t: float) -> ReferenceTriple:
    """Quintic blend from `ref.start` to `ref.setpoint` over `ref.ramp_time`.

    Position, velocity and acceleration are continuous at both ends."""
    start = 0.0 if ref.start is None else ref.start
    span = ref.setpoint - start
    duration = ref.ramp_time
    if t >= duration:
        return ref.setpoint, 0.0, 0.0
    tau = max(t, 0.0) / duration
    blend = tau**3 * (10.0 - 15.0 * tau + 6.0 * tau * tau)
    blend_dot = 30.0 * tau * tau * (1.0 - tau) ** 2
    blend_ddot = 60.0 * tau * (1.0 - tau) * (1.0 - 2.0 * tau)
    return (
        start + span * blend,
        span * blend_dot / duration,
        span * blend_ddot / (duration * duration),
    )


REFERENCE_FACTORY = {
    ReferenceKind.CONSTANT: constant_reference_strategy,
    ReferenceKind.SINUSOID: sinusoid_reference_strategy,
    ReferenceKind.SMOOTHSTEP: smoothstep_reference_strategy,
}
