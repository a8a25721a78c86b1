"""Sensor processing that turns raw observations into module gate signals.

Three channels feed the primitive modules: a binary obstacle detection pushed
through a three-stage low-pass IIR cascade (the cascade keeps the reflex gate
elevated after the obstacle leaves the sensor cone), a low-passed body tilt
split by sign into left/right leg channels, and a low-passed heading error with
the same sign split.  Filter chains are value types: stepping returns a new
chain, so an episode snapshot carries its filter memory with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Repo-chosen coefficients (the filter topology is fixed, the constants are
# not): obstacle chain 3 stages at a=0.10 per stage @60 Hz, tilt/heading a
# single stage at a=0.20.
OBSTACLE_STAGES = 3
OBSTACLE_COEFF = 0.10
SMOOTHING_COEFF = 0.20

TWO_PI = 2.0 * math.pi


def wrap_angle(angle: float) -> float:
    """Wrap to (-pi, pi]; -pi maps to +pi."""
    return math.pi - (math.pi - angle) % TWO_PI


@dataclass(frozen=True)
class IirChain:
    """Cascade of single-pole low-pass stages, each y' = (1-a)y + a*x."""

    coefficient: float
    state: tuple[float, ...]

    def __post_init__(self):
        if len(self.state) < 1:
            raise ValueError("chain needs at least one stage")
        if not 0.0 < self.coefficient <= 1.0:
            raise ValueError(f"coefficient must be in (0, 1], got {self.coefficient}")


def make_chain(stages: int, coefficient: float) -> IirChain:
    if stages < 1:
        raise ValueError(f"stages must be >= 1, got {stages}")
    return IirChain(coefficient=coefficient, state=(0.0,) * stages)


def obstacle_chain() -> IirChain:
    return make_chain(OBSTACLE_STAGES, OBSTACLE_COEFF)


def smoothing_chain() -> IirChain:
    return make_chain(1, SMOOTHING_COEFF)


def iir_step(chain: IirChain, x: float) -> tuple[IirChain, float]:
    """Feed one sample through every stage; returns (chain', final output)."""
    a = chain.coefficient
    out = []
    value = x
    for prev in chain.state:
        value = (1.0 - a) * prev + a * value
        out.append(value)
    return IirChain(coefficient=a, state=tuple(out)), value


@dataclass(frozen=True)
class ObstacleSensorConfig:
    """Binary optic distance sensor on the head, tilted forward from downward."""

    cutoff_distance: float = 0.115  # m
    mount_pitch_deg: float = 30.0

    def __post_init__(self):
        if not self.cutoff_distance > 0.0:
            raise ValueError("cutoff_distance must be positive")


@dataclass(frozen=True)
class HeadingCommand:
    """Desired walking direction; stored wrapped to (-pi, pi]."""

    desired_yaw: float

    def __post_init__(self):
        object.__setattr__(self, "desired_yaw", wrap_angle(self.desired_yaw))


def obstacle_gate(
    config: ObstacleSensorConfig, distance_reading: float, chain: IirChain
) -> tuple[IirChain, float]:
    """Binary return-within-cutoff detection, filtered into the S1 gate.

    `distance_reading` may be inf for no return.
    """
    hit = 1.0 if distance_reading < config.cutoff_distance else 0.0
    return iir_step(chain, hit)


def _sign_split(value: float) -> tuple[float, float]:
    # Positive goes to the left-leg channel, |negative| to the right.
    if value > 0.0:
        return value, 0.0
    if value < 0.0:
        return 0.0, -value
    return 0.0, 0.0


def tilt_gate(roll: float, chain: IirChain) -> tuple[IirChain, float, float]:
    """Low-passed body roll split into (left, right) nonnegative channels."""
    if not math.isfinite(roll):
        raise ValueError(f"roll must be finite, got {roll}")
    chain, filtered = iir_step(chain, roll)
    left, right = _sign_split(filtered)
    return chain, left, right


def heading_gate(
    actual_yaw: float, command: HeadingCommand, chain: IirChain
) -> tuple[IirChain, float, float]:
    """Low-passed shortest-angle heading error split into (left, right)."""
    if not math.isfinite(actual_yaw):
        raise ValueError(f"actual_yaw must be finite, got {actual_yaw}")
    error = wrap_angle(command.desired_yaw - actual_yaw)
    chain, filtered = iir_step(chain, error)
    left, right = _sign_split(filtered)
    return chain, left, right
