"""Two-neuron SO(2) oscillator that provides the rhythmic drive for the gait.

The oscillator is a discrete-time recurrent pair of tanh neurons whose weight
matrix is a gain-scaled rotation.  With a gain slightly above 1 it settles on a
stable quasi-sinusoidal orbit; the two outputs are a quarter period apart.  One
sampled period of that orbit is the phase reference used by the premotor layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_ALPHA = 1.01
DEFAULT_PHI = 0.01 * math.pi  # ~0.30 Hz at the 60 Hz control rate
INITIAL_OUTPUTS = (0.2, 0.0)  # fixed nonzero start so runs are reproducible
TRANSIENT_STEPS = 2000


class ParameterDomainError(ValueError):
    """Oscillator parameter outside its valid domain."""


class PeriodDetectionError(RuntimeError):
    """No stable period was found within the step budget."""


@dataclass(frozen=True)
class OscillatorParams:
    """Gain `alpha` and per-step phase increment `phi` (radians)."""

    alpha: float = DEFAULT_ALPHA
    phi: float = DEFAULT_PHI

    def __post_init__(self):
        if not math.isfinite(self.alpha) or self.alpha <= 0.0:
            raise ParameterDomainError(f"alpha must be positive, got {self.alpha}")
        if not math.isfinite(self.phi) or not 0.0 < self.phi < math.pi:
            raise ParameterDomainError(f"phi must lie in (0, pi), got {self.phi}")


def build_weights(params: OscillatorParams) -> np.ndarray:
    """Return the 2x2 gain-scaled rotation weight matrix for `params`."""
    c = math.cos(params.phi)
    s = math.sin(params.phi)
    w = params.alpha * np.array([[c, s], [-s, c]])
    w.flags.writeable = False
    return w


@dataclass(frozen=True)
class OscillatorState:
    """Immutable snapshot of the two neuron outputs plus their weight matrix."""

    o0: float
    o1: float
    weights: np.ndarray = field(repr=False)

    @property
    def outputs(self) -> tuple[float, float]:
        return (self.o0, self.o1)


def initial_state(params: OscillatorParams | None = None) -> OscillatorState:
    params = params or OscillatorParams()
    o0, o1 = INITIAL_OUTPUTS
    return OscillatorState(o0=o0, o1=o1, weights=build_weights(params))


def step(state: OscillatorState) -> OscillatorState:
    """Advance one control step: o(t+1) = tanh(W o(t)); weights unchanged."""
    w = state.weights
    a0 = math.tanh(w[0, 0] * state.o0 + w[0, 1] * state.o1)
    a1 = math.tanh(w[1, 0] * state.o0 + w[1, 1] * state.o1)
    return OscillatorState(o0=a0, o1=a1, weights=w)


def settle(state: OscillatorState, steps: int = TRANSIENT_STEPS) -> OscillatorState:
    """Run the transient off so the state sits on the limit cycle."""
    for _ in range(steps):
        state = step(state)
    return state


def _positive_crossings(o0_trace: np.ndarray) -> list[float]:
    """Positive-going zero crossings of o0, with linear interpolation."""
    crossings = []
    for i in range(len(o0_trace) - 1):
        lo, hi = o0_trace[i], o0_trace[i + 1]
        if lo < 0.0 <= hi:
            crossings.append(i + (-lo) / (hi - lo))
    return crossings


def sample_period(state: OscillatorState, max_steps: int = 20000) -> np.ndarray:
    """Sample exactly one period of the settled oscillator, as (T, 2) rows.

    The period is detected from positive-going zero crossings of o0 and rounded
    to whole steps; two consecutive crossing intervals must agree to within one
    step before the period is accepted.  The input state is not mutated, so
    repeated calls return identical arrays.

    Raises PeriodDetectionError if no stable period emerges within `max_steps`.
    """
    samples = np.empty((max_steps, 2))
    s = state
    for i in range(max_steps):
        s = step(s)
        samples[i, 0] = s.o0
        samples[i, 1] = s.o1
        # Only scan once enough signal exists to hold three crossings.
        if i + 1 < 8:
            continue
        crossings = _positive_crossings(samples[: i + 1, 0])
        if len(crossings) < 3:
            continue
        p1 = crossings[1] - crossings[0]
        p2 = crossings[2] - crossings[1]
        if abs(p1 - p2) > 1.0:
            continue
        period = int(math.floor(0.5 * (p1 + p2) + 0.5))
        start = int(math.ceil(crossings[0]))
        if i + 1 < start + period:
            continue  # keep stepping until the full cycle is collected
        cycle = samples[start : start + period].copy()
        cycle.flags.writeable = False
        return cycle
    raise PeriodDetectionError(
        f"no stable period detected within {max_steps} steps"
    )


def periodic_orbit(params: OscillatorParams | None = None) -> np.ndarray:
    """Convenience: settled one-period orbit for `params` ((T, 2) array)."""
    return sample_period(settle(initial_state(params)))
