"""Radial-basis premotor layer indexing phase along one oscillator period.

Each hidden neuron holds a 2-D Gaussian centred on a point of the sampled
oscillator orbit; the centres are spread uniformly over one period, so the
activation vector acts as a soft phase pointer.  Centres are frozen after
placement — only the synapses leaving this layer are ever learned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_HIDDEN = 20
DEFAULT_VARIANCE = 0.04


@dataclass(frozen=True)
class PremotorParams:
    hidden_count: int = DEFAULT_HIDDEN
    variance: float = DEFAULT_VARIANCE

    def __post_init__(self):
        if self.hidden_count < 2:
            raise ValueError(f"hidden_count must be >= 2, got {self.hidden_count}")
        if not self.variance > 0.0:
            raise ValueError(f"variance must be positive, got {self.variance}")


@dataclass(frozen=True)
class PremotorLayer:
    """H Gaussian centres (rows of `means`) with a shared variance."""

    means: np.ndarray = field(repr=False)  # (H, 2)
    params: PremotorParams = PremotorParams()


def place_means(period_samples: np.ndarray, params: PremotorParams) -> PremotorLayer:
    """Pin centre h (h = 1..H) to the orbit sample at round((h-1)*T/(H-1)).

    The index for h = H lands one past the sampled array and is clamped to the
    last sample.  Indices must come out distinct, which holds whenever the
    period is comfortably longer than the hidden layer.
    """
    samples = np.asarray(period_samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 2 or len(samples) == 0:
        raise ValueError("period_samples must be a nonempty (T, 2) array")
    period = len(samples)
    h_count = params.hidden_count
    if h_count > period:
        raise ValueError(
            f"hidden_count {h_count} exceeds the {period} samples of one period"
        )
    indices = []
    for h in range(h_count):
        raw = h * period / (h_count - 1)
        indices.append(min(int(math.floor(raw + 0.5)), period - 1))
    if len(set(indices)) != h_count:
        raise ValueError("period too short for distinct phase anchors")
    means = samples[indices].copy()
    means.flags.writeable = False
    return PremotorLayer(means=means, params=params)


def activations(layer: PremotorLayer, o0: float, o1: float) -> np.ndarray:
    """Gaussian response of every hidden neuron to the oscillator outputs."""
    means = layer.means
    d2 = (o0 - means[:, 0]) ** 2 + (o1 - means[:, 1]) ** 2
    return np.exp(-d2 / layer.params.variance)


def activation_table(layer: PremotorLayer, period_samples: np.ndarray) -> np.ndarray:
    """Activations for every sample of one period, as a (T, H) table."""
    samples = np.asarray(period_samples, dtype=float)
    d2 = (samples[:, None, 0] - layer.means[None, :, 0]) ** 2
    d2 += (samples[:, None, 1] - layer.means[None, :, 1]) ** 2
    return np.exp(-d2 / layer.params.variance)
