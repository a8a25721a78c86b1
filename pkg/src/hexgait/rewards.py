"""Scalar returns for the nine learned behaviors.

Every behavior shares one linear form

    R = w_d * d - (w_g * instability + w_h * height_error + w_s * slippage
        + w_tm * tilt_mean + w_tv * tilt_var + w_he * heading_error
        + w_mw * min_width + w_mh * min_height + w_a * ascent)

with a fixed weight table per behavior; negative weights inside the subtracted
sum act as bonuses (wide stance and high clearance for high walking, upward
travel for wall climbing).  The instability term is capped at 8 before it ever
reaches the reward, so its contribution is bounded below by -8*w_g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

SLIP_SPEED_THRESHOLD = 0.01  # m/s tangential at the leg tip
INSTABILITY_CAP = 8.0
DEFAULT_DESIRED_HEIGHT = 0.135  # m, the robot's neutral stance height


@dataclass(frozen=True)
class EpisodeStats:
    """Trajectory statistics of one rollout, units noted per field."""

    distance: float = 0.0  # m along the initial heading
    instability: float = 0.0  # summed pose/height variances, capped at 8
    height_error: float = 0.0  # |mean walking height - desired| in m
    slippage: float = 0.0  # worst-leg slip fraction in [0, 1]
    tilt_mean: float = 0.0  # mean |roll| in rad
    tilt_var: float = 0.0  # roll variance in rad^2
    heading_error: float = 0.0  # mean |wrapped heading error| in rad
    min_width: float = 0.0  # episode-min bounding width across leg tips, m
    min_height: float = 0.0  # episode-min body clearance, m
    ascent: float = 0.0  # net upward travel, m

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)])


STAT_FIELDS = tuple(f.name for f in fields(EpisodeStats))


@dataclass(frozen=True)
class RewardWeights:
    distance: float = 0.0
    instability: float = 0.0
    height_error: float = 0.0
    slippage: float = 0.0
    tilt_mean: float = 0.0
    tilt_var: float = 0.0
    heading_error: float = 0.0
    min_width: float = 0.0
    min_height: float = 0.0
    ascent: float = 0.0

    def evaluate(self, stats: EpisodeStats) -> float:
        values = stats.as_array()
        if not np.isfinite(values).all():
            raise ValueError(f"non-finite episode stats: {stats}")
        penalty = (
            self.instability * stats.instability
            + self.height_error * stats.height_error
            + self.slippage * stats.slippage
            + self.tilt_mean * stats.tilt_mean
            + self.tilt_var * stats.tilt_var
            + self.heading_error * stats.heading_error
            + self.min_width * stats.min_width
            + self.min_height * stats.min_height
            + self.ascent * stats.ascent
        )
        return self.distance * stats.distance - penalty


WEIGHTS: dict[str, RewardWeights] = {
    "base": RewardWeights(distance=3, instability=1, height_error=3, slippage=0.75),
    "obstacle": RewardWeights(distance=0.5, instability=1, slippage=0.5),
    "posture": RewardWeights(
        distance=2, instability=1, slippage=0.5, tilt_mean=40, tilt_var=10
    ),
    "direction": RewardWeights(
        distance=0.1, instability=1, height_error=3, slippage=1, heading_error=6
    ),
    "high": RewardWeights(
        distance=3, instability=10, slippage=1, min_width=-2, min_height=-15
    ),
    "low": RewardWeights(distance=3, instability=10, slippage=1, min_height=60),
    "narrow": RewardWeights(distance=3, instability=10, slippage=1, min_width=60),
    # The pipe formula names a width term but assigns it no value; it stays 0.
    "pipe": RewardWeights(distance=5, instability=1, slippage=0.75, min_width=0),
    "wall": RewardWeights(distance=0.6, instability=1, slippage=0.75, ascent=-6),
}

BEHAVIOR_NAMES = tuple(WEIGHTS)


def behavior_return(behavior: str, stats: EpisodeStats) -> float:
    return WEIGHTS[behavior].evaluate(stats)


def return_base(stats: EpisodeStats) -> float:
    return WEIGHTS["base"].evaluate(stats)


def return_obstacle(stats: EpisodeStats) -> float:
    return WEIGHTS["obstacle"].evaluate(stats)


def return_posture(stats: EpisodeStats) -> float:
    return WEIGHTS["posture"].evaluate(stats)


def return_direction(stats: EpisodeStats) -> float:
    return WEIGHTS["direction"].evaluate(stats)


def return_high(stats: EpisodeStats) -> float:
    return WEIGHTS["high"].evaluate(stats)


def return_low(stats: EpisodeStats) -> float:
    return WEIGHTS["low"].evaluate(stats)


def return_narrow(stats: EpisodeStats) -> float:
    return WEIGHTS["narrow"].evaluate(stats)


def return_pipe(stats: EpisodeStats) -> float:
    return WEIGHTS["pipe"].evaluate(stats)


def return_wall(stats: EpisodeStats) -> float:
    return WEIGHTS["wall"].evaluate(stats)


def slippage(
    tip_speeds: np.ndarray,
    in_contact: np.ndarray,
    threshold: float = SLIP_SPEED_THRESHOLD,
) -> float:
    """Worst-leg fraction of contact steps with tangential speed > threshold.

    Arguments are (legs, steps) arrays; a leg that never touches down
    contributes 0 (0/0 defined as 0).
    """
    speeds = np.asarray(tip_speeds, dtype=float)
    contact = np.asarray(in_contact, dtype=bool)
    if speeds.shape != contact.shape or speeds.ndim != 2 or speeds.shape[1] == 0:
        raise ValueError("tip_speeds and in_contact must be matching (legs, steps)")
    worst = 0.0
    for leg in range(speeds.shape[0]):
        contacts = int(contact[leg].sum())
        if contacts == 0:
            continue
        slips = int((contact[leg] & (speeds[leg] > threshold)).sum())
        worst = max(worst, slips / contacts)
    return worst


def instability(
    yaw: np.ndarray, pitch: np.ndarray, roll: np.ndarray, height: np.ndarray
) -> float:
    """Capped sum of population variances of yaw, pitch, roll, and body height."""
    traces = [np.asarray(t, dtype=float) for t in (yaw, pitch, roll, height)]
    if any(t.ndim != 1 or len(t) < 2 for t in traces):
        raise ValueError("pose traces need at least 2 samples each")
    total = float(sum(t.var() for t in traces))
    if math.isnan(total):
        raise ValueError("non-finite pose trace")
    return min(total, INSTABILITY_CAP)
