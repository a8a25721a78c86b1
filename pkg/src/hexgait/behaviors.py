"""Registry of the nine learnable behaviors and their training setups.

Each behavior pins its reward function, rollout length, exploration noise, and
the module slots its learned weight matrix occupies.  The sign-split sensor
channels mean posture and direction each occupy two slots (left-leg and
right-leg routing) sharing one learned matrix; the obstacle reflex routes its
filtered gate to the two front legs only; advanced behaviors are driven by a
constant command gate on all legs and toggled via the enable schedule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .composer import (
    FRONT_LEGS,
    LEFT_LEGS,
    N_JOINTS,
    N_LEGS,
    RIGHT_LEGS,
    ControllerStack,
    ModuleSlot,
    WeightRecord,
    WeightSet,
    tripod_phase_offsets,
)
from .rewards import EpisodeStats, WEIGHTS, behavior_return
from .terrain import Box, TerrainSpec, Waypoint


def routing_all() -> np.ndarray:
    return np.ones((N_LEGS, N_JOINTS))


def routing_legs(legs) -> np.ndarray:
    mask = np.zeros((N_LEGS, N_JOINTS))
    mask[list(legs), :] = 1.0
    return mask


@dataclass(frozen=True)
class SlotSpec:
    name: str
    gate_source: str
    routing: np.ndarray

    def build(self, weights: np.ndarray, enabled: bool = True) -> ModuleSlot:
        return ModuleSlot(
            weight_set=WeightSet(self.name, weights),
            gate_source=self.gate_source,
            routing=self.routing,
            enabled=enabled,
        )


@dataclass(frozen=True)
class Behavior:
    name: str
    exploration_std: float
    rollout_seconds: float
    slots: tuple[SlotSpec, ...]  # empty for the base behavior

    @property
    def reward(self) -> Callable[[EpisodeStats], float]:
        weights = WEIGHTS[self.name]
        return weights.evaluate

    def evaluate_return(self, stats: EpisodeStats) -> float:
        return behavior_return(self.name, stats)


def _advanced(name: str, seconds: float) -> Behavior:
    return Behavior(
        name=name,
        exploration_std=0.06,
        rollout_seconds=seconds,
        slots=(SlotSpec(name, "constant", routing_all()),),
    )


BEHAVIORS: dict[str, Behavior] = {
    "base": Behavior("base", exploration_std=0.02, rollout_seconds=6.0, slots=()),
    "obstacle": Behavior(
        "obstacle",
        exploration_std=0.02,
        rollout_seconds=14.0,
        slots=(SlotSpec("obstacle", "obstacle", routing_legs(FRONT_LEGS)),),
    ),
    "posture": Behavior(
        "posture",
        exploration_std=0.1,
        rollout_seconds=6.0,
        slots=(
            SlotSpec("posture.left", "tilt_left", routing_legs(LEFT_LEGS)),
            SlotSpec("posture.right", "tilt_right", routing_legs(RIGHT_LEGS)),
        ),
    ),
    "direction": Behavior(
        "direction",
        exploration_std=0.02,
        rollout_seconds=10.0,
        slots=(
            SlotSpec("direction.left", "heading_left", routing_legs(LEFT_LEGS)),
            SlotSpec("direction.right", "heading_right", routing_legs(RIGHT_LEGS)),
        ),
    ),
    "high": _advanced("high", 6.0),
    "low": _advanced("low", 6.0),
    "narrow": _advanced("narrow", 6.0),
    "pipe": _advanced("pipe", 14.0),
    "wall": _advanced("wall", 12.0),
}


def get_behavior(name: str) -> Behavior:
    try:
        return BEHAVIORS[name]
    except KeyError:
        raise KeyError(
            f"unknown behavior '{name}'; expected one of {sorted(BEHAVIORS)}"
        ) from None


def build_stack(
    base_weights: np.ndarray,
    period: int,
    modules: tuple[tuple[SlotSpec, np.ndarray], ...] = (),
    frozen: tuple[WeightRecord, ...] = (),
) -> ControllerStack:
    """Assemble a controller stack: base + frozen records + behavior slots."""
    stack = ControllerStack(
        base=WeightSet("base", base_weights),
        leg_phase=tripod_phase_offsets(period),
    )
    for record in frozen:
        stack = stack.add_module(record.to_slot())
    for spec, weights in modules:
        stack = stack.add_module(spec.build(weights))
    return stack


# -- training scenes -------------------------------------------------------------
#
# Deliberately simple stand-ins for the training environments: a flat plate for
# the base gait, a thin plate across the path for the obstacle reflex, a
# half-width plate under the right legs for posture, a waypoint 45 degrees to
# the right for direction, a raised strip for the pipe, and an ascending
# staircase for the wall scene (the surrogate walks on box tops only).


def _plate(x, y, top, sx, sy, friction=1.0) -> Box:
    return Box(center=(x, y, top / 2.0), size=(sx, sy, top), friction=friction)


def training_scene(behavior: str) -> TerrainSpec:
    if behavior not in BEHAVIORS:
        raise KeyError(f"unknown behavior '{behavior}'")
    seconds = BEHAVIORS[behavior].rollout_seconds
    if behavior == "obstacle":
        return TerrainSpec(
            boxes=(_plate(0.75, 0.0, 0.04, 0.9, 2.0),), duration=seconds
        )
    if behavior == "posture":
        return TerrainSpec(
            boxes=(_plate(0.55, -0.33, 0.04, 1.9, 0.66),), duration=seconds
        )
    if behavior == "direction":
        return TerrainSpec(
            waypoints=(Waypoint(time=2.0, x=2.0, y=-2.0),), duration=seconds
        )
    if behavior == "pipe":
        return TerrainSpec(
            boxes=(_plate(1.1, 0.0, 0.10, 2.6, 0.34),), duration=seconds
        )
    if behavior == "wall":
        steps = tuple(
            _plate(0.55 + 0.30 * i, 0.0, 0.03 * (i + 1), 0.30, 2.0)
            for i in range(6)
        )
        return TerrainSpec(boxes=steps, duration=seconds)
    # base, high, low, narrow: flat ground; the reward shapes the stance.
    return TerrainSpec(duration=seconds)


def resolve_scene(ref: str) -> TerrainSpec:
    """Resolve 'builtin:<behavior>' or a scene file path."""
    from .terrain import load_scene

    if ref.startswith("builtin:"):
        return training_scene(ref.split(":", 1)[1])
    return load_scene(ref)
