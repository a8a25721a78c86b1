"""Modular CPG-RBF hexapod locomotion: controller, learning, surrogate sim."""

__version__ = "0.1.0"

from .behaviors import BEHAVIORS, Behavior, build_stack, get_behavior, training_scene
from .composer import (
    ControllerStack,
    ModuleSlot,
    WeightRecord,
    WeightSet,
    leg_activations,
    load_weights,
    save_weights,
)
from .episode import Controller, Episode, EpisodeOptions, build_controller, run_episode
from .oscillator import OscillatorParams, OscillatorState, periodic_orbit
from .pibb import Convergence, PibbConfig, sphere_benchmark
from .premotor import PremotorLayer, PremotorParams, activations, place_means
from .rewards import EpisodeStats, RewardWeights, behavior_return
from .robot import DEFAULT_MODEL, RobotModel
from .terrain import Box, TerrainSpec, dump_scene, load_scene
from .world import WorldState, initial_state, observe, step_world

__all__ = [
    "BEHAVIORS",
    "Behavior",
    "Box",
    "Controller",
    "ControllerStack",
    "Convergence",
    "DEFAULT_MODEL",
    "Episode",
    "EpisodeOptions",
    "EpisodeStats",
    "ModuleSlot",
    "OscillatorParams",
    "OscillatorState",
    "PibbConfig",
    "PremotorLayer",
    "PremotorParams",
    "RewardWeights",
    "RobotModel",
    "TerrainSpec",
    "WeightRecord",
    "WeightSet",
    "WorldState",
    "activations",
    "behavior_return",
    "build_controller",
    "build_stack",
    "dump_scene",
    "get_behavior",
    "initial_state",
    "leg_activations",
    "load_scene",
    "load_weights",
    "observe",
    "periodic_orbit",
    "place_means",
    "run_episode",
    "save_weights",
    "sphere_benchmark",
    "step_world",
    "training_scene",
]
