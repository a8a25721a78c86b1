"""Closed-loop episode execution at 60 Hz.

Drives oscillator phase -> premotor activations -> gates -> motor commands ->
world step -> observation, accumulating the trajectory statistics the reward
suite consumes and a per-step log with a fixed column order.  Episodes are
fully determined by (controller, terrain, duration, episode seed); the optional
center-of-mass noise is a per-episode seeded lateral offset of the body
reference point.

An `Episode` can be snapshotted mid-run and resumed under a different
controller stack, which is how module-removal experiments compare against a
twin run that never had the module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .composer import ControllerStack, N_LEGS
from .oscillator import OscillatorParams, periodic_orbit
from .premotor import PremotorLayer, PremotorParams, activation_table, place_means
from .rewards import (
    DEFAULT_DESIRED_HEIGHT,
    SLIP_SPEED_THRESHOLD,
    EpisodeStats,
    instability,
    slippage,
)
from .robot import DEFAULT_MODEL, RobotModel
from .sensors import (
    HeadingCommand,
    IirChain,
    ObstacleSensorConfig,
    heading_gate,
    obstacle_chain,
    obstacle_gate,
    smoothing_chain,
    tilt_gate,
    wrap_angle,
)
from .terrain import TerrainSpec
from .world import CONTROL_RATE, DT, WorldState, initial_state, observe, step_world

GATE_CHANNELS = (
    "obstacle",
    "tilt_left",
    "tilt_right",
    "heading_left",
    "heading_right",
    "constant",
)
LEG_NAMES = ("l1", "r1", "l2", "r2", "l3", "r3")
DEFAULT_COM_NOISE_STD = 0.005  # m lateral, per episode


@dataclass(frozen=True)
class Controller:
    """Premotor layer, its sampled oscillator period, and the module stack."""

    layer: PremotorLayer
    orbit: np.ndarray
    stack: ControllerStack

    @property
    def period(self) -> int:
        return len(self.orbit)

    def with_stack(self, stack: ControllerStack) -> "Controller":
        return replace(self, stack=stack)


def build_controller(
    stack: ControllerStack,
    oscillator_params: OscillatorParams | None = None,
    premotor_params: PremotorParams | None = None,
    orbit: np.ndarray | None = None,
) -> Controller:
    if orbit is None:
        orbit = periodic_orbit(oscillator_params)
    layer = place_means(orbit, premotor_params or PremotorParams())
    return Controller(layer=layer, orbit=orbit, stack=stack)


@dataclass(frozen=True)
class EpisodeOptions:
    desired_height: float = DEFAULT_DESIRED_HEIGHT
    com_noise_std: float = DEFAULT_COM_NOISE_STD
    sensor: ObstacleSensorConfig = ObstacleSensorConfig()
    slip_threshold: float = SLIP_SPEED_THRESHOLD
    log_contributions: bool = False


@dataclass(frozen=True)
class EpisodeSnapshot:
    world: WorldState
    chains: dict
    step_index: int


class EpisodeLog:
    """Per-step log; fixed column order, written as tab-separated text."""

    def __init__(self, n_steps: int, slot_names: tuple[str, ...]):
        self.slot_names = slot_names
        self.step = np.zeros(n_steps, dtype=int)
        self.pose = np.zeros((n_steps, 6))  # x y z yaw pitch roll
        self.clearance = np.zeros(n_steps)
        self.contact = np.zeros((n_steps, N_LEGS), dtype=bool)
        self.tip_speed = np.zeros((n_steps, N_LEGS))
        self.gates = np.zeros((n_steps, 5))  # obstacle, tilt l/r, heading l/r
        self.commands = np.zeros((n_steps, N_LEGS * 3))
        self.contributions = np.zeros((n_steps, len(slot_names)))
        self.length = 0

    def columns(self) -> list[str]:
        cols = ["step", "time_s", "x", "y", "z", "yaw", "pitch", "roll", "clearance"]
        cols += [f"contact_{leg}" for leg in LEG_NAMES]
        cols += [f"tip_speed_{leg}" for leg in LEG_NAMES]
        cols += [
            "gate_obstacle",
            "gate_tilt_left",
            "gate_tilt_right",
            "gate_heading_left",
            "gate_heading_right",
        ]
        cols += [f"cmd_{leg}_j{j}" for leg in LEG_NAMES for j in range(3)]
        cols += [f"contrib_{name}" for name in self.slot_names]
        return cols

    def write_tsv(self, path) -> None:
        n = self.length
        with open(path, "w") as fh:
            fh.write("\t".join(self.columns()) + "\n")
            for i in range(n):
                row = [str(self.step[i]), repr(self.step[i] * DT)]
                row += [repr(v) for v in self.pose[i]]
                row.append(repr(self.clearance[i]))
                row += [str(int(v)) for v in self.contact[i]]
                row += [repr(v) for v in self.tip_speed[i]]
                row += [repr(v) for v in self.gates[i]]
                row += [repr(v) for v in self.commands[i]]
                row += [repr(v) for v in self.contributions[i]]
                fh.write("\t".join(row) + "\n")


class Episode:
    """One closed-loop run; single-threaded, owns all of its mutable state."""

    def __init__(
        self,
        controller: Controller,
        terrain: TerrainSpec,
        episode_seed: int = 0,
        model: RobotModel | None = None,
        options: EpisodeOptions | None = None,
        world: WorldState | None = None,
        chains: dict | None = None,
        start_step: int = 0,
    ):
        self.controller = controller
        self.stack = controller.stack
        self.terrain = terrain
        self.model = model or DEFAULT_MODEL
        self.options = options or EpisodeOptions()
        self.step_index = start_step

        self._validate_wiring()

        if world is None:
            rng = np.random.default_rng(episode_seed)
            offset = np.zeros(3)
            if self.options.com_noise_std > 0.0:
                offset[1] = rng.normal(0.0, self.options.com_noise_std)
            world = initial_state(self.model, self.terrain, offset)
        self.world = world

        if chains is None:
            chains = {
                "obstacle": obstacle_chain(),
                "tilt": smoothing_chain(),
                "heading": smoothing_chain(),
            }
        self.chains = dict(chains)

        self._act_table = activation_table(controller.layer, controller.orbit)
        self._enabled = self.stack.enabled_slots()
        self._events = sorted(self.terrain.modules, key=lambda e: e.time)
        self._next_event = 0
        # Events scheduled before a resumed start are considered already applied.
        while (
            self._next_event < len(self._events)
            and self._events[self._next_event].time <= (start_step - 1) * DT
        ):
            self._next_event += 1
        self._waypoints = sorted(self.terrain.waypoints, key=lambda w: w.time)
        self._initial_heading = (math.cos(world.yaw), math.sin(world.yaw))
        self._initial_position = world.position.copy()
        self._commands_cache: np.ndarray | None = None
        self._neutral = self.model.neutral_joints()

    # -- wiring ----------------------------------------------------------------

    def _validate_wiring(self) -> None:
        names = set(self.stack.slot_names())
        for slot in self.stack.slots:
            if slot.gate_source not in GATE_CHANNELS:
                raise ValueError(
                    f"slot '{slot.name}' wants unknown gate '{slot.gate_source}'"
                )
        for event in self.terrain.modules:
            if event.name not in names:
                raise ValueError(f"schedule references unknown module '{event.name}'")
        if self.controller.layer.params.hidden_count != self.stack.base.hidden_count:
            raise ValueError("premotor layer size does not match the base weight set")

    def snapshot(self) -> EpisodeSnapshot:
        return EpisodeSnapshot(
            world=self.world, chains=dict(self.chains), step_index=self.step_index
        )

    def set_stack(self, stack: ControllerStack) -> None:
        self.stack = stack
        self._enabled = stack.enabled_slots()
        self._commands_cache = None

    # -- stepping ----------------------------------------------------------------

    def _apply_schedule(self, now: float) -> None:
        while self._next_event < len(self._events):
            event = self._events[self._next_event]
            if event.time > now:
                break
            self.set_stack(self.stack.set_enabled(event.name, event.enabled))
            self._next_event += 1

    def _desired_yaw(self, now: float) -> float | None:
        active = None
        for wp in self._waypoints:
            if wp.time <= now:
                active = wp
            else:
                break
        if active is None:
            return None
        dx = active.x - self.world.position[0]
        dy = active.y - self.world.position[1]
        return math.atan2(dy, dx)

    def _channels(self, now: float) -> dict:
        obs = observe(self.world, self.terrain, self.model, self.options.sensor)
        chain, s1 = obstacle_gate(self.options.sensor, obs.distance, self.chains["obstacle"])
        self.chains["obstacle"] = chain
        chain, tilt_l, tilt_r = tilt_gate(obs.roll, self.chains["tilt"])
        self.chains["tilt"] = chain
        desired = self._desired_yaw(now)
        command = HeadingCommand(desired if desired is not None else obs.yaw)
        chain, head_l, head_r = heading_gate(obs.yaw, command, self.chains["heading"])
        self.chains["heading"] = chain
        return {
            "obstacle": s1,
            "tilt_left": tilt_l,
            "tilt_right": tilt_r,
            "heading_left": head_l,
            "heading_right": head_r,
            "constant": 1.0,
            "_desired_yaw": command.desired_yaw,
        }

    def _commands_for_phase(self, phase_acts: np.ndarray, gates) -> np.ndarray:
        return self._neutral + self.stack.motor_output(phase_acts, gates)

    def _leg_acts(self, step: int) -> np.ndarray:
        period = self.controller.period
        idx = (step + self.stack.leg_phase) % period
        return self._act_table[idx]

    def step_once(self) -> dict:
        """Advance one control step; returns the channel values used."""
        now = self.step_index * DT
        self._apply_schedule(now)
        channels = self._channels(now)
        acts = self._leg_acts(self.step_index)
        if self._enabled:
            gates = [channels[slot.gate_source] for slot in self._enabled]
            commands = self._commands_for_phase(acts, gates)
        else:
            # Gate-free stacks are phase-periodic: build the command table once.
            if self._commands_cache is None:
                period = self.controller.period
                cache = np.empty((period, N_LEGS, 3))
                for phase in range(period):
                    cache[phase] = self._commands_for_phase(self._leg_acts(phase), [])
                self._commands_cache = cache
            commands = self._commands_cache[self.step_index % self.controller.period]
            gates = []
        self._last_channels = channels
        self._last_commands = commands
        self._last_gates = gates
        self.world = step_world(self.world, commands, self.terrain, self.model)
        self.step_index += 1
        return channels

    # -- full runs ----------------------------------------------------------------

    def run(self, duration: float) -> tuple[EpisodeStats, EpisodeLog]:
        if not duration > 0.0:
            raise ValueError("duration must be positive")
        n_steps = int(round(duration * CONTROL_RATE))
        log = EpisodeLog(n_steps, self.stack.slot_names())
        yaw_t = np.zeros(n_steps)
        pitch_t = np.zeros(n_steps)
        roll_t = np.zeros(n_steps)
        clear_t = np.zeros(n_steps)
        width_t = np.zeros(n_steps)
        head_err_t = np.zeros(n_steps)
        executed = 0

        for i in range(n_steps):
            step_i = self.step_index
            channels = self.step_once()
            w = self.world
            ground, _ = _surface_center(self.terrain, w.position)
            clearance = w.position[2] - ground

            yaw_t[i] = w.yaw
            pitch_t[i] = w.pitch
            roll_t[i] = w.roll
            clear_t[i] = clearance
            width_t[i] = _stance_width(w)
            head_err_t[i] = abs(wrap_angle(channels["_desired_yaw"] - w.yaw))

            log.step[i] = step_i
            log.pose[i] = (*w.position, w.yaw, w.pitch, w.roll)
            log.clearance[i] = clearance
            log.contact[i] = w.contact
            log.tip_speed[i] = w.tip_speed
            log.gates[i] = (
                channels["obstacle"],
                channels["tilt_left"],
                channels["tilt_right"],
                channels["heading_left"],
                channels["heading_right"],
            )
            log.commands[i] = self._last_commands.reshape(-1)
            if self.options.log_contributions and self.stack.slots:
                acts = self._leg_acts(step_i)
                for j, name in enumerate(log.slot_names):
                    contrib = self.stack.module_contribution(
                        acts, self._last_gates, name
                    )
                    log.contributions[i, j] = float(np.sqrt(np.sum(contrib * contrib)))
            executed = i + 1
            if w.fallen:
                break

        log.length = executed
        stats = self._finalize_stats(
            executed, yaw_t, pitch_t, roll_t, clear_t, width_t, head_err_t, log
        )
        return stats, log

    def _finalize_stats(
        self, n, yaw_t, pitch_t, roll_t, clear_t, width_t, head_err_t, log
    ) -> EpisodeStats:
        w = self.world
        dx = w.position[0] - self._initial_position[0]
        dy = w.position[1] - self._initial_position[1]
        hx, hy = self._initial_heading
        distance = dx * hx + dy * hy
        if n < 2:
            instab = 0.0
            tilt_var = 0.0
        else:
            instab = instability(yaw_t[:n], pitch_t[:n], roll_t[:n], clear_t[:n])
            tilt_var = float(np.var(roll_t[:n]))
        slip = slippage(
            log.tip_speed[:n].T, log.contact[:n].T, self.options.slip_threshold
        ) if n else 0.0
        return EpisodeStats(
            distance=float(distance),
            instability=float(instab),
            height_error=abs(float(np.mean(clear_t[:n])) - self.options.desired_height)
            if n
            else 0.0,
            slippage=float(slip),
            tilt_mean=float(np.mean(np.abs(roll_t[:n]))) if n else 0.0,
            tilt_var=tilt_var,
            heading_error=float(np.mean(head_err_t[:n])) if n else 0.0,
            min_width=float(np.min(width_t[:n])) if n else 0.0,
            min_height=float(np.min(clear_t[:n])) if n else 0.0,
            ascent=float(w.position[2] - self._initial_position[2]),
        )


def _surface_center(terrain: TerrainSpec, position: np.ndarray) -> tuple[float, float]:
    from .terrain import surface_at

    h, f = surface_at(terrain, position[0], position[1])
    return float(h), float(f)


def _stance_width(world: WorldState) -> float:
    """Bounding width across leg tips, perpendicular to the heading."""
    cy, sy = math.cos(world.yaw), math.sin(world.yaw)
    rel_x = world.tips[:, 0] - world.position[0]
    rel_y = world.tips[:, 1] - world.position[1]
    lateral = -sy * rel_x + cy * rel_y
    return float(lateral.max() - lateral.min())


def run_episode(
    controller: Controller,
    terrain: TerrainSpec,
    duration: float,
    episode_seed: int,
    model: RobotModel | None = None,
    options: EpisodeOptions | None = None,
) -> tuple[EpisodeStats, EpisodeLog]:
    """Run one full episode from the standing start; see `Episode`."""
    episode = Episode(
        controller, terrain, episode_seed=episode_seed, model=model, options=options
    )
    return episode.run(duration)
