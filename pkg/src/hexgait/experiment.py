"""Staged learning runs, evaluation episodes, and their on-disk artifacts.

`learn` optimizes one behavior's weight matrix per seed with everything
previously learned loaded frozen, writing per-seed weight files, reward traces,
per-rollout sub-reward breakdowns, and a run manifest.  `evaluate` replays one
long episode from saved weight sets with an online module enable/disable
schedule.  All outputs are plain text with deterministic formatting: repeating
a run with the same seed reproduces every byte (the manifest's wall-clock
field is the one measured quantity).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from threading import Lock

import numpy as np

from . import __version__
from .behaviors import Behavior, get_behavior, resolve_scene
from .composer import (
    ControllerStack,
    WeightRecord,
    WeightSet,
    load_weights,
    save_weights,
    tripod_phase_offsets,
)
from .episode import Controller, Episode, EpisodeOptions, build_controller
from .oscillator import periodic_orbit
from .pibb import Convergence, PibbConfig, PibbResult, run
from .pibb import episode_seed as pibb_episode_seed
from .premotor import PremotorParams, place_means
from .rewards import STAT_FIELDS
from .robot import DEFAULT_MODEL, RobotModel
from .terrain import ModuleEvent, SceneError, TerrainSpec


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass(frozen=True)
class LearnConfig:
    behavior: str
    scene: str = ""  # empty -> builtin scene for the behavior
    iterations: int = 100
    seeds: tuple[int, ...] = (0,)
    rollouts: int = 8
    exploration_std: float | None = None  # None -> behavior default
    decay: float = 0.995
    weighting: float = 10.0
    duration: float | None = None  # None -> behavior default
    base_weights: str = ""  # path; empty only when learning the base itself
    frozen_weights: tuple[str, ...] = ()
    out_dir: str = "runs/learn"
    com_noise_std: float = 0.005
    max_workers: int = 1
    convergence_window: int = 0  # 0 -> run the full iteration budget

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")

    @classmethod
    def from_dict(cls, doc: dict) -> "LearnConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        doc = dict(doc)
        for key in ("seeds", "frozen_weights"):
            if key in doc:
                doc[key] = tuple(doc[key])
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "LearnConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(doc)

    def resolved(self) -> "LearnConfig":
        """Fill behavior-default sigma/duration/scene into explicit values."""
        behavior = get_behavior(self.behavior)
        out = self
        if out.exploration_std is None:
            out = replace(out, exploration_std=behavior.exploration_std)
        if out.duration is None:
            out = replace(out, duration=behavior.rollout_seconds)
        if not out.scene:
            out = replace(out, scene=f"builtin:{behavior.name}")
        return out


@dataclass
class RunManifest:
    config: dict
    code_version: str
    seed_outputs: dict
    simulated_seconds_per_seed: float
    simulated_seconds_total: float
    wall_clock_seconds: float

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "code_version": self.code_version,
            "seed_outputs": self.seed_outputs,
            "simulated_seconds_per_seed": self.simulated_seconds_per_seed,
            "simulated_seconds_total": self.simulated_seconds_total,
            "wall_clock_seconds": self.wall_clock_seconds,
        }

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")


@dataclass(frozen=True)
class _LearnSetup:
    behavior: Behavior
    scene: TerrainSpec
    controller_period: int
    orbit: np.ndarray
    frozen: tuple[WeightRecord, ...]
    base_weights: np.ndarray
    learn_base: bool
    hidden_count: int


def _prepare(config: LearnConfig, model: RobotModel) -> _LearnSetup:
    behavior = get_behavior(config.behavior)
    try:
        scene = resolve_scene(config.scene)
    except (OSError, SceneError, KeyError) as exc:
        raise ConfigError(f"cannot load scene '{config.scene}': {exc}") from exc
    orbit = periodic_orbit()
    hidden = PremotorParams().hidden_count
    learn_base = behavior.name == "base"
    if learn_base:
        base = np.zeros((hidden, 3))
        if config.base_weights:
            base = _load_base(config.base_weights, hidden)
    else:
        if not config.base_weights:
            raise ConfigError(
                f"behavior '{behavior.name}' needs --base with the frozen base weights"
            )
        base = _load_base(config.base_weights, hidden)
    frozen = []
    for path in config.frozen_weights:
        record = _load_record(path)
        if record.is_base():
            raise ConfigError(f"{path}: is a base set, not a module")
        if record.weight_set.hidden_count != hidden:
            raise ConfigError(
                f"{path}: hidden count {record.weight_set.hidden_count},"
                f" controller uses {hidden}"
            )
        frozen.append(record)
    return _LearnSetup(
        behavior=behavior,
        scene=scene,
        controller_period=len(orbit),
        orbit=orbit,
        frozen=tuple(frozen),
        base_weights=base,
        learn_base=learn_base,
        hidden_count=hidden,
    )


def _load_record(path) -> WeightRecord:
    if not Path(path).exists():
        raise ConfigError(f"weight file not found: {path}")
    return load_weights(path)


def _load_base(path, hidden: int) -> np.ndarray:
    record = _load_record(path)
    if not record.is_base():
        raise ConfigError(f"{path}: expected a base set (no routing)")
    if record.weight_set.hidden_count != hidden:
        raise ConfigError(
            f"{path}: hidden count {record.weight_set.hidden_count},"
            f" controller uses {hidden}"
        )
    return record.weight_set.weights


def _stack_for(setup: _LearnSetup, params: np.ndarray) -> ControllerStack:
    matrix = params.reshape(setup.hidden_count, 3)
    if setup.learn_base:
        base = matrix
        module_weights = None
    else:
        base = setup.base_weights
        module_weights = matrix
    stack = ControllerStack(
        base=WeightSet("base", base),
        leg_phase=tripod_phase_offsets(setup.controller_period),
    )
    for record in setup.frozen:
        stack = stack.add_module(record.to_slot())
    if module_weights is not None:
        for spec in setup.behavior.slots:
            stack = stack.add_module(spec.build(module_weights))
    return stack


def _controller_for(setup: _LearnSetup, params: np.ndarray) -> Controller:
    layer = place_means(setup.orbit, PremotorParams())
    return Controller(layer=layer, orbit=setup.orbit, stack=_stack_for(setup, params))


def _format_float(value) -> str:
    return repr(float(value))


def learn(
    config: LearnConfig, model: RobotModel | None = None
) -> tuple[RunManifest, dict]:
    """Run PI^BB for one behavior across all configured seeds.

    Returns the manifest plus {seed: PibbResult}.  Writes, per seed:
    weights.json, trace.tsv, rollouts.tsv; plus trace_all.tsv and
    manifest.json at the run root.
    """
    config = config.resolved()
    model = model or DEFAULT_MODEL
    setup = _prepare(config, model)
    out_root = Path(config.out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    options = EpisodeOptions(com_noise_std=config.com_noise_std)
    duration = float(config.duration)
    started = time.perf_counter()

    results: dict[int, PibbResult] = {}
    seed_outputs: dict[str, dict] = {}
    for seed in config.seeds:
        seed_dir = out_root / f"seed_{seed}"
        seed_dir.mkdir(parents=True, exist_ok=True)
        rollout_rows: list[tuple] = []
        row_lock = Lock()
        # Episode seeds are injective over (iteration, rollout) for practical
        # purposes; the map recovers the indices for the rollout log.
        seed_map = {
            pibb_episode_seed(seed, it, k): (it, k)
            for it in range(config.iterations)
            for k in range(config.rollouts)
        }

        def evaluator(params: np.ndarray, episode_seed: int) -> float:
            controller = _controller_for(setup, params)
            episode = Episode(
                controller,
                setup.scene,
                episode_seed=episode_seed,
                model=model,
                options=options,
            )
            stats, _ = episode.run(duration)
            reward = setup.behavior.evaluate_return(stats)
            with row_lock:
                rollout_rows.append((*seed_map[episode_seed], stats, reward))
            return reward

        pibb_config = PibbConfig(
            exploration_std=float(config.exploration_std),
            rollouts=config.rollouts,
            decay=config.decay,
            weighting=config.weighting,
            seed=seed,
        )
        convergence = (
            Convergence(window=config.convergence_window)
            if config.convergence_window > 0
            else None
        )
        params0 = np.zeros(setup.hidden_count * 3)
        result = run(
            pibb_config,
            evaluator,
            params0,
            config.iterations,
            convergence=convergence,
            max_workers=config.max_workers,
        )
        results[seed] = result

        weights_path = seed_dir / "weights.json"
        matrix = result.params.reshape(setup.hidden_count, 3)
        if setup.learn_base:
            save_weights(WeightRecord(WeightSet("base", matrix)), weights_path)
        else:
            spec = setup.behavior.slots[0]
            save_weights(
                WeightRecord(
                    weight_set=WeightSet(setup.behavior.name, matrix),
                    routing=spec.routing,
                    gate_source=spec.gate_source,
                ),
                weights_path,
            )

        trace_path = seed_dir / "trace.tsv"
        with open(trace_path, "w") as fh:
            fh.write("iteration\tmean_return\tsd_return\tsigma_current\n")
            for stat in result.trace:
                fh.write(
                    f"{stat.iteration}\t{_format_float(stat.mean_reward)}\t"
                    f"{_format_float(stat.sd_reward)}\t{_format_float(stat.sigma)}\n"
                )

        rollout_path = seed_dir / "rollouts.tsv"
        rollout_rows.sort(key=lambda row: (row[0], row[1]))
        with open(rollout_path, "w") as fh:
            header = ["iteration", "rollout", "behavior", *STAT_FIELDS, "return"]
            fh.write("\t".join(header) + "\n")
            for it, k, stats, reward in rollout_rows:
                row = [str(it), str(k), setup.behavior.name]
                row += [_format_float(v) for v in stats.as_array()]
                row.append(_format_float(reward))
                fh.write("\t".join(row) + "\n")

        seed_outputs[str(seed)] = {
            "weights": str(weights_path),
            "trace": str(trace_path),
            "rollouts": str(rollout_path),
            "converged_at": result.converged_at,
        }

    _write_aggregate_trace(out_root / "trace_all.tsv", config.seeds, results)

    manifest = RunManifest(
        config=_config_snapshot(config),
        code_version=__version__,
        seed_outputs=seed_outputs,
        simulated_seconds_per_seed=config.iterations * config.rollouts * duration,
        simulated_seconds_total=(
            config.iterations * config.rollouts * duration * len(config.seeds)
        ),
        wall_clock_seconds=time.perf_counter() - started,
    )
    manifest.write(out_root / "manifest.json")
    return manifest, results


def _config_snapshot(config: LearnConfig) -> dict:
    doc = {}
    for name in config.__dataclass_fields__:
        value = getattr(config, name)
        doc[name] = list(value) if isinstance(value, tuple) else value
    return doc


def _write_aggregate_trace(path, seeds, results) -> None:
    iteration_count = max((len(results[s].trace) for s in seeds), default=0)
    with open(path, "w") as fh:
        head = ["iteration"] + [f"return_seed_{s}" for s in seeds] + ["mean", "sd"]
        fh.write("\t".join(head) + "\n")
        for it in range(iteration_count):
            values = []
            for s in seeds:
                trace = results[s].trace
                values.append(trace[it].mean_reward if it < len(trace) else float("nan"))
            arr = np.array(values)
            row = [str(it)]
            row += [_format_float(v) for v in values]
            row += [_format_float(np.nanmean(arr)), _format_float(np.nanstd(arr))]
            fh.write("\t".join(row) + "\n")


# -- evaluation --------------------------------------------------------------------


def load_schedule(path) -> tuple[ModuleEvent, ...]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return tuple(
            ModuleEvent(
                time=float(e["time"]), name=str(e["name"]), enabled=bool(e["enabled"])
            )
            for e in doc
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad schedule entry: {exc}") from exc


def evaluate(
    scene_ref: str,
    weight_paths,
    schedule_path: str | None = None,
    out_dir: str = "runs/evaluate",
    duration: float | None = None,
    episode_seed: int | None = None,
    com_noise_std: float = 0.005,
    model: RobotModel | None = None,
) -> dict:
    """Replay one episode from saved weight sets; logs commands and contributions."""
    model = model or DEFAULT_MODEL
    try:
        scene = resolve_scene(scene_ref)
    except (OSError, SceneError, KeyError) as exc:
        raise ConfigError(f"cannot load scene '{scene_ref}': {exc}") from exc

    base = None
    modules: list[WeightRecord] = []
    for path in weight_paths:
        record = _load_record(path)
        if record.is_base():
            if base is not None:
                raise ConfigError("more than one base weight set supplied")
            base = record
        else:
            modules.append(record)
    if base is None:
        raise ConfigError("no base weight set among the supplied weights")

    if schedule_path:
        scene = replace(scene, modules=scene.modules + load_schedule(schedule_path))
    known = {m.weight_set.name for m in modules}
    for event in scene.modules:
        if event.name not in known:
            raise ConfigError(f"schedule references unknown module '{event.name}'")

    orbit = periodic_orbit()
    stack = ControllerStack(
        base=base.weight_set, leg_phase=tripod_phase_offsets(len(orbit))
    )
    for record in modules:
        stack = stack.add_module(record.to_slot())
    controller = build_controller(stack, orbit=orbit)

    options = EpisodeOptions(com_noise_std=com_noise_std, log_contributions=True)
    seed = scene.seed if episode_seed is None else episode_seed
    episode = Episode(
        controller, scene, episode_seed=seed, model=model, options=options
    )
    stats, log = episode.run(duration if duration is not None else scene.duration)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "episode.tsv"
    log.write_tsv(log_path)
    stats_path = out / "stats.json"
    stats_doc = {name: getattr(stats, name) for name in STAT_FIELDS}
    stats_doc["steps"] = log.length
    stats_doc["episode_seed"] = seed
    stats_path.write_text(json.dumps(stats_doc, indent=1) + "\n")
    return {"episode": str(log_path), "stats": str(stats_path)}
