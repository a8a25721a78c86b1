"""Command-line front end: learn, evaluate, bench-pibb, inspect, report.

Exit codes: 0 success, 1 configuration error (bad config/scene/weight files),
2 runtime failure.  The HEXGAIT_RUN_ROOT environment variable sets the
directory that relative output paths are resolved against.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .behaviors import BEHAVIORS
from .composer import WeightFormatError, load_weights
from .experiment import ConfigError, LearnConfig, evaluate, learn, load_schedule
from .pibb import sphere_benchmark
from .terrain import SceneError

RUN_ROOT_ENV = "HEXGAIT_RUN_ROOT"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _out_path(path: str) -> str:
    root = os.environ.get(RUN_ROOT_ENV)
    if root and not os.path.isabs(path):
        return str(Path(root) / path)
    return path


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"bad seed list '{text}'") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hexgait",
        description="Modular CPG-RBF locomotion: learning and evaluation harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_learn = sub.add_parser("learn", help="optimize one behavior with PI^BB")
    p_learn.add_argument("--config", help="JSON config file (flags override fields)")
    p_learn.add_argument("--behavior", choices=sorted(BEHAVIORS))
    p_learn.add_argument("--scene", help="scene file path or builtin:<behavior>")
    p_learn.add_argument("--iterations", type=int)
    p_learn.add_argument("--seeds", help="comma-separated seed list, e.g. 0,1,2")
    p_learn.add_argument("--rollouts", type=int)
    p_learn.add_argument("--sigma", type=float, dest="exploration_std")
    p_learn.add_argument("--gamma", type=float, dest="decay")
    p_learn.add_argument("--weighting", type=float)
    p_learn.add_argument("--duration", type=float)
    p_learn.add_argument("--base", dest="base_weights")
    p_learn.add_argument("--frozen", nargs="*", dest="frozen_weights")
    p_learn.add_argument("--out", dest="out_dir")
    p_learn.add_argument("--com-noise", type=float, dest="com_noise_std")
    p_learn.add_argument("--workers", type=int, dest="max_workers")
    p_learn.add_argument(
        "--convergence-window", type=int, dest="convergence_window"
    )

    p_eval = sub.add_parser("evaluate", help="replay an episode from saved weights")
    p_eval.add_argument("--scene", required=True)
    p_eval.add_argument("--weights", nargs="+", required=True)
    p_eval.add_argument("--schedule")
    p_eval.add_argument("--duration", type=float)
    p_eval.add_argument("--seed", type=int)
    p_eval.add_argument("--com-noise", type=float, default=0.005)
    p_eval.add_argument("--out", default="runs/evaluate")

    p_bench = sub.add_parser(
        "bench-pibb", help="sphere convergence oracle for the optimizer"
    )
    p_bench.add_argument("--dim", type=int, default=60)
    p_bench.add_argument("--iterations", type=int, default=300)
    p_bench.add_argument("--seeds", default="0,1,2,3,4")
    p_bench.add_argument("--sigma", type=float, default=0.05)
    p_bench.add_argument("--gamma", type=float, default=0.995)
    p_bench.add_argument("--weighting", type=float, default=10.0)
    p_bench.add_argument("--rollouts", type=int, default=8)

    p_inspect = sub.add_parser("inspect", help="describe a weight file")
    p_inspect.add_argument("--weights", required=True)

    p_report = sub.add_parser(
        "report", help="render figures from a run directory's delimited outputs"
    )
    p_report.add_argument("--run", required=True, help="learn or evaluate output dir")
    p_report.add_argument("--out", help="figure directory (default: the run dir)")

    return parser


def _cmd_learn(args) -> int:
    if args.config:
        config = LearnConfig.from_json(args.config)
    elif args.behavior:
        config = LearnConfig(behavior=args.behavior)
    else:
        raise ConfigError("learn needs --config or --behavior")
    overrides = {}
    for field_name in (
        "behavior",
        "scene",
        "iterations",
        "rollouts",
        "exploration_std",
        "decay",
        "weighting",
        "duration",
        "base_weights",
        "out_dir",
        "com_noise_std",
        "max_workers",
        "convergence_window",
    ):
        value = getattr(args, field_name, None)
        if value is not None:
            overrides[field_name] = value
    if args.seeds is not None:
        overrides["seeds"] = _parse_seeds(args.seeds)
    if args.frozen_weights is not None:
        overrides["frozen_weights"] = tuple(args.frozen_weights)
    if overrides:
        doc = {name: getattr(config, name) for name in config.__dataclass_fields__}
        doc.update(overrides)
        config = LearnConfig.from_dict(doc)
    config = LearnConfig.from_dict(
        {
            **{name: getattr(config, name) for name in config.__dataclass_fields__},
            "out_dir": _out_path(config.out_dir),
        }
    )
    manifest, _ = learn(config)
    print(f"wrote {config.out_dir}/manifest.json")
    print(f"simulated seconds per seed: {manifest.simulated_seconds_per_seed}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    if args.schedule:
        load_schedule(args.schedule)  # fail fast on malformed schedules
    outputs = evaluate(
        scene_ref=args.scene,
        weight_paths=args.weights,
        schedule_path=args.schedule,
        out_dir=_out_path(args.out),
        duration=args.duration,
        episode_seed=args.seed,
        com_noise_std=args.com_noise,
    )
    for name, path in outputs.items():
        print(f"{name}: {path}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    seeds = _parse_seeds(args.seeds)
    ratios = []
    for seed in seeds:
        result = sphere_benchmark(
            seed,
            dim=args.dim,
            iterations=args.iterations,
            exploration_std=args.sigma,
            decay_rate=args.gamma,
            weighting=args.weighting,
            rollouts=args.rollouts,
        )
        ratio = result.final_distance / result.initial_distance
        ratios.append(ratio)
        print(
            f"seed {seed}: initial {result.initial_distance:.4f}"
            f" final {result.final_distance:.4f} ratio {ratio:.4f}"
        )
    print(f"median ratio: {float(np.median(ratios)):.4f}")
    return EXIT_OK


def _cmd_inspect(args) -> int:
    record = load_weights(args.weights)
    ws = record.weight_set
    doc = {
        "name": ws.name,
        "hidden_count": ws.hidden_count,
        "joints": ws.weights.shape[1],
        "kind": "base" if record.is_base() else "module",
        "gate_source": record.gate_source,
        "weight_norm": float(np.sqrt(np.sum(ws.weights**2))),
        "weight_min": float(ws.weights.min()),
        "weight_max": float(ws.weights.max()),
    }
    if record.routing is not None:
        doc["routing"] = [[int(v) for v in row] for row in record.routing]
    print(json.dumps(doc, indent=1))
    return EXIT_OK


def _cmd_report(args) -> int:
    from .report import render_run

    written = render_run(args.run, args.out)
    for path in written:
        print(f"figure: {path}")
    if not written:
        print("no renderable outputs found", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "learn": _cmd_learn,
        "evaluate": _cmd_evaluate,
        "bench-pibb": _cmd_bench,
        "inspect": _cmd_inspect,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, SceneError, WeightFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failures
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
