"""Figure rendering for run directories.

Reads the delimited outputs that learn/evaluate produce and saves matplotlib
figures next to them (or into a chosen directory): the per-iteration reward
curve with its across-seed band, per-module contribution traces, gate channel
traces, and the commanded joint trajectories of one leg.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _read_tsv(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split("\t")
        data = np.loadtxt(fh, delimiter="\t", ndmin=2)
    return header, data


def render_reward_curve(trace_all_path, out_path) -> None:
    header, data = _read_tsv(trace_all_path)
    iterations = data[:, 0]
    mean = data[:, header.index("mean")]
    sd = data[:, header.index("sd")]
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.plot(iterations, mean, color="tab:red", lw=1.6, label="mean return")
    ax.fill_between(
        iterations, mean - sd, mean + sd, color="tab:red", alpha=0.25, lw=0, label="SD"
    )
    ax.set_xlabel("iteration")
    ax.set_ylabel("return")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_contributions(episode_path, out_path) -> bool:
    header, data = _read_tsv(episode_path)
    contrib_cols = [i for i, name in enumerate(header) if name.startswith("contrib_")]
    if not contrib_cols:
        return False
    time_s = data[:, header.index("time_s")]
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    for col in contrib_cols:
        ax.plot(time_s, data[:, col], lw=1.2, label=header[col].removeprefix("contrib_"))
    ax.set_xlabel("time [s]")
    ax.set_ylabel("module contribution")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return True


def render_gates(episode_path, out_path) -> None:
    header, data = _read_tsv(episode_path)
    time_s = data[:, header.index("time_s")]
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    for name in header:
        if name.startswith("gate_"):
            ax.plot(time_s, data[:, header.index(name)], lw=1.0, label=name[5:])
    ax.set_xlabel("time [s]")
    ax.set_ylabel("gate value")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_joint_trajectories(episode_path, out_path, leg: str = "l1") -> None:
    header, data = _read_tsv(episode_path)
    time_s = data[:, header.index("time_s")]
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    for joint in range(3):
        col = header.index(f"cmd_{leg}_j{joint}")
        ax.plot(time_s, data[:, col], lw=1.2, label=f"J{joint}")
    ax.set_xlabel("time [s]")
    ax.set_ylabel(f"{leg} joint command [rad]")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_run(run_dir, out_dir=None) -> list[str]:
    """Render every figure the run directory's outputs support."""
    run = Path(run_dir)
    out = Path(out_dir) if out_dir else run
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    trace_all = run / "trace_all.tsv"
    if trace_all.exists():
        target = out / "reward_curve.png"
        render_reward_curve(trace_all, target)
        written.append(str(target))
    for seed_trace in sorted(run.glob("seed_*/trace.tsv")):
        label = seed_trace.parent.name
        target = out / f"reward_curve_{label}.png"
        _render_single_trace(seed_trace, target)
        written.append(str(target))

    episode = run / "episode.tsv"
    if episode.exists():
        target = out / "contributions.png"
        if render_contributions(episode, target):
            written.append(str(target))
        target = out / "gates.png"
        render_gates(episode, target)
        written.append(str(target))
        target = out / "joint_trajectories.png"
        render_joint_trajectories(episode, target)
        written.append(str(target))
    return written


def _render_single_trace(trace_path, out_path) -> None:
    header, data = _read_tsv(trace_path)
    iterations = data[:, 0]
    mean = data[:, header.index("mean_return")]
    sd = data[:, header.index("sd_return")]
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.plot(iterations, mean, color="tab:blue", lw=1.6)
    ax.fill_between(iterations, mean - sd, mean + sd, color="tab:blue", alpha=0.25, lw=0)
    ax.set_xlabel("iteration")
    ax.set_ylabel("return over rollouts")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
