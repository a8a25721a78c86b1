"""Black-box policy improvement: reward-weighted averaging of Gaussian noise.

Per iteration, K parameter perturbations are drawn, each rolled out for a
scalar return, returns are min-max normalized and exponentiated into a
probability simplex, and the parameters move by the probability-weighted noise
average.  The exploration variance then decays by a constant factor.  All
randomness derives from (seed, iteration), so serial and parallel rollout
execution produce bit-identical trajectories as long as results are reduced in
rollout order — which `run` guarantees.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

DEFAULT_ROLLOUTS = 8
DEFAULT_DECAY = 0.995
DEFAULT_WEIGHTING = 10.0

# Namespacing salts so the per-iteration noise streams, per-rollout episode
# seeds, and benchmark target draws never share an underlying sequence.
_NOISE_KEY = 0
_EPISODE_KEY = 1
_TARGET_KEY = 2


class RolloutError(RuntimeError):
    """Evaluator failure, tagged with the offending iteration and rollout."""

    def __init__(self, iteration: int, rollout: int, cause: BaseException):
        super().__init__(f"rollout {rollout} of iteration {iteration} failed: {cause}")
        self.iteration = iteration
        self.rollout = rollout


@dataclass(frozen=True)
class PibbConfig:
    exploration_std: float
    rollouts: int = DEFAULT_ROLLOUTS
    decay: float = DEFAULT_DECAY
    weighting: float = DEFAULT_WEIGHTING
    seed: int = 0

    def __post_init__(self):
        if self.rollouts < 2:
            raise ValueError(f"rollouts must be >= 2, got {self.rollouts}")
        if not self.exploration_std > 0.0:
            raise ValueError("exploration_std must be positive")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError(f"decay must be in (0, 1], got {self.decay}")


@dataclass
class RolloutRecord:
    noise: np.ndarray
    reward: float
    probability: float | None = None


@dataclass(frozen=True)
class IterationStats:
    iteration: int
    mean_reward: float
    sd_reward: float
    sigma: float


@dataclass(frozen=True)
class Convergence:
    """Stop once the windowed mean return improves by under rel_improvement."""

    window: int = 10
    rel_improvement: float = 0.01


@dataclass(frozen=True)
class PibbResult:
    params: np.ndarray
    trace: tuple[IterationStats, ...]
    converged_at: int | None = None


def iteration_rng(seed: int, iteration: int) -> np.random.Generator:
    return np.random.default_rng([seed, _NOISE_KEY, iteration])


def episode_seed(seed: int, iteration: int, rollout: int) -> int:
    ss = np.random.SeedSequence([seed, _EPISODE_KEY, iteration, rollout])
    return int(ss.generate_state(1, np.uint64)[0])


def sample_noise(
    config: PibbConfig, param_count: int, rng: np.random.Generator
) -> np.ndarray:
    """K zero-mean Gaussian noise vectors at the current exploration std."""
    if param_count <= 0:
        raise ValueError(f"param_count must be positive, got {param_count}")
    return rng.normal(0.0, config.exploration_std, size=(config.rollouts, param_count))


def weight_rollouts(
    records: Sequence[RolloutRecord], weighting: float
) -> list[RolloutRecord]:
    """Fill each record's probability from min-max normalized returns.

    Equal returns degenerate to uniform weights (unbiased zero-mean update).
    """
    rewards = np.array([r.reward for r in records], dtype=float)
    if not np.isfinite(rewards).all():
        raise ValueError(f"non-finite rollout returns: {rewards}")
    rmin, rmax = rewards.min(), rewards.max()
    if rmax == rmin:
        scores = np.ones_like(rewards)
    else:
        scores = np.exp(weighting * (rewards - rmin) / (rmax - rmin))
    probs = scores / scores.sum()
    return [
        replace(rec, probability=float(p)) for rec, p in zip(records, probs)
    ]


def update(params: np.ndarray, records: Sequence[RolloutRecord]) -> np.ndarray:
    """params + sum_k P_k * eps_k, accumulated in rollout order."""
    out = np.array(params, dtype=float)
    for rec in records:
        if rec.probability is None:
            raise ValueError("records must be weighted before update")
        out = out + rec.probability * rec.noise
    return out


def decay(config: PibbConfig) -> PibbConfig:
    """One per-iteration decay step: exploration variance scaled by `decay`."""
    return replace(
        config, exploration_std=config.exploration_std * math.sqrt(config.decay)
    )


def _converged(means: list[float], criterion: Convergence) -> bool:
    w = criterion.window
    if len(means) < 2 * w:
        return False
    recent = float(np.mean(means[-w:]))
    previous = float(np.mean(means[-2 * w : -w]))
    return (recent - previous) < criterion.rel_improvement * abs(recent)


def run(
    config: PibbConfig,
    evaluator: Callable[[np.ndarray, int], float],
    params0: np.ndarray,
    iterations: int,
    convergence: Convergence | None = None,
    max_workers: int = 1,
) -> PibbResult:
    """Full optimization loop; evaluator(params, episode_seed) -> return.

    Rollouts within an iteration may run on a thread pool; results are reduced
    in rollout-index order, so the outcome is identical either way.
    """
    params = np.array(params0, dtype=float)
    cfg = config
    trace: list[IterationStats] = []
    means: list[float] = []
    converged_at = None

    def eval_one(it: int, k: int, candidate: np.ndarray) -> float:
        try:
            return float(evaluator(candidate, episode_seed(cfg.seed, it, k)))
        except RolloutError:
            raise
        except Exception as exc:
            raise RolloutError(it, k, exc) from exc

    pool = ThreadPoolExecutor(max_workers=max_workers) if max_workers > 1 else None
    try:
        for it in range(iterations):
            noise = sample_noise(cfg, params.size, iteration_rng(cfg.seed, it))
            candidates = [params + noise[k] for k in range(cfg.rollouts)]
            if pool is None:
                rewards = [eval_one(it, k, c) for k, c in enumerate(candidates)]
            else:
                futures = [
                    pool.submit(eval_one, it, k, c) for k, c in enumerate(candidates)
                ]
                rewards = [f.result() for f in futures]
            records = [
                RolloutRecord(noise=noise[k], reward=rewards[k])
                for k in range(cfg.rollouts)
            ]
            records = weight_rollouts(records, cfg.weighting)
            params = update(params, records)
            rewards_arr = np.array(rewards)
            trace.append(
                IterationStats(
                    iteration=it,
                    mean_reward=float(rewards_arr.mean()),
                    sd_reward=float(rewards_arr.std()),
                    sigma=cfg.exploration_std,
                )
            )
            means.append(trace[-1].mean_reward)
            cfg = decay(cfg)
            if convergence is not None and _converged(means, convergence):
                converged_at = it
                break
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
    return PibbResult(params=params, trace=tuple(trace), converged_at=converged_at)


# -- convergence oracle --------------------------------------------------------


@dataclass(frozen=True)
class SphereResult:
    initial_distance: float
    final_distance: float
    trace: tuple[IterationStats, ...]


def sphere_benchmark(
    seed: int,
    dim: int = 60,
    iterations: int = 300,
    exploration_std: float = 0.05,
    decay_rate: float = DEFAULT_DECAY,
    weighting: float = DEFAULT_WEIGHTING,
    rollouts: int = DEFAULT_ROLLOUTS,
) -> SphereResult:
    """Maximize -(distance to a hidden target)^2 from a zero start.

    The target sits 0.5 away from the init in every coordinate (random signs),
    mirroring the policy-learning setup where each synapse starts a fixed
    offset from its useful value.
    """
    rng = np.random.default_rng([seed, _TARGET_KEY])
    target = rng.choice([-0.5, 0.5], size=dim)
    start = np.zeros(dim)

    def objective(w: np.ndarray, _episode_seed: int) -> float:
        return -float(np.sum((w - target) ** 2))

    config = PibbConfig(
        exploration_std=exploration_std,
        rollouts=rollouts,
        decay=decay_rate,
        weighting=weighting,
        seed=seed,
    )
    result = run(config, objective, start, iterations)
    return SphereResult(
        initial_distance=float(np.linalg.norm(start - target)),
        final_distance=float(np.linalg.norm(result.params - target)),
        trace=result.trace,
    )
