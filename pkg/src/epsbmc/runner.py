"""Seeded multi-run experiments and across-run aggregation."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .agent import greedy_rollout, init_qtable, run_episode
from .config import ExperimentConfig
from .policy import make_strategy

__all__ = ["MetricsRecord", "AggregateCurve", "RunError", "run_single", "run_experiment", "aggregate"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricsRecord:
    run: int
    episode: int
    train_return: float
    train_steps: int
    test_metric: float
    epsilon: float


@dataclass(frozen=True)
class AggregateCurve:
    episode: tuple[int, ...]
    mean: tuple[float, ...]
    stderr: tuple[float, ...]
    n: tuple[int, ...]

    def __len__(self):
        return len(self.episode)


class RunError(RuntimeError):
    def __init__(self, run: int, seed: int, cause: BaseException):
        super().__init__(f"run {run} (seed {seed}) failed: {cause!r}")
        self.run = run
        self.seed = seed


def _run_rngs(seed: int) -> tuple[np.random.Generator, ...]:
    # env, agent, q-table init and test streams are independent children
    children = np.random.SeedSequence(seed).spawn(4)
    return tuple(np.random.default_rng(c) for c in children)


def _test(env, q, config: ExperimentConfig, rng) -> float:
    trials = 1 if config.test_protocol == "single_episode" else config.test_trials
    total = 0.0
    for _ in range(trials):
        result = greedy_rollout(env, q, rng, config.max_steps)
        total += env.test_metric(result.ret, result.steps)
    return total / trials


def run_single(config: ExperimentConfig, run: int) -> list[MetricsRecord]:
    """Train and test one independent run; seeded by ``base_seed + run``."""
    seed = config.base_seed + run
    try:
        env_rng, agent_rng, init_rng, test_rng = _run_rngs(seed)
        env = config.make_env()
        q = init_qtable(env.num_states, env.num_actions, config.agent.q_init, init_rng)
        strategy = make_strategy(config.strategy, env.num_actions)
        records = []
        streak = 0
        for episode in range(config.episodes):
            stats = run_episode(
                env, q, strategy, config.agent, agent_rng, config.max_steps, episode, env_rng=env_rng
            )
            metric = _test(env, q, config, test_rng)
            records.append(
                MetricsRecord(run, episode, float(stats.ret), stats.steps, float(metric), float(stats.epsilon))
            )
            if config.early_stop is not None:
                streak = streak + 1 if env.is_perfect(metric) else 0
                if streak >= config.early_stop:
                    log.info("run %d stopped early after episode %d", run, episode)
                    break
        return records
    except Exception as exc:
        raise RunError(run, seed, exc) from exc


def run_experiment(config: ExperimentConfig, parallelism: int = 1) -> list[MetricsRecord]:
    """All runs of ``config``, ordered by (run, episode).

    Runs share no state, so the output does not depend on ``parallelism``.
    """
    if parallelism < 1:
        raise ValueError(f"parallelism must be >= 1, got {parallelism}")
    runs = range(config.runs)
    if parallelism == 1 or config.runs == 1:
        per_run = [run_single(config, r) for r in runs]
    else:
        with ProcessPoolExecutor(max_workers=min(parallelism, config.runs)) as pool:
            per_run = list(pool.map(run_single, [config] * config.runs, runs))
    return [rec for recs in per_run for rec in recs]


def aggregate(records: list[MetricsRecord], field: str = "test_metric") -> AggregateCurve:
    """Per-episode mean and standard error across runs.

    Runs that stopped early carry their last observed value forward so every
    episode averages over the same set of runs.
    """
    by_run: dict[int, dict[int, float]] = {}
    for rec in records:
        by_run.setdefault(rec.run, {})[rec.episode] = float(getattr(rec, field))
    if not by_run:
        return AggregateCurve((), (), (), ())
    n_episodes = 1 + max(ep for values in by_run.values() for ep in values)
    table = np.empty((len(by_run), n_episodes))
    for i, run in enumerate(sorted(by_run)):
        values = by_run[run]
        last = None
        for ep in range(n_episodes):
            if ep in values:
                last = values[ep]
            elif last is None:
                raise ValueError(f"run {run} has no record for episode {ep}")
            table[i, ep] = last
    n = table.shape[0]
    mean = table.mean(axis=0)
    if n > 1:
        stderr = table.std(axis=0, ddof=1) / np.sqrt(n)
    else:
        stderr = np.zeros(n_episodes)
    return AggregateCurve(
        tuple(range(n_episodes)),
        tuple(float(v) for v in mean),
        tuple(float(v) for v in stderr),
        (n,) * n_episodes,
    )
