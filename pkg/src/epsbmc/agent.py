"""Tabular TD learning with an epsilon-greedy behaviour policy.

Q-tables are plain ``(num_states, num_actions)`` float arrays. Argmax ties
resolve to the lowest action index everywhere, so greedy behaviour is
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .policy import Strategy

__all__ = [
    "ConstantRate",
    "DecayingRate",
    "QInit",
    "AgentConfig",
    "Transition",
    "EpisodeStats",
    "RolloutResult",
    "init_qtable",
    "egreedy_probs",
    "sample_action",
    "target_q",
    "target_uniform",
    "target_sarsa",
    "target_expected_sarsa",
    "td_update",
    "run_episode",
    "greedy_rollout",
]

BOOTSTRAPS = ("expected_sarsa", "q_learning", "sarsa")


@dataclass(frozen=True)
class ConstantRate:
    eta: float

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"learning rate must lie in (0, 1], got {self.eta}")

    def __call__(self, episode: int) -> float:
        return self.eta


@dataclass(frozen=True)
class DecayingRate:
    """``max(start * decay**episode, floor)``."""

    start: float
    decay: float
    floor: float

    def __post_init__(self):
        if not (0.0 < self.start <= 1.0 and 0.0 < self.floor <= 1.0 and 0.0 < self.decay <= 1.0):
            raise ValueError("decaying learning rate needs start, floor in (0, 1] and decay in (0, 1]")

    def __call__(self, episode: int) -> float:
        return max(self.start * self.decay**episode, self.floor)


LearningRate = Union[ConstantRate, DecayingRate]


@dataclass(frozen=True)
class QInit:
    kind: str = "zeros"
    low: float = 0.0
    high: float = 0.1

    def __post_init__(self):
        if self.kind not in ("zeros", "uniform"):
            raise ValueError(f"q_init must be 'zeros' or 'uniform', got {self.kind!r}")
        if self.kind == "uniform" and not self.low <= self.high:
            raise ValueError("uniform q_init needs low <= high")


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.99
    learning_rate: LearningRate = field(default_factory=lambda: ConstantRate(0.7))
    bootstrap: str = "expected_sarsa"
    q_init: QInit = field(default_factory=QInit)

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.bootstrap not in BOOTSTRAPS:
            raise ValueError(f"bootstrap must be one of {BOOTSTRAPS}, got {self.bootstrap!r}")


@dataclass(frozen=True)
class Transition:
    s: int
    a: int
    r: float
    s_next: int
    done: bool


@dataclass
class EpisodeStats:
    ret: float
    steps: int
    epsilon: float
    done: bool
    epsilon_trace: list[float] | None = None


@dataclass(frozen=True)
class RolloutResult:
    ret: float
    steps: int
    done: bool


def init_qtable(num_states: int, num_actions: int, q_init: QInit, rng: np.random.Generator) -> np.ndarray:
    if num_states < 1 or num_actions < 1:
        raise ValueError("Q-table dimensions must be positive")
    if q_init.kind == "zeros":
        return np.zeros((num_states, num_actions))
    return rng.uniform(q_init.low, q_init.high, size=(num_states, num_actions))


def egreedy_probs(q_row, epsilon: float) -> np.ndarray:
    row = np.asarray(q_row, dtype=float)
    n = row.shape[0]
    probs = np.full(n, epsilon / n)
    probs[int(np.argmax(row))] += 1.0 - epsilon
    return probs


def sample_action(q_row, epsilon: float, rng: np.random.Generator) -> int:
    """Uniform random action with probability ``epsilon``, else the greedy one."""
    if rng.random() < epsilon:
        return int(rng.integers(len(q_row)))
    return int(np.argmax(q_row))


def target_q(q: np.ndarray, t: Transition, gamma: float) -> float:
    if t.done:
        return t.r
    return t.r + gamma * float(q[t.s_next].max())


def target_uniform(q: np.ndarray, t: Transition, gamma: float) -> float:
    if t.done:
        return t.r
    return t.r + gamma * float(q[t.s_next].mean())


def target_sarsa(q: np.ndarray, t: Transition, a_next: int, gamma: float) -> float:
    if t.done:
        return t.r
    return t.r + gamma * float(q[t.s_next, a_next])


def target_expected_sarsa(q: np.ndarray, t: Transition, epsilon: float, gamma: float) -> float:
    if t.done:
        return t.r
    row = q[t.s_next]
    return t.r + gamma * float(egreedy_probs(row, epsilon) @ row)


def td_update(q: np.ndarray, s: int, a: int, target: float, eta: float) -> np.ndarray:
    """Move ``q[s, a]`` a fraction ``eta`` toward ``target``, in place."""
    q[s, a] = (1.0 - eta) * q[s, a] + eta * target
    return q


def run_episode(
    env,
    q: np.ndarray,
    strategy: Strategy,
    config: AgentConfig,
    rng: np.random.Generator,
    max_steps: int,
    episode: int = 0,
    env_rng: np.random.Generator | None = None,
    record_epsilon: bool = False,
) -> EpisodeStats:
    """One training episode of expected SARSA with an adaptive epsilon.

    ``q`` and ``strategy`` are updated in place. Every step the greedy,
    uniform and expected-SARSA returns are formed from the pre-update
    Q-table. The configured bootstrap drives the Q update, while the
    strategy always observes the expected-SARSA return.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    env_rng = rng if env_rng is None else env_rng
    gamma = config.gamma
    eta = config.learning_rate(episode)
    bootstrap = config.bootstrap
    n_actions = q.shape[1]
    trace = [] if record_epsilon else None

    s = env.reset(env_rng)
    eps = strategy.epsilon(episode)
    a = sample_action(q[s], eps, rng)
    ret = 0.0
    steps = 0
    done = False
    while steps < max_steps:
        if trace is not None:
            trace.append(eps)
        s_next, r, done = env.step(a, env_rng)
        if done:
            g_q = g_u = g_exp = r
        else:
            row = q[s_next]
            best = float(row.max())
            mean = float(row.sum()) / n_actions
            g_q = r + gamma * best
            g_u = r + gamma * mean
            # sum_a' pi(a'|s') Q(s', a') regrouped into the greedy/uniform mixture
            g_exp = (1.0 - eps) * g_q + eps * g_u

        if bootstrap == "expected_sarsa":
            target = g_exp
        elif bootstrap == "q_learning":
            target = g_q
        else:
            # a_{t+1} comes from the current policy and is carried into the next step
            a_next = 0 if done else sample_action(q[s_next], eps, rng)
            target = r if done else r + gamma * float(q[s_next, a_next])

        td_error = target - float(q[s, a])
        td_update(q, s, a, target, eta)
        strategy.observe(g_q, g_u, g_exp, td_error)
        ret += r
        steps += 1
        if done:
            break
        eps = strategy.epsilon(episode)
        if bootstrap != "sarsa":
            a_next = sample_action(q[s_next], eps, rng)
        s, a = s_next, a_next

    return EpisodeStats(ret, steps, strategy.epsilon(episode), done, trace)


def greedy_rollout(env, q: np.ndarray, rng: np.random.Generator, max_steps: int) -> RolloutResult:
    """Run one episode acting greedily on ``q`` without learning."""
    policy = q.argmax(axis=1).tolist()
    s = env.reset(rng)
    ret = 0.0
    done = False
    steps = 0
    while steps < max_steps:
        s, r, done = env.step(policy[s], rng)
        ret += r
        steps += 1
        if done:
            break
    return RolloutResult(ret, steps, done)
