"""Benchmark environments behind one episodic interface.

Every environment exposes ``num_states``, ``num_actions``, ``reset(rng)`` and
``step(action, rng) -> (state, reward, done)`` over integer state indices,
plus ``test_metric`` / ``is_perfect`` / ``higher_is_better`` describing how
greedy test episodes are scored.
"""

from .cartpole import CartPole, CartPoleSpec, cartpole_step, discretize
from .gridworld import GridWorld, GridWorldSpec, bfs_optimal_steps, gridworld_step
from .supplychain import SupplyChain, SupplyChainSpec, supplychain_step

__all__ = [
    "CartPole",
    "CartPoleSpec",
    "cartpole_step",
    "discretize",
    "GridWorld",
    "GridWorldSpec",
    "bfs_optimal_steps",
    "gridworld_step",
    "SupplyChain",
    "SupplyChainSpec",
    "supplychain_step",
]
