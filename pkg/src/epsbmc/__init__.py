"""Adaptive epsilon-greedy exploration by Bayesian model combination.

Expected SARSA under an epsilon-greedy policy mixes a greedy bootstrap and a
uniform bootstrap with weight epsilon. ``epsbmc`` keeps a Beta posterior over
that weight, updated online from observed returns, and uses its mean as
epsilon. The package also ships baseline schedules, tabular TD agents, three
benchmark environments and an experiment harness.
"""

from .agent import AgentConfig, greedy_rollout, run_episode
from .bayes import GammaPosterior, NormalGammaPrior, RunningMoments, gamma_posterior, model_evidence
from .config import ExperimentConfig, load_config
from .policy import Bmc, BmcState, BetaWeight, bmc_epsilon, bmc_update, make_strategy
from .runner import aggregate, run_experiment

__version__ = "0.1.0"

__all__ = [
    "AgentConfig",
    "greedy_rollout",
    "run_episode",
    "GammaPosterior",
    "NormalGammaPrior",
    "RunningMoments",
    "gamma_posterior",
    "model_evidence",
    "ExperimentConfig",
    "load_config",
    "Bmc",
    "BmcState",
    "BetaWeight",
    "bmc_epsilon",
    "bmc_update",
    "make_strategy",
    "aggregate",
    "run_experiment",
]
