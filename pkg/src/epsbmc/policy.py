"""Strategies that produce epsilon for the epsilon-greedy behaviour policy.

Two families live here:

* stateless schedules indexed by episode number (constant, geometric, power);
* stateful adaptive rules fed with per-step learning signals: VDBE, driven by
  TD-error magnitudes, and the Bayesian model combination rule (BMC), which
  keeps a Beta posterior over the weight of the uniform return model and
  reports its mean as epsilon.

The pure update functions (``bmc_update``, ``vdbe_update``, ...) operate on
immutable state values. The ``*Strategy`` classes wrap them behind the small
interface the training loop uses.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Union

from .bayes import (
    GammaPosterior,
    NormalGammaPrior,
    RunningMoments,
    gamma_posterior,
    model_log_evidence,
    moments_update,
)

__all__ = [
    "BetaWeight",
    "Constant",
    "Geometric",
    "Power",
    "Vdbe",
    "Bmc",
    "ScheduleSpec",
    "VdbeState",
    "BmcState",
    "bmc_epsilon",
    "moment_match",
    "bmc_update",
    "schedule_epsilon",
    "vdbe_update",
    "make_strategy",
    "ScheduleStrategy",
    "VdbeStrategy",
    "BmcStrategy",
]

# below this the matched Beta variance carries no usable information
_MIN_MATCHED_VARIANCE = 1e-300


@dataclass(frozen=True)
class BetaWeight:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"Beta parameters must be positive, got ({self.alpha}, {self.beta})")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


# -- schedule specifications -------------------------------------------------


@dataclass(frozen=True)
class Constant:
    c: float

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise ValueError(f"constant epsilon must lie in [0, 1], got {self.c}")


@dataclass(frozen=True)
class Geometric:
    """``0.5 * rho**episode``."""

    rho: float

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")


@dataclass(frozen=True)
class Power:
    """``0.5 * (episode + 1)**(-exponent)``."""

    exponent: float

    def __post_init__(self):
        if not self.exponent > 0:
            raise ValueError(f"power exponent must be > 0, got {self.exponent}")


@dataclass(frozen=True)
class Vdbe:
    """Value-difference based exploration.

    ``delta=None`` resolves to ``1 / num_actions`` when the strategy is built.
    """

    sigma: float
    delta: float | None = None
    eps0: float = 0.5

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.delta is not None and not 0.0 < self.delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        if not 0.0 <= self.eps0 <= 1.0:
            raise ValueError(f"eps0 must lie in [0, 1], got {self.eps0}")


@dataclass(frozen=True)
class Bmc:
    prior: NormalGammaPrior = field(default_factory=NormalGammaPrior)
    alpha0: float = 1.0
    beta0: float = 1.01
    eps_min: float = 0.0

    def __post_init__(self):
        if not (self.alpha0 > 0 and self.beta0 > 0):
            raise ValueError("alpha0 and beta0 must be > 0")
        if not 0.0 <= self.eps_min < 1.0:
            raise ValueError(f"eps_min must lie in [0, 1), got {self.eps_min}")


ScheduleSpec = Union[Constant, Geometric, Power, Vdbe, Bmc]


def schedule_epsilon(spec: ScheduleSpec, episode: int) -> float:
    """Epsilon of a stateless schedule at ``episode`` (0-based)."""
    if episode < 0:
        raise ValueError(f"episode must be nonnegative, got {episode}")
    if isinstance(spec, Constant):
        return spec.c
    if isinstance(spec, Geometric):
        return 0.5 * spec.rho**episode
    if isinstance(spec, Power):
        return 0.5 * (episode + 1) ** (-spec.exponent)
    raise TypeError(f"{type(spec).__name__} is stateful; it has no closed-form schedule")


# -- VDBE ---------------------------------------------------------------------


@dataclass(frozen=True)
class VdbeState:
    epsilon: float


def vdbe_update(state: VdbeState, td_error: float, sigma: float, delta: float) -> VdbeState:
    # (1 - e^-x) / (1 + e^-x) == tanh(x / 2)
    f = math.tanh(0.5 * abs(td_error) / sigma)
    eps = delta * f + (1.0 - delta) * state.epsilon
    return VdbeState(min(max(eps, 0.0), 1.0))


# -- Bayesian model combination -----------------------------------------------


@dataclass(frozen=True)
class BmcState:
    weight: BetaWeight
    moments: RunningMoments
    prior: NormalGammaPrior
    eps_min: float = 0.0

    @classmethod
    def initial(cls, spec: Bmc) -> "BmcState":
        return cls(BetaWeight(spec.alpha0, spec.beta0), RunningMoments(), spec.prior, spec.eps_min)


def bmc_epsilon(state: BmcState) -> float:
    return max(state.weight.mean, state.eps_min)


def moment_match(weight: BetaWeight, e_u: float, e_q: float) -> BetaWeight | None:
    """Project the one-step Bayes posterior of the mixture weight onto a Beta.

    The exact posterior after observing evidences ``e_u`` (uniform model) and
    ``e_q`` (greedy model) is ``(e_u*w + e_q*(1-w)) * Beta(w | alpha, beta)``,
    a two-component mixture of ``Beta(alpha+1, beta)`` and
    ``Beta(alpha, beta+1)``. Its first two moments are matched by a Beta.

    The mean and variance are evaluated from the mixture representation,
    which is algebraically the same closed form as the usual
    ``m, v, r = (m - v) / (v - m**2)`` recipe but never subtracts ``m**2``
    from the raw second moment, so it stays accurate when ``alpha + beta``
    is large. The result only depends on the ratio ``e_u / e_q``.

    Returns ``None`` when the step carries no information (both evidences
    zero, or a collapsed matched variance).
    """
    a, b = weight.alpha, weight.beta
    norm = e_u * a + e_q * b
    if not norm > 0 or not math.isfinite(norm):
        return None
    pi_u = e_u * a / norm
    pi_q = e_q * b / norm
    s1 = a + b + 1.0
    s2 = a + b + 2.0
    mean = (a + pi_u) / s1
    one_minus_mean = (b + pi_q) / s1
    var = (a * b + pi_u * b + pi_q * a) / (s1 * s1 * s2) + pi_u * pi_q / (s1 * s1)
    if not var > _MIN_MATCHED_VARIANCE:
        return None
    r = mean * one_minus_mean / var - 1.0
    if not r > 0:
        return None
    new_a = mean * r
    new_b = one_minus_mean * r
    if not (new_a > 0 and new_b > 0):
        return None
    return BetaWeight(new_a, new_b)


# relative distance gap treated as a tie: a few roundings of (1 - eps) g_q + eps g_u
TIE_RTOL = 8 * sys.float_info.epsilon


def bmc_log_evidences(post: GammaPosterior, g_q: float, g_u: float, d: float) -> tuple[float, float]:
    """Log predictive densities of ``d`` under the uniform and greedy models."""
    return model_log_evidence(g_u, post, d), model_log_evidence(g_q, post, d)


def bmc_update(state: BmcState, g_q: float, g_u: float, d: float) -> BmcState:
    """Absorb one return observation ``d`` with model predictions ``g_q``/``g_u``.

    The moments always advance. The weight is left untouched when the
    evidence step is degenerate, and when ``d`` is equidistant from both
    predictions up to the rounding error of forming ``d`` from them: equal
    evidence is a fixed point of the update, and at epsilon = 1/2 a one-ulp
    tilt would otherwise decide which way epsilon runs.
    """
    for name, value in (("g_q", g_q), ("g_u", g_u), ("d", d)):
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")
    moments = moments_update(state.moments, d)
    weight = state.weight
    gap = abs(d - g_q) - abs(d - g_u)
    if abs(gap) <= TIE_RTOL * max(abs(g_q), abs(g_u), abs(d)):
        return BmcState(weight, moments, state.prior, state.eps_min)
    post = gamma_posterior(state.prior, moments)
    log_u, log_q = bmc_log_evidences(post, g_q, g_u, d)
    top = max(log_u, log_q)
    if top != -math.inf:
        matched = moment_match(weight, math.exp(log_u - top), math.exp(log_q - top))
        if matched is not None:
            weight = matched
    return BmcState(weight, moments, state.prior, state.eps_min)


# -- strategy objects used by the training loop ------------------------------


class ScheduleStrategy:
    """Episode-indexed schedule; ignores per-step signals."""

    def __init__(self, spec: Constant | Geometric | Power):
        self.spec = spec

    def epsilon(self, episode: int) -> float:
        return schedule_epsilon(self.spec, episode)

    def observe(self, g_q: float, g_u: float, d: float, td_error: float) -> None:
        pass

    @property
    def state(self):
        return self.spec


class VdbeStrategy:
    """Global (not per-state) VDBE, updated at every environment step."""

    def __init__(self, spec: Vdbe, num_actions: int):
        self.sigma = spec.sigma
        self.delta = spec.delta if spec.delta is not None else 1.0 / num_actions
        self.state = VdbeState(spec.eps0)

    def epsilon(self, episode: int) -> float:
        return self.state.epsilon

    def observe(self, g_q: float, g_u: float, d: float, td_error: float) -> None:
        self.state = vdbe_update(self.state, td_error, self.sigma, self.delta)


class BmcStrategy:
    def __init__(self, spec: Bmc):
        self.state = BmcState.initial(spec)

    def epsilon(self, episode: int) -> float:
        return bmc_epsilon(self.state)

    def observe(self, g_q: float, g_u: float, d: float, td_error: float) -> None:
        self.state = bmc_update(self.state, g_q, g_u, d)


Strategy = Union[ScheduleStrategy, VdbeStrategy, BmcStrategy]


def make_strategy(spec: ScheduleSpec, num_actions: int) -> Strategy:
    if isinstance(spec, Bmc):
        return BmcStrategy(spec)
    if isinstance(spec, Vdbe):
        return VdbeStrategy(spec, num_actions)
    if isinstance(spec, (Constant, Geometric, Power)):
        return ScheduleStrategy(spec)
    raise TypeError(f"unknown schedule spec {spec!r}")
