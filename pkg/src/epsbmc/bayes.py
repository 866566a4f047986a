"""Conjugate machinery for the return-precision model.

Returns observed during learning are summarised by running moments. Those
moments drive the gamma posterior over the return precision, and
integrating the precision out gives a Student-t predictive density used as
the evidence for each candidate return model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "RunningMoments",
    "NormalGammaPrior",
    "GammaPosterior",
    "StudentTParams",
    "moments_update",
    "gamma_posterior",
    "student_t_log_density",
    "model_log_evidence",
    "model_evidence",
]

_LOG_PI = math.log(math.pi)


@dataclass(frozen=True)
class RunningMoments:
    """Online count, mean and sum of squared deviations (Welford)."""

    count: int = 0
    mean: float = 0.0
    sum_sq_dev: float = 0.0

    @property
    def variance(self) -> float:
        """Population variance; zero until two observations have been seen."""
        if self.count <= 1:
            return 0.0
        return self.sum_sq_dev / self.count


def moments_update(m: RunningMoments, x: float) -> RunningMoments:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"observation must be finite, got {x!r}")
    count = m.count + 1
    delta = x - m.mean
    mean = m.mean + delta / count
    sum_sq_dev = m.sum_sq_dev + delta * (x - mean)
    # guard against a -0.0 / tiny negative from cancellation
    return RunningMoments(count, mean, max(sum_sq_dev, 0.0))


@dataclass(frozen=True)
class NormalGammaPrior:
    mu0: float = 0.0
    tau0: float = 1.0
    a0: float = 500.0
    b0: float = 500.0

    def __post_init__(self):
        for name in ("tau0", "a0", "b0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if not math.isfinite(self.mu0):
            raise ValueError(f"mu0 must be finite, got {self.mu0!r}")


@dataclass(frozen=True)
class GammaPosterior:
    """Gamma(a, b) over the precision, rate parameterisation."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"gamma parameters must be positive, got a={self.a}, b={self.b}")


@dataclass(frozen=True)
class StudentTParams:
    location: float
    precision: float
    dof: float

    def __post_init__(self):
        if not (self.precision > 0 and self.dof > 0):
            raise ValueError("Student-t precision and dof must be positive")

    @classmethod
    def from_posterior(cls, location: float, post: GammaPosterior) -> "StudentTParams":
        return cls(location, post.a / post.b, 2.0 * post.a)


def gamma_posterior(prior: NormalGammaPrior, m: RunningMoments) -> GammaPosterior:
    """Marginal posterior of the precision after ``m.count`` observations.

    ``a = a0 + t/2`` and
    ``b = b0 + t/2 * (var + tau0 / (tau0 + t) * (mean - mu0)**2)``
    with the population variance of the observations.
    """
    t = m.count
    if t == 0:
        return GammaPosterior(prior.a0, prior.b0)
    half_t = 0.5 * t
    shrink = prior.tau0 / (prior.tau0 + t)
    dev = m.mean - prior.mu0
    b = prior.b0 + half_t * (m.variance + shrink * dev * dev)
    return GammaPosterior(prior.a0 + half_t, b)


def student_t_log_density(p: StudentTParams, x: float) -> float:
    """Log density of the location/precision/dof Student-t at ``x``."""
    nu = p.dof
    z = x - p.location
    return (
        math.lgamma(0.5 * nu + 0.5)
        - math.lgamma(0.5 * nu)
        + 0.5 * (math.log(p.precision) - math.log(nu) - _LOG_PI)
        - (0.5 * nu + 0.5) * math.log1p(p.precision * z * z / nu)
    )


def model_log_evidence(g_model: float, post: GammaPosterior, d: float) -> float:
    """Log predictive density of observing ``d`` under a model centred at ``g_model``."""
    return student_t_log_density(StudentTParams.from_posterior(g_model, post), d)


def model_evidence(g_model: float, post: GammaPosterior, d: float) -> float:
    return math.exp(model_log_evidence(g_model, post, d))
