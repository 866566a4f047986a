"""Cart-pole balancing with a fixed 3x3x4x3 state discretisation.

Dynamics are the classic Barto-Sutton-Anderson equations integrated with a
single explicit Euler step per action. The continuous state is
``(x, x_dot, theta, theta_dot)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

CState = tuple[float, float, float, float]


@dataclass(frozen=True)
class CartPoleSpec:
    gravity: float = 9.8
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    half_length: float = 0.5
    force: float = 10.0
    dt: float = 0.02
    x_threshold: float = 2.4
    theta_threshold: float = 12 * 2 * math.pi / 360
    init_range: float = 0.05
    # discretiser: (half-range, bins) per dimension, in state order
    x_bins: tuple[float, int] = (2.4, 3)
    x_dot_bins: tuple[float, int] = (3.0, 3)
    theta_bins: tuple[float, int] = (12 * 2 * math.pi / 360, 4)
    theta_dot_bins: tuple[float, int] = (3.5, 3)

    def __post_init__(self):
        for name in ("x_bins", "x_dot_bins", "theta_bins", "theta_dot_bins"):
            half, n = getattr(self, name)
            if not (half > 0 and int(n) == n and n >= 1):
                raise ValueError(f"{name} needs a positive half-range and bin count")
            object.__setattr__(self, name, (float(half), int(n)))

    @property
    def bins(self) -> tuple[tuple[float, int], ...]:
        return (self.x_bins, self.x_dot_bins, self.theta_bins, self.theta_dot_bins)

    @property
    def num_states(self) -> int:
        return math.prod(n for _, n in self.bins)


LEFT, RIGHT = 0, 1


def cartpole_step(spec: CartPoleSpec, s: CState, action: int) -> tuple[CState, float, bool]:
    x, x_dot, theta, theta_dot = s
    force = spec.force if action == RIGHT else -spec.force
    total_mass = spec.cart_mass + spec.pole_mass
    pml = spec.pole_mass * spec.half_length
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    temp = (force + pml * theta_dot * theta_dot * sin_t) / total_mass
    theta_acc = (spec.gravity * sin_t - cos_t * temp) / (
        spec.half_length * (4.0 / 3.0 - spec.pole_mass * cos_t * cos_t / total_mass)
    )
    x_acc = temp - pml * theta_acc * cos_t / total_mass
    nxt = (
        x + spec.dt * x_dot,
        x_dot + spec.dt * x_acc,
        theta + spec.dt * theta_dot,
        theta_dot + spec.dt * theta_acc,
    )
    done = abs(nxt[0]) > spec.x_threshold or abs(nxt[2]) > spec.theta_threshold
    return nxt, 1.0, done


def discretize(s: CState, spec: CartPoleSpec) -> int:
    """Mixed-radix index of the equal-width cell containing ``s`` (clamped)."""
    index = 0
    for value, (half, n) in zip(s, spec.bins):
        k = int((value + half) / (2.0 * half) * n)
        index = index * n + min(max(k, 0), n - 1)
    return index


class CartPole:
    num_actions = 2
    higher_is_better = True

    def __init__(self, spec: CartPoleSpec | None = None, max_steps: int = 200):
        self.spec = spec or CartPoleSpec()
        self.num_states = self.spec.num_states
        self.max_steps = max_steps
        self.cstate: CState = (0.0, 0.0, 0.0, 0.0)

    def reset(self, rng) -> int:
        lo = self.spec.init_range
        self.cstate = tuple(float(v) for v in rng.uniform(-lo, lo, size=4))
        return discretize(self.cstate, self.spec)

    def step(self, action: int, rng) -> tuple[int, float, bool]:
        self.cstate, reward, done = cartpole_step(self.spec, self.cstate, action)
        return discretize(self.cstate, self.spec), reward, done

    def test_metric(self, ret: float, steps: int) -> float:
        return float(steps)

    def is_perfect(self, metric: float) -> bool:
        return metric >= self.max_steps
