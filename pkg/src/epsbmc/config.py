"""Experiment configuration files.

Configs are TOML documents. Every setting has a dotted path such as
``agent.gamma`` or ``env.gridworld.subgoals``; nested tables and dotted keys
are interchangeable. The optional ``sweep`` table maps dotted paths to lists
of values and expands into one experiment per grid point. See
``docs/config.md`` for the full key reference.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Union

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .agent import AgentConfig, ConstantRate, DecayingRate, QInit
from .bayes import NormalGammaPrior
from .envs import CartPole, CartPoleSpec, GridWorld, GridWorldSpec, SupplyChain, SupplyChainSpec
from .policy import Bmc, Constant, Geometric, Power, ScheduleSpec, Vdbe

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "read_toml", "parse_config", "expand_sweep", "flatten"]

ENV_KINDS = ("gridworld", "cartpole", "supplychain")
STRATEGY_KINDS = ("constant", "geometric", "power", "vdbe", "bmc")
TEST_PROTOCOLS = ("single_episode", "averaged")

# per-domain defaults for the tabular agent and the test protocol
DOMAIN_DEFAULTS: dict[str, dict[str, Any]] = {
    "gridworld": {
        "agent.gamma": 0.99,
        "agent.learning_rate": 0.7,
        "agent.q_init": "uniform",
        "test.protocol": "single_episode",
    },
    "cartpole": {
        "agent.gamma": 0.95,
        "agent.learning_rate.start": 0.5,
        "agent.learning_rate.decay": 0.99,
        "agent.learning_rate.floor": 0.01,
        "agent.q_init": "zeros",
        "test.protocol": "averaged",
    },
    "supplychain": {
        "agent.gamma": 0.95,
        "agent.learning_rate": 0.6,
        "agent.q_init": "uniform",
        "test.protocol": "averaged",
    },
}
# Beta prior strength on epsilon; beta0 defaults to alpha0 + 0.01
BMC_ALPHA0 = {"gridworld": 1.0, "cartpole": 10.0, "supplychain": 1000.0}

_ENV_SPECS = {"gridworld": GridWorldSpec, "cartpole": CartPoleSpec, "supplychain": SupplyChainSpec}
_STRATEGY_KEYS = {
    "constant": {"c"},
    "geometric": {"rho"},
    "power": {"exponent"},
    "vdbe": {"sigma", "delta", "eps0"},
    "bmc": {"mu0", "tau0", "a0", "b0", "alpha0", "beta0", "eps_min"},
}
_TOP_KEYS = {"name", "episodes", "runs", "base_seed", "max_steps"}
_AGENT_KEYS = {
    "agent.gamma",
    "agent.bootstrap",
    "agent.learning_rate",
    "agent.learning_rate.start",
    "agent.learning_rate.decay",
    "agent.learning_rate.floor",
    "agent.q_init",
    "agent.q_init_range",
}
_TEST_KEYS = {"test.protocol", "test.trials", "early_stop.consecutive_perfect"}


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending dotted key."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


EnvSpec = Union[GridWorldSpec, CartPoleSpec, SupplyChainSpec]


@dataclass(frozen=True)
class ExperimentConfig:
    env_kind: str
    env_spec: EnvSpec
    agent: AgentConfig
    strategy: ScheduleSpec
    episodes: int
    runs: int
    base_seed: int = 0
    max_steps: int = 200
    test_protocol: str = "single_episode"
    test_trials: int = 10
    early_stop: int | None = None
    name: str = "experiment"

    def make_env(self):
        if self.env_kind == "gridworld":
            return GridWorld(self.env_spec)
        if self.env_kind == "cartpole":
            return CartPole(self.env_spec, self.max_steps)
        return SupplyChain(self.env_spec)


def flatten(table: dict, prefix: str = "") -> dict[str, Any]:
    flat = {}
    for key, value in table.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten(value, path + "."))
        else:
            flat[path] = value
    return flat


def _number(flat, path, default=None, *, integer=False):
    value = flat.get(path, default)
    if value is None:
        raise ConfigError(path, "is required")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(path, f"must be finite, got {value!r}")
    return float(value)


def _choice(flat, path, choices, default=None):
    value = flat.get(path, default)
    if value not in choices:
        raise ConfigError(path, f"expected one of {list(choices)}, got {value!r}")
    return value


def _build(path, factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from None


def _env_spec(flat, kind) -> EnvSpec:
    prefix = f"env.{kind}."
    spec_cls = _ENV_SPECS[kind]
    allowed = {f.name for f in fields(spec_cls)}
    kwargs = {}
    for path, value in flat.items():
        if not path.startswith("env.") or path == "env.kind":
            continue
        if not path.startswith(prefix):
            raise ConfigError(path, f"does not apply to env.kind = {kind!r}")
        key = path[len(prefix):]
        if key not in allowed:
            raise ConfigError(path, f"unknown {kind} setting; expected one of {sorted(allowed)}")
        kwargs[key] = _as_tuple(value)
    return _build(f"env.{kind}", spec_cls, **kwargs)


def _as_tuple(value):
    if isinstance(value, list):
        return tuple(_as_tuple(v) for v in value)
    return value


def _agent(flat, kind) -> AgentConfig:
    gamma = _number(flat, "agent.gamma")
    if "agent.learning_rate" in flat:
        if any(k.startswith("agent.learning_rate.") for k in flat):
            raise ConfigError("agent.learning_rate", "give either a constant or start/decay/floor, not both")
        rate = _build("agent.learning_rate", ConstantRate, _number(flat, "agent.learning_rate"))
    else:
        rate = _build(
            "agent.learning_rate",
            DecayingRate,
            _number(flat, "agent.learning_rate.start"),
            _number(flat, "agent.learning_rate.decay"),
            _number(flat, "agent.learning_rate.floor"),
        )
    init_kind = _choice(flat, "agent.q_init", ("zeros", "uniform"))
    lo_hi = flat.get("agent.q_init_range", [0.0, 0.1])
    if not (isinstance(lo_hi, (list, tuple)) and len(lo_hi) == 2):
        raise ConfigError("agent.q_init_range", f"expected [low, high], got {lo_hi!r}")
    q_init = _build("agent.q_init_range", QInit, init_kind, float(lo_hi[0]), float(lo_hi[1]))
    bootstrap = _choice(flat, "agent.bootstrap", ("expected_sarsa", "q_learning", "sarsa"), "expected_sarsa")
    return _build("agent", AgentConfig, gamma, rate, bootstrap, q_init)


def _strategy(flat, env_kind) -> ScheduleSpec:
    kind = _choice(flat, "strategy.kind", STRATEGY_KINDS)
    allowed = _STRATEGY_KEYS[kind]
    for path in flat:
        if path.startswith("strategy.") and path != "strategy.kind" and path[9:] not in allowed:
            raise ConfigError(path, f"not a setting of strategy.kind = {kind!r}")
    if kind == "constant":
        return _build("strategy.c", Constant, _number(flat, "strategy.c"))
    if kind == "geometric":
        return _build("strategy.rho", Geometric, _number(flat, "strategy.rho"))
    if kind == "power":
        return _build("strategy.exponent", Power, _number(flat, "strategy.exponent"))
    if kind == "vdbe":
        delta = flat.get("strategy.delta")
        return _build(
            "strategy",
            Vdbe,
            _number(flat, "strategy.sigma"),
            None if delta is None else _number(flat, "strategy.delta"),
            _number(flat, "strategy.eps0", 0.5),
        )
    prior = _build(
        "strategy",
        NormalGammaPrior,
        _number(flat, "strategy.mu0", 0.0),
        _number(flat, "strategy.tau0", 1.0),
        _number(flat, "strategy.a0", 500.0),
        _number(flat, "strategy.b0", 500.0),
    )
    alpha0 = _number(flat, "strategy.alpha0", BMC_ALPHA0[env_kind])
    beta0 = _number(flat, "strategy.beta0", alpha0 + 0.01)
    return _build("strategy", Bmc, prior, alpha0, beta0, _number(flat, "strategy.eps_min", 0.0))


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a (possibly nested) config mapping; ``sweep`` is ignored here."""
    flat = {k: v for k, v in flatten(data).items() if not k.startswith("sweep.")}
    kind = _choice(flat, "env.kind", ENV_KINDS)
    user_rate = any(k.startswith("agent.learning_rate") for k in flat)
    for key, value in DOMAIN_DEFAULTS[kind].items():
        if key.startswith("agent.learning_rate") and user_rate:
            continue
        flat.setdefault(key, value)

    for path in flat:
        if path in _TOP_KEYS or path in _AGENT_KEYS or path in _TEST_KEYS:
            continue
        if path.startswith(("env.", "strategy.")):
            continue
        raise ConfigError(path, "unknown setting")

    episodes = _number(flat, "episodes", integer=True)
    runs = _number(flat, "runs", integer=True)
    max_steps = _number(flat, "max_steps", 200, integer=True)
    for path, value in (("episodes", episodes), ("runs", runs), ("max_steps", max_steps)):
        if value < 1:
            raise ConfigError(path, f"must be >= 1, got {value}")
    trials = _number(flat, "test.trials", 10, integer=True)
    if trials < 1:
        raise ConfigError("test.trials", f"must be >= 1, got {trials}")
    early = flat.get("early_stop.consecutive_perfect")
    if early is not None:
        early = _number(flat, "early_stop.consecutive_perfect", integer=True)
        if early < 1:
            raise ConfigError("early_stop.consecutive_perfect", f"must be >= 1, got {early}")
    name = flat.get("name", "experiment")
    if not isinstance(name, str):
        raise ConfigError("name", f"expected a string, got {name!r}")

    return ExperimentConfig(
        env_kind=kind,
        env_spec=_env_spec(flat, kind),
        agent=_agent(flat, kind),
        strategy=_strategy(flat, kind),
        episodes=episodes,
        runs=runs,
        base_seed=_number(flat, "base_seed", 0, integer=True),
        max_steps=max_steps,
        test_protocol=_choice(flat, "test.protocol", TEST_PROTOCOLS),
        test_trials=trials,
        early_stop=early,
        name=name,
    )


def read_toml(path: str | Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"malformed TOML: {exc}") from None


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(read_toml(path))


def _set_path(table: dict, path: str, value) -> None:
    *parents, leaf = path.split(".")
    for key in parents:
        table = table.setdefault(key, {})
        if not isinstance(table, dict):
            raise ConfigError(path, "cannot override a non-table value")
    table[leaf] = value


def expand_sweep(data: dict) -> list[tuple[dict[str, Any], ExperimentConfig]]:
    """One ``(grid point, config)`` pair per element of the sweep grid.

    Grid points are the cartesian product of the ``sweep`` lists, in the
    order the keys appear in the file.
    """
    grid = flatten(data.get("sweep", {}))
    for path, values in grid.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.{path}", "expected a non-empty list of values")
    base = {k: v for k, v in data.items() if k != "sweep"}
    points = []
    for combo in itertools.product(*grid.values()):
        point = dict(zip(grid.keys(), combo))
        variant = _deep_copy(base)
        flat = flatten(variant)
        for path, value in point.items():
            # drop any existing value so a nested table can't shadow the override
            for existing in [k for k in flat if k == path or k.startswith(path + ".")]:
                _delete_path(variant, existing)
            _set_path(variant, path, value)
        points.append((point, parse_config(variant)))
    return points


def _deep_copy(table):
    if isinstance(table, dict):
        return {k: _deep_copy(v) for k, v in table.items()}
    if isinstance(table, list):
        return [_deep_copy(v) for v in table]
    return table


def _delete_path(table: dict, path: str) -> None:
    *parents, leaf = path.split(".")
    for key in parents:
        table = table[key]
    del table[leaf]
