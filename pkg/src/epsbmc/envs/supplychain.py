"""Single-factory, single-warehouse supply chain with lost sales.

Each period the agent chooses how much to ship from the factory to the
warehouse and how much to produce at the factory. Order of events:

1. ship ``min(ship, factory stock, transport limit, free warehouse space)``;
2. produce ``min(produce, max production, free factory space)``;
3. Poisson demand hits the warehouse; unmet demand is lost;
4. reward = price * sales - production cost - storage cost on the end-of-period
   stocks - transport cost on the shipped quantity.

There is no terminal state; episodes end at the step limit.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SupplyChainSpec:
    price: float = 0.5
    production_cost: float = 0.1
    storage_cost: float = 0.02
    transport_cost: float = 0.1
    # kept for completeness; no role in these dynamics
    zeta: float = 5.0
    warehouse_capacity: int = 50
    factory_capacity: int = 50
    max_production: int = 10
    transport_limit: int = 10
    demand_rate: float = 2.5
    initial_state: tuple[int, int] = (10, 0)

    def __post_init__(self):
        object.__setattr__(self, "initial_state", tuple(int(v) for v in self.initial_state))
        f, w = self.initial_state
        if not (0 <= f <= self.factory_capacity and 0 <= w <= self.warehouse_capacity):
            raise ValueError(f"initial state {self.initial_state} violates capacities")
        if self.max_production < 0 or self.transport_limit < 0:
            raise ValueError("production and transport limits must be nonnegative")
        if not self.demand_rate >= 0:
            raise ValueError("demand rate must be nonnegative")

    @property
    def num_states(self) -> int:
        return (self.factory_capacity + 1) * (self.warehouse_capacity + 1)

    @property
    def num_actions(self) -> int:
        return (self.max_production + 1) * (self.transport_limit + 1)

    def encode(self, state: tuple[int, int]) -> int:
        return state[0] * (self.warehouse_capacity + 1) + state[1]

    def decode(self, index: int) -> tuple[int, int]:
        return divmod(index, self.warehouse_capacity + 1)

    def decode_action(self, action: int) -> tuple[int, int]:
        """``(produce, ship)`` for a flat action index."""
        return divmod(action, self.transport_limit + 1)

    def reward_bounds(self) -> tuple[float, float]:
        lo = -(
            self.production_cost * self.max_production
            + self.storage_cost * (self.factory_capacity + self.warehouse_capacity)
            + self.transport_cost * self.transport_limit
        )
        hi = self.price * (self.warehouse_capacity + self.transport_limit)
        return lo, hi


def supplychain_step(
    spec: SupplyChainSpec, state: tuple[int, int], action: tuple[int, int], rng
) -> tuple[tuple[int, int], float, bool]:
    factory, warehouse = state
    produce, ship = action
    shipped = max(0, min(ship, factory, spec.transport_limit, spec.warehouse_capacity - warehouse))
    factory -= shipped
    warehouse += shipped
    produced = max(0, min(produce, spec.max_production, spec.factory_capacity - factory))
    factory += produced
    demand = int(rng.poisson(spec.demand_rate))
    sales = min(warehouse, demand)
    warehouse -= sales
    reward = (
        spec.price * sales
        - spec.production_cost * produced
        - spec.storage_cost * (factory + warehouse)
        - spec.transport_cost * shipped
    )
    return (factory, warehouse), reward, False


class SupplyChain:
    higher_is_better = True

    def __init__(self, spec: SupplyChainSpec | None = None):
        self.spec = spec or SupplyChainSpec()
        self.num_states = self.spec.num_states
        self.num_actions = self.spec.num_actions
        self.state = self.spec.initial_state

    def reset(self, rng) -> int:
        self.state = self.spec.initial_state
        return self.spec.encode(self.state)

    def step(self, action: int, rng) -> tuple[int, float, bool]:
        self.state, reward, done = supplychain_step(
            self.spec, self.state, self.spec.decode_action(action), rng
        )
        return self.spec.encode(self.state), reward, done

    def test_metric(self, ret: float, steps: int) -> float:
        return ret

    def is_perfect(self, metric: float) -> bool:
        return False
