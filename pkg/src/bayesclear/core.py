"""Domain types and exact clearing mathematics for single-minded bidders.

Agents value exactly one bundle of items; prices are linear (one
nonnegative price per item). This module holds the oracle-grade pieces:
indirect utility and revenue, the dual clearing objective and its
exponential potential, exact winner determination, clearing verification,
and VCG payments for desk-scale instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

#: Tolerance (currency units) within which an agent counts as indifferent
#: between winning its bundle and walking away.
INDIFFERENCE_TOL = 1e-6

#: Exact search routines refuse instances with more agents than this.
MAX_EXACT_AGENTS = 20


class DimensionMismatchError(ValueError):
    """Bundle universe and price vector sizes disagree."""


class InstanceSizeError(ValueError):
    """Instance is too large for the exact (exhaustive) search routines."""


@dataclass(frozen=True)
class Bundle:
    """A subset of the m items, stored as a frozenset of 0-based indices."""

    items: frozenset[int]
    universe_size: int

    def __post_init__(self):
        object.__setattr__(self, "items", frozenset(self.items))
        if self.universe_size < 0:
            raise ValueError("universe_size must be nonnegative")
        for j in self.items:
            if not 0 <= j < self.universe_size:
                raise ValueError(
                    f"item index {j} outside universe of size {self.universe_size}"
                )

    @classmethod
    def of(cls, indices: Iterable[int], universe_size: int) -> "Bundle":
        return cls(frozenset(indices), universe_size)

    @classmethod
    def empty(cls, universe_size: int) -> "Bundle":
        return cls(frozenset(), universe_size)

    def contains(self, other: "Bundle") -> bool:
        return self.items >= other.items

    def indicator(self) -> np.ndarray:
        vec = np.zeros(self.universe_size)
        for j in self.items:
            vec[j] = 1.0
        return vec

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class SingleMindedAgent:
    """A bidder described by the one bundle it wants and its value for it."""

    bundle: Bundle
    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("agent value must be nonnegative")

    def valuation(self, assigned: Bundle) -> float:
        """w if the assigned bundle covers the desired one, else 0."""
        return self.value if assigned.contains(self.bundle) else 0.0


@dataclass(frozen=True)
class LinearPrices:
    """Nonnegative per-item prices; a bundle costs the sum of its items."""

    per_item: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.per_item, dtype=float)
        if arr.ndim != 1:
            raise ValueError("per_item must be a 1-d vector")
        if np.any(arr < 0):
            raise ValueError("prices must be nonnegative")
        object.__setattr__(self, "per_item", arr)

    @classmethod
    def zeros(cls, num_items: int) -> "LinearPrices":
        return cls(np.zeros(num_items))

    @property
    def num_items(self) -> int:
        return self.per_item.shape[0]

    def bundle_cost(self, bundle: Bundle) -> float:
        if bundle.universe_size != self.num_items:
            raise DimensionMismatchError(
                f"bundle universe {bundle.universe_size} != {self.num_items} prices"
            )
        return float(sum(self.per_item[j] for j in bundle.items))

    def total(self) -> float:
        return float(self.per_item.sum())


@dataclass(frozen=True)
class Allocation:
    """Per-agent assigned bundles; feasible iff pairwise disjoint."""

    assigned: tuple[Bundle, ...]

    def is_feasible(self) -> bool:
        seen: set[int] = set()
        for bundle in self.assigned:
            if seen & bundle.items:
                return False
            seen |= bundle.items
        return True

    def welfare(self, agents: Sequence[SingleMindedAgent]) -> float:
        return float(sum(a.valuation(y) for a, y in zip(agents, self.assigned)))


@dataclass(frozen=True)
class ClearingCertificate:
    """Outcome of a clearing check at some prices.

    ``potential_value`` records the dual objective (sum of indirect
    utilities plus indirect revenue) at the checked prices, whether or not
    the market cleared.
    """

    cleared: bool
    witness: Optional[Allocation]
    potential_value: float


def _check_universe(agents: Sequence[SingleMindedAgent], prices: LinearPrices) -> None:
    for agent in agents:
        if agent.bundle.universe_size != prices.num_items:
            raise DimensionMismatchError(
                f"agent bundle universe {agent.bundle.universe_size} != "
                f"{prices.num_items} prices"
            )


def _check_size(n: int, max_agents: int) -> None:
    if n > max_agents:
        raise InstanceSizeError(
            f"exact search limited to {max_agents} agents, got {n}"
        )


def indirect_utility(agent: SingleMindedAgent, prices: LinearPrices) -> float:
    """Best surplus the agent can achieve: max(w - cost of its bundle, 0)."""
    _check_universe([agent], prices)
    return max(agent.value - prices.bundle_cost(agent.bundle), 0.0)


def indirect_revenue(prices: LinearPrices) -> float:
    """Seller's best revenue under unit supply and linear prices: sum of prices.

    Any allocation that sells every item attains it, so no search is needed.
    """
    return prices.total()


def clearing_objective(
    agents: Sequence[SingleMindedAgent], prices: LinearPrices
) -> float:
    """Dual objective: sum of indirect utilities plus indirect revenue.

    Convex and piecewise linear in the prices; its minimizers are exactly
    the clearing prices when linear clearing prices exist.
    """
    _check_universe(agents, prices)
    return sum(indirect_utility(a, prices) for a in agents) + indirect_revenue(prices)


def clearing_potential(
    agents: Sequence[SingleMindedAgent], prices: LinearPrices
) -> float:
    """exp(-clearing_objective); maximal exactly where the objective is minimal.

    May underflow to 0.0 for large objectives, which is acceptable since it
    is used for comparisons only.
    """
    return math.exp(-clearing_objective(agents, prices))


def efficient_allocation(
    agents: Sequence[SingleMindedAgent], max_agents: int = MAX_EXACT_AGENTS
) -> tuple[Allocation, float]:
    """Exact welfare-maximizing feasible allocation (branch and bound).

    Ties are broken toward the lexicographically smallest set of winning
    agent indices, which makes the result deterministic.
    """
    n = len(agents)
    _check_size(n, max_agents)
    if n == 0:
        return Allocation(()), 0.0
    m = agents[0].bundle.universe_size
    _check_universe(agents, LinearPrices.zeros(m))

    best_value = -1.0
    best_winners: tuple[int, ...] | None = None

    def search(idx: int, used: frozenset[int], value: float, winners: tuple[int, ...]):
        nonlocal best_value, best_winners
        if idx == n:
            if value > best_value + 1e-12 or (
                abs(value - best_value) <= 1e-12
                and (best_winners is None or winners < best_winners)
            ):
                best_value = value
                best_winners = winners
            return
        # Optimistic bound: every remaining agent compatible with the items
        # used so far wins. Prune strictly below the incumbent so ties (and
        # their tie-breaks) are still explored.
        bound = value + sum(
            a.value for a in agents[idx:] if not (a.bundle.items & used)
        )
        if bound < best_value - 1e-12:
            return
        agent = agents[idx]
        if not (agent.bundle.items & used):
            search(idx + 1, used | agent.bundle.items, value + agent.value,
                   winners + (idx,))
        search(idx + 1, used, value, winners)

    search(0, frozenset(), 0.0, ())
    assert best_winners is not None
    winners = set(best_winners)
    assigned = tuple(
        agents[i].bundle if i in winners else Bundle.empty(m) for i in range(n)
    )
    return Allocation(assigned), best_value


def clearing_check(
    agents: Sequence[SingleMindedAgent],
    prices: LinearPrices,
    tol: float = INDIFFERENCE_TOL,
    max_agents: int = MAX_EXACT_AGENTS,
) -> ClearingCertificate:
    """Verify whether the prices clear the market, with a witness allocation.

    Cleared means there is a feasible allocation in which every agent whose
    value strictly exceeds its bundle cost receives its bundle, every agent
    strictly below cost receives nothing, agents within ``tol`` of
    indifference may go either way, and every positive-priced item is sold.
    Zero-priced items may remain unsold since they do not affect revenue.
    The search over indifferent agents' choices is exact (backtracking).
    """
    _check_size(len(agents), max_agents)
    _check_universe(agents, prices)
    m = prices.num_items
    objective = clearing_objective(agents, prices)

    strict_in: list[int] = []
    indifferent: list[int] = []
    for i, agent in enumerate(agents):
        cost = prices.bundle_cost(agent.bundle)
        if agent.value > cost + tol:
            strict_in.append(i)
        elif agent.value >= cost - tol:
            indifferent.append(i)

    taken: set[int] = set()
    for i in strict_in:
        items = agents[i].bundle.items
        if taken & items:
            return ClearingCertificate(False, None, objective)
        taken |= items

    must_cover = frozenset(
        j for j in range(m) if prices.per_item[j] > 0 and j not in taken
    )
    candidates = [
        i for i in indifferent if not (agents[i].bundle.items & taken)
    ]

    chosen = _cover_with_disjoint_bundles(agents, candidates, must_cover)
    if chosen is None:
        return ClearingCertificate(False, None, objective)

    winners = set(strict_in) | set(chosen)
    assigned = tuple(
        agents[i].bundle if i in winners else Bundle.empty(m)
        for i in range(len(agents))
    )
    return ClearingCertificate(True, Allocation(assigned), objective)


def _cover_with_disjoint_bundles(
    agents: Sequence[SingleMindedAgent],
    candidates: list[int],
    must_cover: frozenset[int],
) -> Optional[list[int]]:
    """Pick indifferent agents with pairwise-disjoint bundles covering every
    item in ``must_cover``; None if impossible. Driven by the first uncovered
    item, so the search is exact without enumerating all subsets."""
    if not must_cover:
        return []
    target = min(must_cover)
    for i in candidates:
        items = agents[i].bundle.items
        if target not in items:
            continue
        rest = [
            k for k in candidates if k != i and not (agents[k].bundle.items & items)
        ]
        sub = _cover_with_disjoint_bundles(agents, rest, must_cover - items)
        if sub is not None:
            return [i] + sub
    return None


def vcg_payments(
    agents: Sequence[SingleMindedAgent], max_agents: int = MAX_EXACT_AGENTS
) -> list[float]:
    """VCG payment per agent: others' optimal welfare without the agent,
    minus others' welfare at the full-economy efficient allocation."""
    _check_size(len(agents), max_agents)
    allocation, welfare = efficient_allocation(agents, max_agents)
    payments = []
    for i, agent in enumerate(agents):
        others = [a for k, a in enumerate(agents) if k != i]
        _, welfare_without = efficient_allocation(others, max_agents)
        others_at_full = welfare - agent.valuation(allocation.assigned[i])
        payments.append(max(0.0, welfare_without - others_at_full))
    return payments
