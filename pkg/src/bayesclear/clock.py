"""Subgradient clock-auction baseline with excess-demand price steps.

Starting from zero prices, each round collects best-response bids and, if
the market has not cleared, increments every item price by its excess
demand scaled by tau / sqrt(round). This is subgradient descent on the
dual clearing objective with the classic 1/sqrt(round) step schedule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .auction import AuctionResult, AuctionTrace, RoundRecord, _collect_bids
from .core import (
    INDIFFERENCE_TOL,
    LinearPrices,
    SingleMindedAgent,
    clearing_check,
)
from .generative import ResponseModel


@dataclass(frozen=True)
class ClockConfig:
    tau: float
    round_cap: int = 100

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("step size tau must be positive")
        if self.round_cap < 1:
            raise ValueError("round cap must be at least 1")


def excess_demand(
    bids: Sequence[int],
    agents: Sequence[SingleMindedAgent],
    prices: LinearPrices,
) -> np.ndarray:
    """Per item: number of +1 bids whose bundle contains it, minus the one
    unit on offer."""
    if len(bids) != len(agents):
        raise ValueError("bids and agents must align")
    demand = np.zeros(prices.num_items, dtype=int)
    for bid, agent in zip(bids, agents):
        if bid == 1:
            for j in agent.bundle.items:
                demand[j] += 1
    return demand - 1


def clock_step(
    prices: LinearPrices, excess: np.ndarray, tau: float, round_index: int
) -> LinearPrices:
    """p <- max(0, p + (tau / sqrt(round)) * excess), componentwise."""
    if round_index < 1:
        raise ValueError("round index starts at 1")
    scale = tau / np.sqrt(round_index)
    return LinearPrices(np.maximum(prices.per_item + scale * excess, 0.0))


def run_clock_auction(
    agents: Sequence[SingleMindedAgent],
    config: ClockConfig,
    response: Optional[ResponseModel] = None,
    rng: Optional[np.random.Generator] = None,
    tol: float = INDIFFERENCE_TOL,
) -> AuctionResult:
    """Run the clock auction from zero prices until clearing or the cap.

    Clearing is checked with the same certificate as the Bayesian auction,
    after bids are collected and before the price step, so both auctions
    count rounds identically.
    """
    if not agents:
        raise ValueError("need at least one agent")
    response = response or ResponseModel(beta=10.0, mode="exact")
    num_items = agents[0].bundle.universe_size
    prices = LinearPrices.zeros(num_items)

    rounds: list[RoundRecord] = []
    certificate = None
    for round_index in range(1, config.round_cap + 1):
        _, bids, records = _collect_bids(agents, prices, response, rng, round_index)
        rounds.append(RoundRecord(round_index, prices, records, ()))
        certificate = clearing_check(agents, prices, tol)
        if certificate.cleared:
            return AuctionResult(AuctionTrace(tuple(rounds)), certificate, round_index)
        excess = excess_demand(bids, agents, prices)
        prices = clock_step(prices, excess, config.tau, round_index)

    assert certificate is not None
    return AuctionResult(AuctionTrace(tuple(rounds)), certificate, config.round_cap)
