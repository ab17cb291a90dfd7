"""Bayesian iterative auction: quote, bid, update beliefs, update prices.

Each round quotes the current linear prices (zero in round one), collects
one +1/-1 bid per agent at its bundle cost, and stops as soon as the
prices clear the market. Otherwise every belief absorbs its bid via the
closed-form moment-matching update and the next prices are the EM
maximizer of the price objective, warm-started from the current prices.
A VCG variant runs one extra trajectory per agent-removed economy to price
the winners by their externality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .beliefs import (
    DEFAULT_VARIANCE_FLOOR,
    GaussianBelief,
    adf_moments,
    batch_round_update,
    init_belief,
)
from .core import (
    INDIFFERENCE_TOL,
    Allocation,
    ClearingCertificate,
    LinearPrices,
    SingleMindedAgent,
    clearing_check,
    efficient_allocation,
)
from .generative import BidRecord, ResponseModel, ValuePrior, sample_bid
from .prices import EMConfig, EMTrace, PricePosteriorModel, em_price_update


@dataclass(frozen=True)
class AuctionConfig:
    """Auctioneer-side knobs; beta is the bid-noise scale it assumes."""

    beta: float = 10.0
    variance_floor: float = DEFAULT_VARIANCE_FLOOR
    round_cap: int = 100
    em: EMConfig = field(default_factory=EMConfig)
    indifference_tol: float = INDIFFERENCE_TOL
    #: Optional approximate-termination gap: also stop once the dual
    #: objective is within this of the efficient welfare. Off by default.
    clearing_gap: Optional[float] = None

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.round_cap < 1:
            raise ValueError("round cap must be at least 1")


@dataclass(frozen=True)
class RoundRecord:
    """One auction round.

    ``prices`` are the quoted prices of the round and ``bids`` the responses
    at those prices. ``beliefs`` snapshot the posterior after this round's
    knowledge update (for the terminal round, the unchanged entering
    beliefs); ``raw_variances`` are the same variances before flooring.
    ``em`` holds the price-update diagnostics that produced the next round's
    prices, absent on the terminal round.
    """

    round_index: int
    prices: LinearPrices
    bids: tuple[BidRecord, ...]
    beliefs: tuple[GaussianBelief, ...]
    raw_variances: Optional[tuple[float, ...]] = None
    em: Optional[EMTrace] = None


@dataclass(frozen=True)
class AuctionTrace:
    rounds: tuple[RoundRecord, ...]

    @property
    def num_rounds(self) -> int:
        return len(self.rounds)

    def final_prices(self) -> LinearPrices:
        return self.rounds[-1].prices


class AuctionResult(NamedTuple):
    trace: AuctionTrace
    certificate: ClearingCertificate
    rounds: int


def _collect_bids(
    agents: Sequence[SingleMindedAgent],
    prices: LinearPrices,
    response: ResponseModel,
    rng: Optional[np.random.Generator],
    round_index: int,
) -> tuple[list[float], list[int], tuple[BidRecord, ...]]:
    costs = [prices.bundle_cost(agent.bundle) for agent in agents]
    bids = [
        sample_bid(response, agent.value, cost, rng)
        for agent, cost in zip(agents, costs)
    ]
    records = tuple(
        BidRecord(i, round_index, costs[i], bids[i]) for i in range(len(agents))
    )
    return costs, bids, records


def run_bayesian_auction(
    agents: Sequence[SingleMindedAgent],
    priors: Sequence[ValuePrior],
    config: Optional[AuctionConfig] = None,
    response: Optional[ResponseModel] = None,
    rng: Optional[np.random.Generator] = None,
) -> AuctionResult:
    """Run the auction until the prices clear or the round cap is hit.

    Returns the full trace, the final clearing certificate, and the number
    of rounds used (the cap itself when clearing failed). Beliefs are not
    updated on the round in which clearing is detected.
    """
    if not agents:
        raise ValueError("need at least one agent")
    if len(priors) != len(agents):
        raise ValueError("need one prior per agent")
    config = config or AuctionConfig()
    response = response or ResponseModel(beta=config.beta, mode="exact")

    num_items = agents[0].bundle.universe_size
    bundles = [agent.bundle for agent in agents]
    beliefs = [init_belief(prior, config.variance_floor) for prior in priors]
    prices = LinearPrices.zeros(num_items)

    gap_target = None
    if config.clearing_gap is not None:
        _, welfare = efficient_allocation(agents)
        gap_target = welfare + config.clearing_gap

    rounds: list[RoundRecord] = []
    certificate = None
    for round_index in range(1, config.round_cap + 1):
        costs, bids, records = _collect_bids(
            agents, prices, response, rng, round_index
        )
        certificate = clearing_check(agents, prices, config.indifference_tol)
        done = certificate.cleared or (
            gap_target is not None and certificate.potential_value <= gap_target
        )
        if done:
            rounds.append(
                RoundRecord(round_index, prices, records, tuple(beliefs))
            )
            return AuctionResult(AuctionTrace(tuple(rounds)), certificate, round_index)

        raw = [
            adf_moments(belief, bid, cost, config.beta)[1]
            for belief, bid, cost in zip(beliefs, bids, costs)
        ]
        beliefs = batch_round_update(
            beliefs, bids, costs, config.beta, config.variance_floor
        )
        model = PricePosteriorModel.from_beliefs(bundles, beliefs, num_items)
        new_prices, em_trace = em_price_update(model, prices, config.em)
        rounds.append(
            RoundRecord(
                round_index, prices, records, tuple(beliefs), tuple(raw), em_trace
            )
        )
        prices = new_prices

    assert certificate is not None
    return AuctionResult(AuctionTrace(tuple(rounds)), certificate, config.round_cap)


@dataclass(frozen=True)
class VcgOutcome:
    """Result of the n+1 trajectory extension.

    ``payments[i]`` is None when the full economy or agent i's marginal
    economy failed to clear within the round cap. ``runs[0]`` is the full
    economy; ``runs[1 + i]`` excludes agent i.
    """

    allocation: Optional[Allocation]
    payments: tuple[Optional[float], ...]
    runs: tuple[AuctionResult, ...]


def run_vcg_auction(
    agents: Sequence[SingleMindedAgent],
    priors: Sequence[ValuePrior],
    config: Optional[AuctionConfig] = None,
    response: Optional[ResponseModel] = None,
    rng: Optional[np.random.Generator] = None,
) -> VcgOutcome:
    """Run the full economy plus each agent-removed economy and derive VCG
    payments from their clearing allocations.

    A winner pays the welfare of its marginal economy's allocation (agents'
    last-and-final values, which in simulation are their true values) minus
    the other agents' welfare at the full allocation.
    """
    full = run_bayesian_auction(agents, priors, config, response, rng)
    marginal_runs = []
    for i in range(len(agents)):
        reduced_agents = [a for k, a in enumerate(agents) if k != i]
        reduced_priors = [p for k, p in enumerate(priors) if k != i]
        if reduced_agents:
            marginal_runs.append(
                run_bayesian_auction(
                    reduced_agents, reduced_priors, config, response, rng
                )
            )
        else:
            # Single-agent economy: removing the agent leaves nothing to run.
            empty_cert = ClearingCertificate(True, Allocation(()), 0.0)
            marginal_runs.append(
                AuctionResult(AuctionTrace(()), empty_cert, 0)
            )

    allocation = full.certificate.witness if full.certificate.cleared else None
    payments: list[Optional[float]] = []
    for i in range(len(agents)):
        marginal = marginal_runs[i]
        if allocation is None or not marginal.certificate.cleared:
            payments.append(None)
            continue
        reduced_agents = [a for k, a in enumerate(agents) if k != i]
        witness = marginal.certificate.witness
        marginal_welfare = (
            witness.welfare(reduced_agents) if witness is not None else 0.0
        )
        others_at_full = allocation.welfare(agents) - agents[i].valuation(
            allocation.assigned[i]
        )
        payments.append(max(0.0, marginal_welfare - others_at_full))

    return VcgOutcome(allocation, tuple(payments), (full, *marginal_runs))
