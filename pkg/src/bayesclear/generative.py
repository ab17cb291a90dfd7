"""Joint generative process over prices, agent types, and bids.

Prices are drawn from a density proportional to exp(-revenue), which under
linear prices factorizes into iid standard exponentials per item. Each
agent's value comes from its prior (truncated at zero) and its bundle from
the subnormalized likelihood 2^-m * exp(-surplus); the missing probability
mass triggers a restart of the whole economy. Bids follow a probit
approximate best-response with inverse-noise scale beta.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from .core import Bundle, LinearPrices, SingleMindedAgent
from .numerics import norm_cdf

#: Bundle sums are enumerated exhaustively; refuse beyond this many items.
MAX_ENUMERATED_ITEMS = 20


class RestartBudgetError(RuntimeError):
    """The rejection-style sampler exceeded its attempt budget."""


@dataclass(frozen=True)
class ValuePrior:
    """Gaussian prior over one agent's value; variance 0 means a point mass."""

    mean: float
    variance: float

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("prior variance must be nonnegative")


@dataclass(frozen=True)
class ResponseModel:
    """How an agent turns (value, bundle cost) into a +1/-1 bid.

    ``probit`` bids +1 with probability Phi(beta*(w - c)); ``exact`` is the
    beta -> infinity limit, bidding +1 iff w >= c (ties bid +1).
    """

    beta: float
    mode: str = "probit"

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.mode not in ("probit", "exact"):
            raise ValueError(f"unknown response mode {self.mode!r}")


@dataclass(frozen=True)
class BidRecord:
    """One observed bid: which agent, in which round, at what bundle cost."""

    agent: int
    round_index: int
    cost: float
    bid: int


def bundle_likelihood(bundle: Bundle, value: float, prices: LinearPrices) -> float:
    """Subnormalized bundle mass 2^-m * exp(-max(value - cost, 0))."""
    cost = prices.bundle_cost(bundle)
    m = prices.num_items
    return float(2.0 ** (-m) * np.exp(-max(value - cost, 0.0)))


def _all_bundle_costs(per_item: np.ndarray) -> np.ndarray:
    """Cost of every bundle, indexed so bit j of the index means item j."""
    costs = np.zeros(1)
    for p in per_item:
        costs = np.concatenate([costs, costs + p])
    return costs


def acceptance_mass(value: float, prices: LinearPrices) -> float:
    """Total bundle-likelihood mass nu(w, prices) = sum over all 2^m bundles.

    The restart probability of the generative process is 1 - nu.
    """
    m = prices.num_items
    if m > MAX_ENUMERATED_ITEMS:
        raise ValueError(
            f"exact bundle enumeration limited to {MAX_ENUMERATED_ITEMS} items"
        )
    costs = _all_bundle_costs(prices.per_item)
    return float(np.mean(np.exp(-np.maximum(value - costs, 0.0))))


def _draw_value(prior: ValuePrior, rng: np.random.Generator) -> float:
    if prior.variance == 0.0:
        return prior.mean
    std = float(np.sqrt(prior.variance))
    low = (0.0 - prior.mean) / std
    return float(
        stats.truncnorm.rvs(low, np.inf, loc=prior.mean, scale=std, random_state=rng)
    )


def _bundle_from_index(index: int, m: int) -> Bundle:
    return Bundle.of((j for j in range(m) if index >> j & 1), m)


def sample_economy(
    n: int,
    m: int,
    priors: Sequence[ValuePrior],
    rng: np.random.Generator,
    price_sampler: Optional[Callable[[np.random.Generator], np.ndarray]] = None,
    max_attempts: int = 10**6,
) -> tuple[list[SingleMindedAgent], LinearPrices]:
    """Draw one joint economy (agents, prices) via the restart loop.

    Each attempt draws prices (iid standard exponentials by default, or via
    ``price_sampler`` for discretized variants), then per agent a value from
    its zero-truncated prior and a bundle from the subnormalized bundle
    likelihood; with the leftover probability mass the entire economy is
    redrawn. Restarting the whole economy couples types and prices, which is
    what makes clearing prices the posterior mode of the joint draw.
    """
    if len(priors) != n:
        raise ValueError("need one prior per agent")
    if m > MAX_ENUMERATED_ITEMS:
        raise ValueError(
            f"exact bundle enumeration limited to {MAX_ENUMERATED_ITEMS} items"
        )
    base = 2.0 ** (-m)
    for _ in range(max_attempts):
        per_item = (
            np.asarray(price_sampler(rng), dtype=float)
            if price_sampler is not None
            else rng.exponential(1.0, size=m)
        )
        costs = _all_bundle_costs(per_item)
        agents: list[SingleMindedAgent] = []
        restarted = False
        for prior in priors:
            value = _draw_value(prior, rng)
            mass = base * np.exp(-np.maximum(value - costs, 0.0))
            cumulative = np.cumsum(mass)
            u = rng.random()
            if u >= cumulative[-1]:
                restarted = True
                break
            index = int(np.searchsorted(cumulative, u, side="right"))
            agents.append(SingleMindedAgent(_bundle_from_index(index, m), value))
        if not restarted:
            return agents, LinearPrices(per_item)
    raise RestartBudgetError(f"no accepted economy in {max_attempts} attempts")


def bid_probability(
    model: ResponseModel, value: float, cost: float, bid: int = 1
) -> float:
    """Probability of the given bid (+1 or -1) at the given value and cost."""
    if bid not in (1, -1):
        raise ValueError("bid must be +1 or -1")
    if model.mode == "exact":
        bids_yes = value >= cost
        return float(bids_yes if bid == 1 else not bids_yes)
    p_yes = float(norm_cdf(model.beta * (value - cost)))
    return p_yes if bid == 1 else 1.0 - p_yes


def sample_bid(
    model: ResponseModel,
    value: float,
    cost: float,
    rng: Optional[np.random.Generator] = None,
) -> int:
    """Draw a bid; deterministic in exact mode (ties bid +1)."""
    if model.mode == "exact":
        return 1 if value >= cost else -1
    if rng is None:
        raise ValueError("probit bidding requires an rng")
    return 1 if rng.random() < bid_probability(model, value, cost) else -1
