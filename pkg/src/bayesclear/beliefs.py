"""Assumed-density-filtering posterior over each agent's value.

The auctioneer keeps one Gaussian per agent. Each observed bid multiplies
the belief by a probit likelihood Phi(bid * beta * (w - cost)); the product
is projected back to a Gaussian by moment matching, which has a closed
form. Updates run online, one observation per agent per round.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .generative import ValuePrior
from .numerics import inverse_mills

DEFAULT_VARIANCE_FLOOR = 0.01


@dataclass(frozen=True)
class GaussianBelief:
    mean: float
    variance: float

    def __post_init__(self):
        if self.variance <= 0:
            raise ValueError("belief variance must be positive")

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))


def init_belief(
    prior: ValuePrior, variance_floor: float = DEFAULT_VARIANCE_FLOOR
) -> GaussianBelief:
    """Moment-match the prior: copy mean and variance, then apply the floor."""
    if prior.variance <= 0:
        raise ValueError("belief initialization needs a positive prior variance")
    return GaussianBelief(prior.mean, max(prior.variance, variance_floor))


def adf_moments(
    belief: GaussianBelief, bid: int, cost: float, beta: float
) -> tuple[float, float]:
    """Exact first two moments of Phi(bid*beta*(w - cost)) * N(w; m, s2).

    Returns the raw (unfloored) moment-matched mean and variance. The
    inverse Mills ratio is evaluated in log domain, so strongly surprising
    observations (|z| in the hundreds at beta = 10) stay finite.
    """
    if bid not in (1, -1):
        raise ValueError("bid must be +1 or -1")
    if beta <= 0:
        raise ValueError("beta must be positive")
    s2 = belief.variance
    denom = float(np.sqrt(1.0 + s2 * beta * beta))
    z = bid * beta * (belief.mean - cost) / denom
    lam = float(inverse_mills(z))
    mean = belief.mean + bid * s2 * beta * lam / denom
    variance = s2 - (s2 * s2 * beta * beta / (1.0 + s2 * beta * beta)) * lam * (z + lam)
    return mean, variance


def adf_update(
    belief: GaussianBelief,
    bid: int,
    cost: float,
    beta: float,
    variance_floor: float = DEFAULT_VARIANCE_FLOOR,
) -> GaussianBelief:
    """One moment-matching update; the mean moves in the direction of the
    bid and the variance never increases (before flooring)."""
    mean, variance = adf_moments(belief, bid, cost, beta)
    return GaussianBelief(mean, max(variance, variance_floor))


def batch_round_update(
    beliefs: Sequence[GaussianBelief],
    bids: Sequence[int],
    costs: Sequence[float],
    beta: float,
    variance_floor: float = DEFAULT_VARIANCE_FLOOR,
) -> list[GaussianBelief]:
    """Apply one round of per-agent updates; agents are independent."""
    if not (len(beliefs) == len(bids) == len(costs)):
        raise ValueError("beliefs, bids, and costs must align")
    return [
        adf_update(belief, bid, cost, beta, variance_floor)
        for belief, bid, cost in zip(beliefs, bids, costs)
    ]
