"""MAP price computation under Gaussian value beliefs.

Marginalizing a Gaussian belief against the bundle likelihood
exp(-(w - cost)_+) yields, per agent, a two-component mixture

    L1 = Phi((m - t)/s - s) * exp(t - m + s^2/2),   L0 = Phi((t - m)/s),

where t is the agent's bundle cost under the candidate prices. The price
objective is the log of the mixture summed over agents minus total
revenue; it is maximized over nonnegative item prices by EM with a
projected-gradient M-step. All Gaussian tail terms are evaluated in log
domain since beliefs sit at the variance floor routinely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .beliefs import GaussianBelief
from .core import Bundle, LinearPrices
from .numerics import inverse_mills, norm_logcdf


@dataclass(frozen=True)
class PricePosteriorModel:
    """Per-agent (bundle, belief mean, belief std) plus the item count."""

    bundles: tuple[Bundle, ...]
    means: np.ndarray
    sigmas: np.ndarray
    num_items: int

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        sigmas = np.asarray(self.sigmas, dtype=float)
        if not (len(self.bundles) == means.shape[0] == sigmas.shape[0]):
            raise ValueError("bundles, means, and sigmas must align")
        if np.any(sigmas <= 0):
            raise ValueError("belief standard deviations must be positive")
        object.__setattr__(self, "bundles", tuple(self.bundles))
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sigmas", sigmas)

    @classmethod
    def from_beliefs(
        cls,
        bundles: Sequence[Bundle],
        beliefs: Sequence[GaussianBelief],
        num_items: int,
    ) -> "PricePosteriorModel":
        return cls(
            tuple(bundles),
            np.array([b.mean for b in beliefs]),
            np.array([b.std for b in beliefs]),
            num_items,
        )

    def incidence(self) -> np.ndarray:
        """0/1 matrix A with A[i, j] = 1 iff item j is in agent i's bundle."""
        mat = np.zeros((len(self.bundles), self.num_items))
        for i, bundle in enumerate(self.bundles):
            for j in bundle.items:
                mat[i, j] = 1.0
        return mat


@dataclass(frozen=True)
class EMState:
    """One EM iterate: prices, per-agent responsibilities at those prices,
    and the price objective there."""

    prices: np.ndarray
    responsibilities: np.ndarray
    objective: float


@dataclass(frozen=True)
class EMTrace:
    states: tuple[EMState, ...]
    converged: bool
    line_search_failures: int = 0

    @property
    def iterations(self) -> int:
        return len(self.states) - 1


@dataclass(frozen=True)
class EMConfig:
    objective_tol: float = 1e-6
    mstep_grad_tol: float = 1e-8
    #: Generalized-EM early exit: stop the M-step once one ascent step
    #: improves the surrogate by less than this (solving it tighter than the
    #: outer objective tolerance buys nothing).
    mstep_improve_tol: float = 1e-7
    stationarity_tol: float = 1e-6
    max_em_iters: int = 100
    max_mstep_iters: int = 500
    max_polish_iters: int = 2000


def _log_components(
    means: np.ndarray, sigmas: np.ndarray, theta: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    log_l1 = norm_logcdf((means - theta) / sigmas - sigmas) + (
        theta - means + 0.5 * sigmas * sigmas
    )
    log_l0 = norm_logcdf((theta - means) / sigmas)
    return log_l0, log_l1


def likelihood_components(
    mean: float, sigma: float, theta_xi: float
) -> tuple[float, float]:
    """The (L0, L1) mixture components at one bundle cost.

    Their sum equals the Gaussian average of exp(-(w - theta_xi)_+), with
    the constant 2^-m factor omitted.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    log_l0, log_l1 = _log_components(
        np.asarray([mean], dtype=float),
        np.asarray([sigma], dtype=float),
        np.asarray([theta_xi], dtype=float),
    )
    return float(np.exp(log_l0[0])), float(np.exp(log_l1[0]))


def responsibilities(model: PricePosteriorModel, prices: LinearPrices) -> np.ndarray:
    """Posterior weight of the L1 component per agent at the given prices."""
    theta = model.incidence() @ prices.per_item
    log_l0, log_l1 = _log_components(model.means, model.sigmas, theta)
    return np.exp(log_l1 - np.logaddexp(log_l0, log_l1))


def map_objective(model: PricePosteriorModel, prices: LinearPrices) -> float:
    """Log posterior of the prices, up to constants: -sum(p) + sum_i log(L0+L1)."""
    p = prices.per_item
    theta = model.incidence() @ p
    log_l0, log_l1 = _log_components(model.means, model.sigmas, theta)
    return float(-p.sum() + np.logaddexp(log_l0, log_l1).sum())


def _mixture_dtheta(
    means: np.ndarray, sigmas: np.ndarray, theta: np.ndarray, gamma: np.ndarray
) -> np.ndarray:
    """d/dtheta of the gamma-weighted log components; with gamma equal to the
    responsibilities at theta this is also d/dtheta log(L0 + L1)."""
    a = (means - theta) / sigmas - sigmas
    z = (theta - means) / sigmas
    d_log_l1 = 1.0 - inverse_mills(a) / sigmas
    d_log_l0 = inverse_mills(z) / sigmas
    return gamma * d_log_l1 + (1.0 - gamma) * d_log_l0


def map_objective_gradient(
    model: PricePosteriorModel, prices: LinearPrices
) -> np.ndarray:
    incidence = model.incidence()
    theta = incidence @ prices.per_item
    log_l0, log_l1 = _log_components(model.means, model.sigmas, theta)
    gamma = np.exp(log_l1 - np.logaddexp(log_l0, log_l1))
    dtheta = _mixture_dtheta(model.means, model.sigmas, theta, gamma)
    return -np.ones(model.num_items) + incidence.T @ dtheta


def projected_gradient_norm(model: PricePosteriorModel, prices: LinearPrices) -> float:
    """Norm of the ascent gradient with boundary components clipped at p = 0."""
    grad = map_objective_gradient(model, prices)
    projected = np.where(prices.per_item > 0, grad, np.maximum(grad, 0.0))
    return float(np.linalg.norm(projected))


def _mstep_value(
    incidence: np.ndarray,
    means: np.ndarray,
    sigmas: np.ndarray,
    gamma: np.ndarray,
    p: np.ndarray,
) -> float:
    theta = incidence @ p
    log_l0, log_l1 = _log_components(means, sigmas, theta)
    return float(-p.sum() + (gamma * log_l1 + (1.0 - gamma) * log_l0).sum())


def _mstep_gradient(
    incidence: np.ndarray,
    means: np.ndarray,
    sigmas: np.ndarray,
    gamma: np.ndarray,
    p: np.ndarray,
) -> np.ndarray:
    theta = incidence @ p
    dtheta = _mixture_dtheta(means, sigmas, theta, gamma)
    return -np.ones(p.shape[0]) + incidence.T @ dtheta


def _maximize_mstep(
    incidence: np.ndarray,
    means: np.ndarray,
    sigmas: np.ndarray,
    gamma: np.ndarray,
    p0: np.ndarray,
    config: EMConfig,
) -> tuple[np.ndarray, int]:
    """Projected gradient ascent with backtracking on the concave M-step
    surrogate. Returns the maximizer and a line-search failure count."""
    p = p0.copy()
    value = _mstep_value(incidence, means, sigmas, gamma, p)
    alpha = 1.0
    failures = 0
    for _ in range(config.max_mstep_iters):
        grad = _mstep_gradient(incidence, means, sigmas, gamma, p)
        projected = np.where(p > 0, grad, np.maximum(grad, 0.0))
        if np.linalg.norm(projected) <= config.mstep_grad_tol:
            break
        stepped = False
        while alpha > 1e-18:
            candidate = np.maximum(p + alpha * grad, 0.0)
            direction = candidate - p
            cand_value = _mstep_value(incidence, means, sigmas, gamma, candidate)
            if cand_value >= value + 1e-4 * float(grad @ direction):
                improvement = cand_value - value
                p, value = candidate, cand_value
                stepped = True
                break
            alpha *= 0.5
        if not stepped:
            failures += 1
            break
        alpha = min(alpha * 2.0, 1e6)
        if improvement < config.mstep_improve_tol:
            break
    return p, failures


def em_price_update(
    model: PricePosteriorModel,
    init: LinearPrices,
    config: EMConfig | None = None,
) -> tuple[LinearPrices, EMTrace]:
    """Maximize the price objective by EM over nonnegative linear prices.

    E-step: responsibilities gamma_i = L1/(L0+L1) at the current prices.
    M-step: maximize the gamma-weighted surrogate (concave) by projected
    gradient ascent. The EM loop stops once the objective improves by less
    than ``objective_tol`` or after ``max_em_iters`` iterations; because EM
    contracts slowly near the optimum, a polish phase of projected gradient
    ascent on the (concave) objective itself then runs until the projected
    gradient norm reaches ``stationarity_tol``. The objective is
    nondecreasing along the returned trace, polish iterates included.
    """
    if config is None:
        config = EMConfig()
    if init.num_items != model.num_items:
        raise ValueError("init prices and model disagree on item count")
    incidence = model.incidence()
    p = init.per_item.copy()

    def state_at(p_vec: np.ndarray) -> EMState:
        current = LinearPrices(p_vec)
        return EMState(
            p_vec.copy(),
            responsibilities(model, current),
            map_objective(model, current),
        )

    states = [state_at(p)]
    failures = 0
    for _ in range(config.max_em_iters):
        gamma = states[-1].responsibilities
        p, fails = _maximize_mstep(
            incidence, model.means, model.sigmas, gamma, p, config
        )
        failures += fails
        states.append(state_at(p))
        improvement = states[-1].objective - states[-2].objective
        if improvement < config.objective_tol:
            break

    p, converged, polish_fails, polish_states = _polish(model, p, config)
    failures += polish_fails
    states.extend(polish_states)
    return LinearPrices(p), EMTrace(tuple(states), converged, failures)


def _polish(
    model: PricePosteriorModel, p0: np.ndarray, config: EMConfig
) -> tuple[np.ndarray, bool, int, list[EMState]]:
    """Projected gradient ascent on the full objective down to the
    stationarity tolerance. Only the final iterate is recorded."""
    incidence = model.incidence()
    p = p0.copy()
    value = map_objective(model, LinearPrices(p))
    alpha = 1.0
    failures = 0
    converged = False
    moved = False
    for _ in range(config.max_polish_iters):
        theta = incidence @ p
        log_l0, log_l1 = _log_components(model.means, model.sigmas, theta)
        gamma = np.exp(log_l1 - np.logaddexp(log_l0, log_l1))
        grad = -np.ones(model.num_items) + incidence.T @ _mixture_dtheta(
            model.means, model.sigmas, theta, gamma
        )
        projected = np.where(p > 0, grad, np.maximum(grad, 0.0))
        if np.linalg.norm(projected) <= config.stationarity_tol:
            converged = True
            break
        stepped = False
        while alpha > 1e-18:
            candidate = np.maximum(p + alpha * grad, 0.0)
            cand_value = map_objective(model, LinearPrices(candidate))
            if cand_value >= value + 1e-4 * float(grad @ (candidate - p)):
                p, value = candidate, cand_value
                stepped = moved = True
                break
            alpha *= 0.5
        if not stepped:
            failures += 1
            break
        alpha = min(alpha * 2.0, 1e6)
    states = []
    if moved:
        final = LinearPrices(p)
        states.append(
            EMState(p.copy(), responsibilities(model, final), map_objective(model, final))
        )
    return p, converged, failures, states
