"""Bayesian clearing mechanism for combinatorial auctions with
single-minded bidders, plus a subgradient clock-auction baseline."""

from .auction import (
    AuctionConfig,
    AuctionResult,
    AuctionTrace,
    RoundRecord,
    VcgOutcome,
    run_bayesian_auction,
    run_vcg_auction,
)
from .beliefs import GaussianBelief, adf_update, batch_round_update, init_belief
from .clock import ClockConfig, clock_step, excess_demand, run_clock_auction
from .core import (
    Allocation,
    Bundle,
    ClearingCertificate,
    LinearPrices,
    SingleMindedAgent,
    clearing_check,
    clearing_objective,
    clearing_potential,
    efficient_allocation,
    indirect_revenue,
    indirect_utility,
    vcg_payments,
)
from .generative import (
    BidRecord,
    ResponseModel,
    ValuePrior,
    acceptance_mass,
    bid_probability,
    bundle_likelihood,
    sample_bid,
    sample_economy,
)
from .instances import (
    BidCorpus,
    Instance,
    LinearPriorModel,
    build_llg,
    decompose_or_valuation,
    fit_linear_prior,
    generate_synthetic_corpus,
    instance_from_json,
    instance_to_json,
    parse_cats_file,
    predict_agent_prior,
    sample_instance,
    split_corpus,
    write_cats_file,
)
from .prices import (
    EMConfig,
    EMState,
    EMTrace,
    PricePosteriorModel,
    em_price_update,
    likelihood_components,
    map_objective,
    map_objective_gradient,
)

__version__ = "0.1.0"
