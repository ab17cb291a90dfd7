"""Benchmark harness: LLG variance sweeps and Bayesian-vs-clock comparisons.

For every instance the harness runs one Bayesian auction and a ladder of
clock auctions whose step sizes span (0, max agent value] on a uniform
grid. Three baseline views are derived per domain: SIO picks the best step
per instance, SAOc the single grid step clearing the most instances, and
SAOr the single grid step with the lowest mean rounds over the instances
it clears.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .auction import AuctionConfig, AuctionResult, run_bayesian_auction
from .clock import ClockConfig, run_clock_auction
from .core import SingleMindedAgent, clearing_objective, efficient_allocation
from .generative import ResponseModel, ValuePrior
from .instances import (
    Instance,
    SYNTHETIC_STYLES,
    fit_linear_prior,
    generate_synthetic_corpus,
    predict_agent_prior,
    sample_instance,
    split_corpus,
)

BASELINE_KINDS = ("sio", "saoc", "saor")


@dataclass(frozen=True)
class RunRecord:
    """One auction run as a report row; tau is None for the Bayesian runs."""

    instance_id: str
    auction: str
    tau: Optional[float]
    tau_index: Optional[int]
    cleared: bool
    rounds: int
    objective_gap: float
    seed: int


@dataclass(frozen=True)
class SweepRow:
    bias_mode: str
    variance: float
    rounds: int
    cleared: bool


@dataclass
class BenchmarkReport:
    domain: str
    round_cap: int
    steps: int
    instance_ids: list[str]
    runs: list[RunRecord]
    sio_index: dict[str, int] = field(default_factory=dict)
    saoc_index: int = 1
    saor_index: int = 1

    def bayesian_run(self, instance_id: str) -> RunRecord:
        return self._lookup[(instance_id, None)]

    def clock_run(self, instance_id: str, tau_index: int) -> RunRecord:
        return self._lookup[(instance_id, tau_index)]

    def kind_run(self, instance_id: str, kind: str) -> RunRecord:
        """Row backing a report column: bayesian, sio, saoc, or saor."""
        if kind == "bayesian":
            return self.bayesian_run(instance_id)
        if kind == "sio":
            return self.clock_run(instance_id, self.sio_index[instance_id])
        if kind == "saoc":
            return self.clock_run(instance_id, self.saoc_index)
        if kind == "saor":
            return self.clock_run(instance_id, self.saor_index)
        raise ValueError(f"unknown auction kind {kind!r}")

    def finalize(self) -> None:
        self._lookup = {
            (run.instance_id, run.tau_index): run for run in self.runs
        }
        self._derive_baselines()

    def _derive_baselines(self) -> None:
        steps = range(1, self.steps + 1)
        for instance_id in self.instance_ids:
            self.sio_index[instance_id] = min(
                steps, key=lambda k: (self.clock_run(instance_id, k).rounds, k)
            )

        def cleared_count(k: int) -> int:
            return sum(
                self.clock_run(i, k).cleared for i in self.instance_ids
            )

        self.saoc_index = min(steps, key=lambda k: (-cleared_count(k), k))

        def saor_key(k: int):
            rounds = [
                self.clock_run(i, k).rounds
                for i in self.instance_ids
                if self.clock_run(i, k).cleared
            ]
            if not rounds:
                return (np.inf, 0, k)
            return (float(np.mean(rounds)), -len(rounds), k)

        self.saor_index = min(steps, key=saor_key)


def _derived_seed(master_seed: int, *key: int) -> int:
    seq = np.random.SeedSequence((master_seed, *key))
    return int(seq.generate_state(1)[0])


def run_llg_sweep(
    variances: Sequence[float],
    bias_mode: str,
    config: Optional[AuctionConfig] = None,
) -> list[SweepRow]:
    """One Bayesian auction per prior variance over the global agent's value.

    Unbiased mode centers the prior on the true value 10, biased mode on 4.
    Agents bid exact best-response, so the sweep is deterministic.
    """
    from .instances import build_llg

    if bias_mode not in ("unbiased", "biased"):
        raise ValueError("bias_mode must be 'unbiased' or 'biased'")
    instance, prior_factory = build_llg()
    global_mean = 10.0 if bias_mode == "unbiased" else 4.0
    response = ResponseModel(beta=10.0, mode="exact")
    rows = []
    for variance in variances:
        priors = prior_factory(global_mean, float(variance))
        result = run_bayesian_auction(
            instance.agents, priors, config, response
        )
        rows.append(
            SweepRow(
                bias_mode, float(variance), result.rounds, result.certificate.cleared
            )
        )
    return rows


def _final_gap(result: AuctionResult, agents, welfare: float) -> float:
    final_prices = result.trace.final_prices()
    return clearing_objective(agents, final_prices) - welfare


def run_benchmark(
    instances: Sequence[Instance],
    priors: Sequence[Sequence[ValuePrior]],
    steps: int = 100,
    config: Optional[AuctionConfig] = None,
    domain: str = "default",
    master_seed: int = 0,
) -> BenchmarkReport:
    """Per instance: one Bayesian run plus ``steps`` clock runs with step
    sizes k * max_value / steps for k = 1..steps."""
    if not instances:
        raise ValueError("need at least one instance")
    if len(priors) != len(instances):
        raise ValueError("need one prior list per instance")
    config = config or AuctionConfig()
    response = ResponseModel(beta=config.beta, mode="exact")

    report = BenchmarkReport(
        domain=domain,
        round_cap=config.round_cap,
        steps=steps,
        instance_ids=[],
        runs=[],
    )
    for idx, (instance, instance_priors) in enumerate(zip(instances, priors)):
        instance_id = f"{domain}-{idx:03d}"
        report.instance_ids.append(instance_id)
        agents = instance.agents
        _, welfare = efficient_allocation(agents)
        max_value = instance.max_value()

        result = run_bayesian_auction(agents, instance_priors, config, response)
        report.runs.append(
            RunRecord(
                instance_id,
                "bayesian",
                None,
                None,
                result.certificate.cleared,
                result.rounds,
                _final_gap(result, agents, welfare),
                _derived_seed(master_seed, idx, 0),
            )
        )
        for k in range(1, steps + 1):
            tau = k * max_value / steps
            clock_result = run_clock_auction(
                agents,
                ClockConfig(tau=tau, round_cap=config.round_cap),
                response,
                tol=config.indifference_tol,
            )
            report.runs.append(
                RunRecord(
                    instance_id,
                    "clock",
                    tau,
                    k,
                    clock_result.certificate.cleared,
                    clock_result.rounds,
                    _final_gap(clock_result, agents, welfare),
                    _derived_seed(master_seed, idx, k),
                )
            )
    report.finalize()
    return report


def common_cleared_ids(report: BenchmarkReport) -> list[str]:
    """Instances cleared by the Bayesian auction, SIO, and SAOr alike; round
    distributions are compared on this set only."""
    return [
        i
        for i in report.instance_ids
        if report.kind_run(i, "bayesian").cleared
        and report.kind_run(i, "sio").cleared
        and report.kind_run(i, "saor").cleared
    ]


def aggregate_rows(report: BenchmarkReport) -> list[dict]:
    """Cleared counts over all instances plus round statistics over the
    commonly cleared set, one row per auction kind."""
    common = common_cleared_ids(report)
    rows = []
    for kind in ("bayesian",) + BASELINE_KINDS:
        cleared = sum(
            report.kind_run(i, kind).cleared for i in report.instance_ids
        )
        rounds = np.array(
            [report.kind_run(i, kind).rounds for i in common], dtype=float
        )
        if rounds.size:
            q1, med, q3 = np.quantile(rounds, [0.25, 0.5, 0.75])
            mean = float(rounds.mean())
        else:
            q1 = med = q3 = mean = float("nan")
        rows.append(
            {
                "domain": report.domain,
                "auction": kind,
                "instances": len(report.instance_ids),
                "cleared": int(cleared),
                "common_cleared": len(common),
                "rounds_mean": mean,
                "rounds_q1": float(q1),
                "rounds_median": float(med),
                "rounds_q3": float(q3),
            }
        )
    return rows


def build_synthetic_domain(
    style: str,
    num_instances: int,
    num_items: int = 12,
    num_agents: int = 10,
    corpus_size: int = 1000,
    train_fraction: float = 0.5,
    master_seed: int = 0,
) -> tuple[list[Instance], list[list[ValuePrior]]]:
    """Instances plus fitted priors mirroring the corpus-driven protocol:
    per instance, generate a corpus, split it, fit the linear prior on the
    training half, and sample the agents from the test half."""
    style_idx = SYNTHETIC_STYLES.index(style)
    instances = []
    priors = []
    for i in range(num_instances):
        rng = np.random.default_rng(
            np.random.SeedSequence((master_seed, style_idx, i))
        )
        corpus = generate_synthetic_corpus(style, num_items, corpus_size, rng)
        train, test = split_corpus(corpus, rng, train_fraction)
        model = fit_linear_prior(train)
        instance = sample_instance(
            test, num_agents, rng, seed=_derived_seed(master_seed, style_idx, i)
        )
        instances.append(instance)
        priors.append(
            [predict_agent_prior(model, agent.bundle) for agent in instance.agents]
        )
    return instances, priors


def synthetic_benchmark(
    styles: Sequence[str] = SYNTHETIC_STYLES,
    instances_per_style: int = 25,
    num_items: int = 12,
    num_agents: int = 10,
    corpus_size: int = 1000,
    steps: int = 100,
    config: Optional[AuctionConfig] = None,
    master_seed: int = 0,
) -> list[BenchmarkReport]:
    """Full synthetic pipeline: one report per style domain."""
    reports = []
    for style in styles:
        instances, priors = build_synthetic_domain(
            style,
            instances_per_style,
            num_items,
            num_agents,
            corpus_size,
            master_seed=master_seed,
        )
        reports.append(
            run_benchmark(
                instances,
                priors,
                steps=steps,
                config=config,
                domain=style,
                master_seed=master_seed,
            )
        )
    return reports
