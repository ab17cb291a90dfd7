"""Command-line harness for the auction experiments.

Every knob of the experimental protocol is a flag with the conventional
default (beta 10, round cap 100, variance floor 0.01, 100 clock steps).
The master seed comes from --seed or the BAYESCLEAR_SEED environment
variable, with the flag winning.
"""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from .auction import AuctionConfig, run_bayesian_auction
from .benchmark import run_llg_sweep, synthetic_benchmark
from .clock import ClockConfig, run_clock_auction
from .generative import ResponseModel, ValuePrior
from .instances import (
    SYNTHETIC_STYLES,
    fit_linear_prior,
    generate_synthetic_corpus,
    instance_from_json,
    parse_cats_file,
    split_corpus,
    write_cats_file,
)
from .report import emit_llg_sweep, emit_report

seed_option = click.option(
    "--seed",
    type=int,
    default=None,
    envvar="BAYESCLEAR_SEED",
    show_envvar=True,
    help="Master seed (default 0).",
)
beta_option = click.option("--beta", type=float, default=10.0, show_default=True)
cap_option = click.option(
    "--rounds-cap", type=int, default=100, show_default=True
)
floor_option = click.option(
    "--var-floor", type=float, default=0.01, show_default=True
)
format_option = click.option(
    "--format",
    "fmt",
    type=click.Choice(["csv"]),
    default="csv",
    show_default=True,
)


def _resolve_seed(seed: int | None) -> int:
    return 0 if seed is None else seed


def _auction_config(beta: float, rounds_cap: int, var_floor: float) -> AuctionConfig:
    return AuctionConfig(beta=beta, variance_floor=var_floor, round_cap=rounds_cap)


def _parse_variances(spec: str) -> list[float]:
    if ":" in spec:
        lo, hi = spec.split(":", 1)
        return [float(v) for v in range(int(lo), int(hi) + 1)]
    return [float(v) for v in spec.split(",") if v]


@click.group()
def main():
    """Bayesian clearing auction simulator and clock-auction benchmark."""


@main.command("llg-sweep")
@click.option(
    "--mode",
    type=click.Choice(["unbiased", "biased", "both"]),
    default="both",
    show_default=True,
)
@click.option(
    "--variances",
    default="1:25",
    show_default=True,
    help="Integer range lo:hi or comma-separated list.",
)
@beta_option
@cap_option
@floor_option
@format_option
@seed_option
@click.option("--no-figures", is_flag=True, help="Skip PNG rendering.")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def llg_sweep(mode, variances, beta, rounds_cap, var_floor, fmt, seed, no_figures, out):
    """Rounds-to-clearing on the local-local-global instance, per prior
    variance over the global agent's value."""
    config = _auction_config(beta, rounds_cap, var_floor)
    grid = _parse_variances(variances)
    modes = ["unbiased", "biased"] if mode == "both" else [mode]
    rows = []
    for bias_mode in modes:
        rows.extend(run_llg_sweep(grid, bias_mode, config))
    written = emit_llg_sweep(rows, out, figures=not no_figures)
    for path in written:
        click.echo(f"wrote {path}")


@main.command("bench")
@click.option(
    "--style",
    "styles",
    multiple=True,
    type=click.Choice(SYNTHETIC_STYLES),
    help="Valuation domain(s); default all four.",
)
@click.option("--instances", type=int, default=25, show_default=True)
@click.option("--items", type=int, default=12, show_default=True)
@click.option("--agents", type=int, default=10, show_default=True)
@click.option("--corpus-bids", type=int, default=1000, show_default=True)
@click.option("--steps", type=int, default=100, show_default=True)
@beta_option
@cap_option
@floor_option
@format_option
@seed_option
@click.option("--no-figures", is_flag=True, help="Skip PNG rendering.")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def bench(
    styles,
    instances,
    items,
    agents,
    corpus_bids,
    steps,
    beta,
    rounds_cap,
    var_floor,
    fmt,
    seed,
    no_figures,
    out,
):
    """Synthetic-corpus benchmark: one Bayesian run and a clock-step ladder
    per instance, with SIO/SAOc/SAOr baselines derived per domain."""
    if instances < 1:
        raise click.UsageError("--instances must be at least 1")
    config = _auction_config(beta, rounds_cap, var_floor)
    reports = synthetic_benchmark(
        styles=styles or SYNTHETIC_STYLES,
        instances_per_style=instances,
        num_items=items,
        num_agents=agents,
        corpus_size=corpus_bids,
        steps=steps,
        config=config,
        master_seed=_resolve_seed(seed),
    )
    written = emit_report(reports, out, figures=not no_figures)
    for path in written:
        click.echo(f"wrote {path}")


@main.command("gen-corpus")
@click.option(
    "--style", type=click.Choice(SYNTHETIC_STYLES), default="paths", show_default=True
)
@click.option("--items", type=int, default=12, show_default=True)
@click.option("--count", type=int, default=1000, show_default=True)
@seed_option
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def gen_corpus(style, items, count, seed, out):
    """Write a synthetic bid corpus in the goods/bids text format."""
    rng = np.random.default_rng(_resolve_seed(seed))
    corpus = generate_synthetic_corpus(style, items, count, rng)
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(write_cats_file(corpus, comment=f"synthetic {style} corpus"))
    click.echo(f"wrote {path}")


@main.command("fit-prior")
@click.option("--corpus", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--train-frac", type=float, default=0.5, show_default=True)
@seed_option
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def fit_prior(corpus, train_frac, seed, out):
    """Split a bid corpus, fit the linear value prior on the training half,
    and write the fitted model as JSON."""
    try:
        parsed = parse_cats_file(Path(corpus).read_text())
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    rng = np.random.default_rng(_resolve_seed(seed))
    train, test = split_corpus(parsed, rng, train_frac)
    model = fit_linear_prior(train)
    document = {
        "num_items": parsed.num_items,
        "train_bids": len(train.bids),
        "test_bids": len(test.bids),
        "signal_variance": model.signal_variance,
        "noise_variance": model.noise_variance,
        "log_marginal": model.log_marginal,
        "weight_mean": model.weight_mean.tolist(),
        "weight_cov": model.weight_cov.tolist(),
    }
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=2) + "\n")
    click.echo(
        f"fitted prior: signal variance {model.signal_variance}, "
        f"noise variance {model.noise_variance}"
    )
    click.echo(f"wrote {path}")


@main.command("run-one")
@click.option("--instance", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option(
    "--auction",
    type=click.Choice(["bayesian", "clock"]),
    default="bayesian",
    show_default=True,
)
@click.option("--tau", type=float, default=None, help="Clock step size.")
@click.option(
    "--prior-var",
    type=float,
    default=1.0,
    show_default=True,
    help="Prior variance when the instance file carries no priors "
    "(means default to the true values).",
)
@beta_option
@cap_option
@floor_option
@seed_option
@click.option("--out", type=click.Path(file_okay=False), required=True)
def run_one(
    instance, auction, tau, prior_var, beta, rounds_cap, var_floor, seed, out
):
    """Run a single auction on an instance file and write its round trace."""
    inst = instance_from_json(Path(instance).read_text())
    config = _auction_config(beta, rounds_cap, var_floor)
    response = ResponseModel(beta=beta, mode="exact")
    if auction == "clock":
        if tau is None:
            raise click.UsageError("--tau is required for the clock auction")
        result = run_clock_auction(
            inst.agents, ClockConfig(tau=tau, round_cap=rounds_cap), response
        )
    else:
        priors = inst.priors or tuple(
            ValuePrior(agent.value, prior_var) for agent in inst.agents
        )
        result = run_bayesian_auction(inst.agents, priors, config, response)

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    bid_lines = ["round,agent,cost,bid,belief_mean,belief_variance"]
    price_lines = ["round,item,price"]
    for record in result.trace.rounds:
        for bid in record.bids:
            if record.beliefs:
                belief = record.beliefs[bid.agent]
                mean, variance = repr(belief.mean), repr(belief.variance)
            else:
                mean = variance = ""
            bid_lines.append(
                f"{record.round_index},{bid.agent},{bid.cost!r},{bid.bid},"
                f"{mean},{variance}"
            )
        for j, price in enumerate(record.prices.per_item):
            price_lines.append(f"{record.round_index},{j},{float(price)!r}")
    (out_dir / "trace.csv").write_text("\n".join(bid_lines) + "\n")
    (out_dir / "prices.csv").write_text("\n".join(price_lines) + "\n")
    status = "cleared" if result.certificate.cleared else "failed to clear"
    click.echo(f"{status} after {result.rounds} round(s)")
    click.echo(f"wrote {out_dir / 'trace.csv'}")
    click.echo(f"wrote {out_dir / 'prices.csv'}")


if __name__ == "__main__":
    main()
