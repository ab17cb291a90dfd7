"""Instance construction and prior fitting.

Covers the stylized local-local-global instance, ingestion of bid files in
the common combinatorial-auction text format (goods/bids/dummy headers,
bid lines terminated by ``#``), seed-deterministic synthetic corpora in
four flavors, train/test splitting, and a Bayesian linear regression of
bundle value on item indicators whose predictive distribution supplies
per-agent Gaussian priors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from itertools import product
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .core import Bundle, SingleMindedAgent
from .generative import ValuePrior

PRIOR_VARIANCE_FLOOR = 0.01

#: Hyperparameter grid for the regression prior: powers of ten for both the
#: weight-prior variance and the noise variance.
HYPER_GRID = tuple(10.0**k for k in range(-2, 4))

SYNTHETIC_STYLES = ("paths", "regions", "arbitrary", "scheduling")


class CatsParseError(ValueError):
    """Malformed bid file; message carries the offending line number."""


@dataclass(frozen=True)
class Instance:
    num_items: int
    agents: tuple[SingleMindedAgent, ...]
    priors: Optional[tuple[ValuePrior, ...]] = None
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        for agent in self.agents:
            if agent.bundle.universe_size != self.num_items:
                raise ValueError("agent bundle universe disagrees with num_items")
        if self.priors is not None:
            object.__setattr__(self, "priors", tuple(self.priors))

    def max_value(self) -> float:
        return max(agent.value for agent in self.agents)


@dataclass(frozen=True)
class CorpusBid:
    bundle: Bundle
    value: float


@dataclass(frozen=True)
class BidCorpus:
    num_items: int
    bids: tuple[CorpusBid, ...]
    origin: str = "synthetic"
    split: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "bids", tuple(self.bids))

    def __len__(self) -> int:
        return len(self.bids)


def build_llg() -> tuple[Instance, Callable[[float, float], list[ValuePrior]]]:
    """Two items, two local agents valuing one item each at 4, one global
    agent valuing both at 10. The returned factory builds priors with the
    locals pinned at N(4, 0.01) and the global prior as requested."""
    agents = (
        SingleMindedAgent(Bundle.of([0], 2), 4.0),
        SingleMindedAgent(Bundle.of([1], 2), 4.0),
        SingleMindedAgent(Bundle.of([0, 1], 2), 10.0),
    )
    instance = Instance(2, agents)

    def prior_factory(global_mean: float, global_variance: float) -> list[ValuePrior]:
        return [
            ValuePrior(4.0, 0.01),
            ValuePrior(4.0, 0.01),
            ValuePrior(global_mean, global_variance),
        ]

    return instance, prior_factory


def parse_cats_file(text: str) -> BidCorpus:
    """Parse the goods/bids/dummy text format into a corpus.

    Lines starting with ``%`` are comments. Bid lines look like
    ``<id> <value> <g1> <g2> ... #``; goods with index at or above the
    declared goods count are dummies and get stripped from the bundle.
    """
    goods: Optional[int] = None
    declared_bids: Optional[int] = None
    dummy = 0
    records: list[CorpusBid] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        tokens = line.split()
        if tokens[0] in ("goods", "bids", "dummy"):
            if len(tokens) != 2 or not tokens[1].isdigit():
                raise CatsParseError(f"line {lineno}: malformed {tokens[0]} header")
            count = int(tokens[1])
            if tokens[0] == "goods":
                goods = count
            elif tokens[0] == "bids":
                declared_bids = count
            else:
                dummy = count
            continue
        if goods is None or declared_bids is None:
            raise CatsParseError(
                f"line {lineno}: bid line before goods/bids headers"
            )
        if tokens[-1] != "#":
            raise CatsParseError(f"line {lineno}: bid line not terminated by '#'")
        if len(tokens) < 3:
            raise CatsParseError(f"line {lineno}: truncated bid line")
        try:
            value = float(tokens[1])
        except ValueError:
            raise CatsParseError(f"line {lineno}: non-numeric bid value") from None
        if not np.isfinite(value) or value < 0:
            raise CatsParseError(f"line {lineno}: bid value must be nonnegative")
        items: set[int] = set()
        for token in tokens[2:-1]:
            try:
                g = int(token)
            except ValueError:
                raise CatsParseError(
                    f"line {lineno}: non-integer good index {token!r}"
                ) from None
            if not 0 <= g < goods + dummy:
                raise CatsParseError(f"line {lineno}: good index {g} out of range")
            if g < goods:
                items.add(g)
        records.append(CorpusBid(Bundle.of(items, goods), value))

    if goods is None or declared_bids is None:
        raise CatsParseError("missing goods/bids headers")
    return BidCorpus(goods, tuple(records), origin="parsed")


def write_cats_file(corpus: BidCorpus, comment: str = "") -> str:
    """Render a corpus back into the goods/bids text format."""
    lines = []
    if comment:
        lines.append(f"% {comment}")
    lines.append(f"goods {corpus.num_items}")
    lines.append(f"bids {len(corpus.bids)}")
    for i, bid in enumerate(corpus.bids):
        goods = " ".join(str(j) for j in sorted(bid.bundle.items))
        goods = f" {goods}" if goods else ""
        lines.append(f"{i} {bid.value!r}{goods} #")
    return "\n".join(lines) + "\n"


def split_corpus(
    corpus: BidCorpus, rng: np.random.Generator, train_fraction: float = 0.5
) -> tuple[BidCorpus, BidCorpus]:
    """Random disjoint and exhaustive train/test partition."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    order = rng.permutation(len(corpus.bids))
    cut = int(round(train_fraction * len(corpus.bids)))
    train = tuple(corpus.bids[i] for i in order[:cut])
    test = tuple(corpus.bids[i] for i in order[cut:])
    return (
        replace(corpus, bids=train, split="train"),
        replace(corpus, bids=test, split="test"),
    )


def sample_instance(
    corpus: BidCorpus,
    n: int,
    rng: np.random.Generator,
    seed: Optional[int] = None,
) -> Instance:
    """n corpus bids drawn uniformly without replacement become agents."""
    if len(corpus.bids) < n:
        raise ValueError(
            f"corpus has {len(corpus.bids)} bids, cannot sample {n} agents"
        )
    chosen = rng.choice(len(corpus.bids), size=n, replace=False)
    agents = tuple(
        SingleMindedAgent(corpus.bids[i].bundle, corpus.bids[i].value) for i in chosen
    )
    return Instance(corpus.num_items, agents, seed=seed)


@dataclass(frozen=True)
class LinearPriorModel:
    """Posterior over per-item value weights from Bayesian linear regression.

    Features are item indicators; the weight prior is zero-mean isotropic
    with variance ``signal_variance`` and observations carry Gaussian noise
    with variance ``noise_variance``. Hyperparameters are picked by marginal
    likelihood over a fixed grid.
    """

    weight_mean: np.ndarray
    weight_cov: np.ndarray
    noise_variance: float
    signal_variance: float
    log_marginal: float


def _design(corpus: BidCorpus) -> tuple[np.ndarray, np.ndarray]:
    X = np.zeros((len(corpus.bids), corpus.num_items))
    y = np.zeros(len(corpus.bids))
    for i, bid in enumerate(corpus.bids):
        for j in bid.bundle.items:
            X[i, j] = 1.0
        y[i] = bid.value
    return X, y


def _log_marginal(
    xtx: np.ndarray, xty: np.ndarray, yty: float, n_obs: int, s2: float, n2: float
) -> float:
    # Weight-space evidence via the matrix inversion lemma: only m x m solves.
    m = xtx.shape[0]
    inner = xtx + (n2 / s2) * np.eye(m)
    inner = inner + 1e-8 * np.eye(m)
    sign, logdet_inner = np.linalg.slogdet(np.eye(m) + (s2 / n2) * xtx)
    if sign <= 0:
        return -np.inf
    quad = (yty - xty @ np.linalg.solve(inner, xty)) / n2
    logdet = n_obs * np.log(n2) + logdet_inner
    return float(-0.5 * (quad + logdet + n_obs * np.log(2.0 * np.pi)))


def fit_linear_prior(train: BidCorpus) -> LinearPriorModel:
    """Fit value ~ item indicators with hyperparameters chosen by maximizing
    the log marginal likelihood over the grid of (signal, noise) variances."""
    if len(train.bids) < 1:
        raise ValueError("need at least one training bid")
    X, y = _design(train)
    xtx = X.T @ X
    xty = X.T @ y
    yty = float(y @ y)
    n_obs = len(train.bids)
    m = train.num_items

    best = None
    for s2, n2 in product(HYPER_GRID, HYPER_GRID):
        lml = _log_marginal(xtx, xty, yty, n_obs, s2, n2)
        if best is None or lml > best[0]:
            best = (lml, s2, n2)
    log_marginal, s2, n2 = best

    precision = xtx / n2 + np.eye(m) / s2 + 1e-8 * np.eye(m)
    cov = np.linalg.inv(precision)
    cov = 0.5 * (cov + cov.T)
    mean = cov @ xty / n2
    return LinearPriorModel(mean, cov, n2, s2, log_marginal)


def predict_agent_prior(
    model: LinearPriorModel,
    bundle: Bundle,
    variance_floor: float = PRIOR_VARIANCE_FLOOR,
) -> ValuePrior:
    """Predictive Gaussian for a bundle's value under the fitted model."""
    phi = bundle.indicator()
    mean = float(phi @ model.weight_mean)
    variance = float(phi @ model.weight_cov @ phi) + model.noise_variance
    return ValuePrior(mean, max(variance, variance_floor))


def _grid_shape(m: int) -> tuple[int, int]:
    rows = int(np.sqrt(m))
    while m % rows != 0:
        rows -= 1
    return rows, m // rows


def _grow_blob(m: int, size: int, rng: np.random.Generator) -> set[int]:
    rows, cols = _grid_shape(m)
    start = int(rng.integers(m))
    blob = {start}
    while len(blob) < size:
        frontier: set[int] = set()
        for cell in blob:
            r, c = divmod(cell, cols)
            for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < rows and 0 <= cc < cols:
                    neighbor = rr * cols + cc
                    if neighbor not in blob:
                        frontier.add(neighbor)
        if not frontier:
            break
        blob.add(int(rng.choice(sorted(frontier))))
    return blob


def generate_synthetic_corpus(
    style: str, m: int, count: int, rng: np.random.Generator
) -> BidCorpus:
    """Seed-deterministic single-minded bids with value tied to bundle content.

    Styles:
      paths       contiguous index intervals, value ~ length * lognormal
      regions     connected blobs on an (approximately square) item grid,
                  value ~ size * lognormal
      arbitrary   random subsets, value ~ sum of per-corpus item worths
                  * lognormal
      scheduling  contiguous slot windows with an early-finish premium,
                  value ~ length * premium * lognormal
    """
    if style not in SYNTHETIC_STYLES:
        raise ValueError(f"unknown style {style!r}; pick one of {SYNTHETIC_STYLES}")
    if m < 2:
        raise ValueError("need at least two items")
    max_size = min(m, 5)
    item_worth = rng.uniform(0.5, 1.5, size=m)

    records = []
    for _ in range(count):
        size = int(rng.integers(1, max_size + 1))
        noise = float(np.exp(rng.normal(0.0, 0.25)))
        if style == "paths":
            start = int(rng.integers(0, m - size + 1))
            items = set(range(start, start + size))
            value = size * noise
        elif style == "regions":
            items = _grow_blob(m, size, rng)
            value = len(items) * noise
        elif style == "arbitrary":
            items = set(int(j) for j in rng.choice(m, size=size, replace=False))
            value = float(sum(item_worth[j] for j in items)) * noise
        else:  # scheduling
            start = int(rng.integers(0, m - size + 1))
            items = set(range(start, start + size))
            premium = 1.0 + 0.3 * (1.0 - (start + size) / m)
            value = size * premium * noise
        records.append(CorpusBid(Bundle.of(items, m), float(value)))
    return BidCorpus(m, tuple(records), origin="synthetic")


def decompose_or_valuation(
    or_terms: Iterable[tuple[Bundle, float]],
) -> list[SingleMindedAgent]:
    """One single-minded pseudo-agent per elementary (bundle, value) term;
    under myopic best-response the set bids exactly like the OR bidder."""
    return [SingleMindedAgent(bundle, value) for bundle, value in or_terms]


def instance_to_json(instance: Instance) -> str:
    """Canonical JSON text: fixed key order, sorted bundle indices."""
    obj: dict = {
        "num_items": instance.num_items,
        "agents": [
            {"bundle": sorted(agent.bundle.items), "value": agent.value}
            for agent in instance.agents
        ],
        "seed": instance.seed,
    }
    if instance.priors is not None:
        obj["priors"] = [
            {"mean": prior.mean, "variance": prior.variance}
            for prior in instance.priors
        ]
    return json.dumps(obj, indent=2) + "\n"


def instance_from_json(text: str) -> Instance:
    obj = json.loads(text)
    try:
        num_items = int(obj["num_items"])
        agents = tuple(
            SingleMindedAgent(
                Bundle.of(entry["bundle"], num_items), float(entry["value"])
            )
            for entry in obj["agents"]
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed instance document: {exc}") from exc
    priors = None
    if "priors" in obj and obj["priors"] is not None:
        priors = tuple(
            ValuePrior(float(p["mean"]), float(p["variance"])) for p in obj["priors"]
        )
    return Instance(num_items, agents, priors=priors, seed=obj.get("seed"))
