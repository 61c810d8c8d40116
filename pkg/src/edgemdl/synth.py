"""Labeled synthetic rating graphs and ranking evaluation.

Users are drawn from behavior archetypes (a star-rating distribution, an
interarrival-time law and an activity law) and rate uniformly chosen
products.  Fraud archetypes are injected next to honest ones; the labels come
from construction, so precision@k can be measured exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .graph import AttributedMultigraph, RelationEdges, parse_schema

HONEST = "honest"
FRAUD_PREFIX = "fraud:"

DAY = 86400.0
# J-shaped honest rating mass over 1..5 stars (our choice, heavier at 4/5)
J_SHAPE = (0.15, 0.05, 0.05, 0.20, 0.55)

RATING_SCHEMA = {
    "object_types": ["user", "product"],
    "relations": [
        {
            "name": "rates",
            "source": "user",
            "target": "product",
            "directed": False,
            "attributes": [
                {"name": "stars", "kind": "categorical", "domain": ["1", "2", "3", "4", "5"]},
                {"name": "ts", "kind": "temporal"},
            ],
        }
    ],
}


class SynthConfigError(ValueError):
    pass


@dataclass(frozen=True)
class IATLaw:
    """Interarrival times in seconds.

    ``lognormal``: exp(N(mu, sigma)); ``fixed``: always ``value``;
    ``mixture``: ``value`` with probability ``weight``, lognormal otherwise.
    """

    kind: str
    mu: float = 0.0
    sigma: float = 1.0
    value: float = 0.0
    weight: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("lognormal", "fixed", "mixture"):
            raise SynthConfigError(f"unknown IAT law {self.kind!r}")
        if self.sigma < 0 or self.value < 0 or not 0 <= self.weight <= 1:
            raise SynthConfigError("IAT law parameters out of range")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "fixed":
            return np.full(size, float(self.value))
        draws = rng.lognormal(self.mu, self.sigma, size)
        if self.kind == "mixture":
            pick = rng.random(size) < self.weight
            draws = np.where(pick, float(self.value), draws)
        return draws


@dataclass(frozen=True)
class ActivityLaw:
    """Edges per user: ``geometric`` (mean 1/p, >= 1), ``uniform`` on [low, high], or ``fixed``."""

    kind: str
    p: float = 0.5
    low: int = 1
    high: int = 1
    value: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("geometric", "uniform", "fixed"):
            raise SynthConfigError(f"unknown activity law {self.kind!r}")
        if self.kind == "geometric" and not 0 < self.p <= 1:
            raise SynthConfigError("geometric activity needs 0 < p <= 1")
        if self.kind == "uniform" and not 1 <= self.low <= self.high:
            raise SynthConfigError("uniform activity needs 1 <= low <= high")
        if self.kind == "fixed" and self.value < 1:
            raise SynthConfigError("activity must be >= 1")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "geometric":
            return rng.geometric(self.p, size).astype(np.int64)
        if self.kind == "uniform":
            return rng.integers(self.low, self.high + 1, size).astype(np.int64)
        return np.full(size, self.value, dtype=np.int64)

    @property
    def mean(self) -> float:
        if self.kind == "geometric":
            return 1.0 / self.p
        if self.kind == "uniform":
            return (self.low + self.high) / 2
        return float(self.value)


@dataclass(frozen=True)
class BehaviorArchetype:
    name: str
    rating_mass: tuple[float, ...]
    iat: IATLaw
    activity: ActivityLaw
    fraud: bool = False

    def __post_init__(self) -> None:
        m = np.asarray(self.rating_mass, dtype=np.float64)
        if m.shape != (5,) or np.any(m < 0) or abs(m.sum() - 1) > 1e-9:
            raise SynthConfigError(f"archetype {self.name!r}: rating_mass must be 5 non-negative values summing to 1")

    @property
    def label(self) -> str:
        return f"{FRAUD_PREFIX}{self.name}" if self.fraud else HONEST

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "fraud": self.fraud,
            "rating_mass": list(self.rating_mass),
            "iat": {k: v for k, v in vars(self.iat).items()},
            "activity": {k: v for k, v in vars(self.activity).items()},
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> BehaviorArchetype:
        try:
            return cls(
                name=str(doc["name"]),
                rating_mass=tuple(float(x) for x in doc["rating_mass"]),
                iat=IATLaw(**doc["iat"]),
                activity=ActivityLaw(**doc["activity"]),
                fraud=bool(doc.get("fraud", False)),
            )
        except (KeyError, TypeError) as exc:
            raise SynthConfigError(f"bad archetype {doc.get('name', '?')!r}: {exc}") from None


HONEST_TYPICAL = BehaviorArchetype(
    "typical",
    J_SHAPE,
    IATLaw("lognormal", mu=math.log(5 * DAY), sigma=1.2),
    ActivityLaw("geometric", p=0.25),
)
HONEST_CRITICAL = BehaviorArchetype(
    "critical",
    (0.45, 0.25, 0.15, 0.10, 0.05),
    IATLaw("lognormal", mu=math.log(10 * DAY), sigma=1.2),
    ActivityLaw("geometric", p=0.3),
)
RAPID_FIRE = BehaviorArchetype(
    "rapid-fire-5star",
    (0.0, 0.0, 0.0, 0.0, 1.0),
    IATLaw("fixed", value=5.0),
    ActivityLaw("uniform", low=200, high=500),
    fraud=True,
)
DEFAMER = BehaviorArchetype(
    "defamer",
    (1.0, 0.0, 0.0, 0.0, 0.0),
    IATLaw("mixture", mu=math.log(DAY), sigma=1.0, value=5.0, weight=0.8),
    ActivityLaw("uniform", low=50, high=200),
    fraud=True,
)


@dataclass
class SynthConfig:
    mix: list[tuple[BehaviorArchetype, float]]
    n_users: int
    n_products: int
    seed: int = 0
    allocation: str = "multinomial"
    start_window: float = 730 * DAY

    def validate(self) -> None:
        if not self.mix:
            raise SynthConfigError("archetype mix is empty")
        props = np.array([p for _, p in self.mix], dtype=np.float64)
        if np.any(props < 0) or abs(props.sum() - 1.0) > 1e-9:
            raise SynthConfigError(f"archetype proportions must be non-negative and sum to 1, got {props.sum():.6g}")
        if self.n_users <= 0:
            raise SynthConfigError("empty population: n_users must be positive")
        if self.n_products <= 0:
            raise SynthConfigError("n_products must be positive")
        if self.allocation not in ("multinomial", "exact"):
            raise SynthConfigError(f"unknown allocation {self.allocation!r}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_users": self.n_users,
                "n_products": self.n_products,
                "seed": self.seed,
                "allocation": self.allocation,
                "start_window": self.start_window,
                "archetypes": [{**a.to_dict(), "proportion": p} for a, p in self.mix],
            },
            indent=1,
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> SynthConfig:
        try:
            doc = json.loads(text)
            mix = [(BehaviorArchetype.from_dict(a), float(a["proportion"])) for a in doc["archetypes"]]
            cfg = cls(
                mix=mix,
                n_users=int(doc["n_users"]),
                n_products=int(doc["n_products"]),
                seed=int(doc.get("seed", 0)),
                allocation=doc.get("allocation", "multinomial"),
                start_window=float(doc.get("start_window", 730 * DAY)),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SynthConfigError):
                raise
            raise SynthConfigError(f"invalid generator config: {exc}") from None
        cfg.validate()
        return cfg


def default_config(n_honest: int = 10_000, n_fraud: int = 100, n_products: int = 1_000, seed: int = 0) -> SynthConfig:
    """The reference scenario: 90/10 typical/critical honest users plus rapid-fire 5-star fraudsters."""
    n = n_honest + n_fraud
    mix = [
        (HONEST_TYPICAL, 0.9 * n_honest / n),
        (HONEST_CRITICAL, 0.1 * n_honest / n),
        (RAPID_FIRE, n_fraud / n),
    ]
    return SynthConfig(mix, n, n_products, seed, allocation="exact")


def scaled_config(target_edges: int, seed: int = 0) -> SynthConfig:
    """The reference mix scaled so the expected edge count is about ``target_edges``."""
    base = default_config(seed=seed)
    per_user = sum(p * a.activity.mean for a, p in base.mix)
    scale = target_edges / (per_user * base.n_users)
    n_honest = round(10_000 * scale)
    n_fraud = max(1, round(100 * scale))
    return default_config(n_honest, n_fraud, max(1, round(1_000 * scale)), seed)


@dataclass(frozen=True, eq=False)
class LabeledGraph:
    graph: AttributedMultigraph
    labels: dict[str, str] = field(default_factory=dict)

    def fraud_nodes(self) -> set[str]:
        return {n for n, l in self.labels.items() if is_fraud(l)}


def is_fraud(label: str) -> bool:
    return label.startswith(FRAUD_PREFIX)


def _allocate(n: int, props: np.ndarray, rng: np.random.Generator, allocation: str) -> np.ndarray:
    if allocation == "multinomial":
        return rng.multinomial(n, props / props.sum())
    raw = n * props
    counts = np.floor(raw).astype(np.int64)
    short = n - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def generate(
    mix: Sequence[tuple[BehaviorArchetype, float]] | SynthConfig,
    n_users: int | None = None,
    n_products: int | None = None,
    seed: int = 0,
    allocation: str = "multinomial",
) -> LabeledGraph:
    """Draw a labeled user-rates-product graph; identical arguments give identical graphs.

    Raises:
        SynthConfigError: empty mix, proportions not summing to 1, empty population.
    """
    if isinstance(mix, SynthConfig):
        cfg = mix
    else:
        cfg = SynthConfig(list(mix), n_users or 0, n_products or 0, seed, allocation)
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    archetypes = [a for a, _ in cfg.mix]
    counts = _allocate(cfg.n_users, np.array([p for _, p in cfg.mix]), rng, cfg.allocation)
    kind = rng.permutation(np.repeat(np.arange(len(archetypes)), counts))

    activity = np.empty(cfg.n_users, dtype=np.int64)
    for j, a in enumerate(archetypes):
        sel = kind == j
        activity[sel] = a.activity.sample(rng, int(sel.sum()))
    n_edges = int(activity.sum())
    user = np.repeat(np.arange(cfg.n_users), activity)
    edge_kind = kind[user]

    stars = np.empty(n_edges, dtype=np.int64)
    gaps = np.empty(n_edges, dtype=np.float64)
    for j, a in enumerate(archetypes):
        sel = edge_kind == j
        m = int(sel.sum())
        stars[sel] = rng.choice(5, size=m, p=np.asarray(a.rating_mass))
        gaps[sel] = a.iat.sample(rng, m)
    first = np.concatenate([[0], np.cumsum(activity)[:-1]])
    gaps[first] = rng.uniform(0.0, cfg.start_window, cfg.n_users)
    csum = np.cumsum(gaps)
    base = np.repeat(csum[first] - gaps[first], activity)
    ts = np.round(csum - base)
    product = rng.integers(0, cfg.n_products, n_edges)

    uw = len(str(cfg.n_users - 1))
    pw = len(str(cfg.n_products - 1))
    # first-appearance node order over (user, product) endpoint pairs
    seq = np.stack([user, cfg.n_users + product], axis=1).ravel()
    _, firsts = np.unique(seq, return_index=True)
    order = seq[np.sort(firsts)]
    remap = np.empty(cfg.n_users + cfg.n_products, dtype=np.int64)
    remap[order] = np.arange(len(order))
    node_ids = tuple(f"u{i:0{uw}d}" if i < cfg.n_users else f"p{i - cfg.n_users:0{pw}d}" for i in order.tolist())
    node_types = tuple("user" if i < cfg.n_users else "product" for i in order.tolist())

    schema = parse_schema(json.dumps(RATING_SCHEMA))
    edges = {
        "rates": RelationEdges(
            rows=np.arange(n_edges, dtype=np.int64),
            source=remap[user],
            target=remap[cfg.n_users + product],
            columns={"stars": stars, "ts": ts},
        )
    }
    graph = AttributedMultigraph(schema, node_ids, node_types, edges)
    labels = {f"u{i:0{uw}d}": archetypes[kind[i]].label for i in range(cfg.n_users)}
    return LabeledGraph(graph, labels)


def dump_labels(labels: dict[str, str]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["node", "label"])
    for n, l in labels.items():
        w.writerow([n, l])
    return out.getvalue()


def parse_labels(text: str) -> dict[str, str]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["node", "label"]:
        raise ValueError("labels file header must be 'node,label'")
    return {row[0]: row[1] for row in reader if row}


def precision_at_k(ranking, labels: dict[str, str], k: int) -> float:
    """Fraction of the top ``k`` ranked nodes labeled as fraud.

    ``ranking`` is an AbnormalityRanking or a sequence of node ids.

    Raises:
        ValueError: ``k < 1`` or ``k`` larger than the ranking.
    """
    nodes = ranking.nodes if hasattr(ranking, "nodes") else list(ranking)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(nodes):
        raise ValueError(f"k={k} exceeds ranking length {len(nodes)}")
    return sum(is_fraud(labels.get(n, HONEST)) for n in nodes[:k]) / k


def subsample_edges(graph: AttributedMultigraph, fraction: float, seed: int = 0) -> AttributedMultigraph:
    """Induced subgraph on a uniform edge sample; nested across fractions for a fixed seed."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    perm = np.random.default_rng(seed).permutation(graph.n_edges)
    m = max(1, round(fraction * graph.n_edges))
    return graph.edge_subgraph(np.sort(perm[:m]))


def scaling_benchmark(
    graph: AttributedMultigraph, fractions: Sequence[float], seed: int = 0, config=None
) -> list[tuple[int, float]]:
    """Wall time of the full pipeline on nested edge subsamples."""
    from .pipeline import run_pipeline

    if list(fractions) != sorted(fractions) or not all(0 < f <= 1 for f in fractions):
        raise ValueError("fractions must be ascending within (0, 1]")
    rows = []
    for f in fractions:
        sub = subsample_edges(graph, f, seed)
        t0 = time.perf_counter()
        run_pipeline(sub, config)
        rows.append((sub.n_edges, time.perf_counter() - t0))
    return rows


def loglog_slope(rows: Sequence[tuple[int, float]]) -> float:
    """Least-squares slope of log(seconds) against log(edges)."""
    x = np.log([r[0] for r in rows])
    y = np.log([r[1] for r in rows])
    return float(np.polyfit(x, y, 1)[0])


def dump_benchmark(rows: Sequence[tuple[int, float]]) -> str:
    return "edges,seconds\n" + "".join(f"{e},{s:.6f}\n" for e, s in rows)
