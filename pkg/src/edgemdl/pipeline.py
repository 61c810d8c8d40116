"""End-to-end scoring: aggregate, discretize, cluster, score, rank."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .aggregate import Aggregation, AttributeRangeStats, aggregate, relations_of
from .cluster import XMeansConfig, xmeans
from .discretize import DEFAULT_BINS, BinSpec, bin_codes, choose_binning, histogram_matrix
from .graph import CATEGORICAL, AttributedMultigraph
from .model import ClusterModel
from .report import AbnormalityRanking, rank
from .score import DEFAULT_EPSILON, AttributeModel, ScoreBreakdown, contribution_key, expected_kl

log = logging.getLogger(__name__)

Aggregated = dict[tuple[str, str], tuple[Aggregation, dict[str, AttributeRangeStats]]]


@dataclass(frozen=True)
class PipelineConfig:
    bins: int = DEFAULT_BINS
    epsilon: float = DEFAULT_EPSILON
    xmeans: XMeansConfig = field(default_factory=XMeansConfig)


def aggregate_all(graph: AttributedMultigraph) -> Aggregated:
    out: Aggregated = {}
    for b in graph.schema.object_types:
        for r in relations_of(graph, b):
            out[(b, r)] = aggregate(graph, b, r)
    return out


def attribute_codes(agg: Aggregation, attribute: str, spec: BinSpec) -> np.ndarray:
    """Bin codes of an aggregation's flat values under ``spec``."""
    flat = agg.flat[attribute]
    if agg.kinds[attribute] == CATEGORICAL:
        domain = agg.domains[attribute]
        if spec.categories == domain:
            return flat
        return bin_codes(np.asarray(domain, dtype=object)[flat], spec)
    return bin_codes(flat, spec)


def node_distributions(agg: Aggregation, attribute: str, spec: BinSpec) -> tuple[np.ndarray, np.ndarray]:
    return histogram_matrix(attribute_codes(agg, attribute, spec), agg.offsets[attribute], spec.d)


def fit_models(graph: AttributedMultigraph, config: PipelineConfig | None = None, aggregated: Aggregated | None = None) -> ClusterModel:
    """Bin every attribute and cluster the per-node distributions.

    Attributes on which no node has any value (e.g. a temporal attribute when
    every node has a single edge) get no model.
    """
    config = config or PipelineConfig()
    aggregated = aggregated if aggregated is not None else aggregate_all(graph)
    model = ClusterModel()
    for (b, r), (agg, stats) in aggregated.items():
        rel = graph.schema.relation(r)
        for a in rel.attributes:
            st = stats[a.name]
            if a.kind != CATEGORICAL and st.empty:
                log.info("no values for %s/%s.%s; skipped", b, r, a.name)
                continue
            spec = choose_binning(a.kind, st, config.bins, a.domain)
            masses, n = node_distributions(agg, a.name, spec)
            points = masses[n > 0]
            if len(points) == 0:
                continue
            clusters = xmeans(points, config.xmeans)
            log.info("%s/%s.%s: %d nodes, %s bins (d=%d), k=%d", b, r, a.name, len(points), spec.kind, spec.d, clusters.k)
            model.add((b, r, a.name), AttributeModel(spec, clusters.centers, clusters.proportions))
    return model


def score_graph(
    graph: AttributedMultigraph,
    model: ClusterModel,
    config: PipelineConfig | None = None,
    aggregated: Aggregated | None = None,
) -> dict[str, list[ScoreBreakdown]]:
    """Unified abnormality breakdown for every node, grouped by object type.

    Every node of a type gets the same contribution keys; relations it does
    not touch contribute 0.

    Raises:
        KeyError: a node has values on an attribute the model does not cover.
    """
    config = config or PipelineConfig()
    aggregated = aggregated if aggregated is not None else aggregate_all(graph)
    out: dict[str, list[ScoreBreakdown]] = {}
    for b in graph.schema.object_types:
        nodes = graph.nodes_of_type(b)
        row = np.full(graph.n_nodes, -1, dtype=np.int64)
        row[nodes] = np.arange(len(nodes))
        keys: list[str] = []
        contrib: dict[str, np.ndarray] = {}
        cards: dict[str, np.ndarray] = {}
        for r in relations_of(graph, b):
            agg, _ = aggregated[(b, r)]
            rows = row[agg.nodes]
            cards[r] = np.zeros(len(nodes), dtype=np.int64)
            cards[r][rows] = agg.edge_counts
            for a in graph.schema.relation(r).attributes:
                key = contribution_key(r, a.name)
                keys.append(key)
                contrib[key] = np.zeros(len(nodes))
                counts = agg.counts(a.name)
                if not counts.any():
                    continue
                m = model.get((b, r, a.name))
                if m is None:
                    raise KeyError(f"no model for {(b, r, a.name)}")
                masses, n = node_distributions(agg, a.name, m.bins)
                contrib[key][rows] = n * expected_kl(masses, m, config.epsilon)
        cols = [contrib[k].tolist() for k in keys]
        card_cols = {r: c.tolist() for r, c in cards.items()}
        scores = []
        for i, v in enumerate(nodes):
            c = {k: col[i] for k, col in zip(keys, cols)}
            scores.append(
                ScoreBreakdown(
                    graph.node_ids[v],
                    math.fsum(c.values()),
                    c,
                    {r: cc[i] for r, cc in card_cols.items()},
                )
            )
        out[b] = scores
    return out


@dataclass
class PipelineResult:
    model: ClusterModel
    scores: dict[str, list[ScoreBreakdown]]
    rankings: dict[str, AbnormalityRanking]


def run_pipeline(
    graph: AttributedMultigraph, config: PipelineConfig | None = None, model: ClusterModel | None = None
) -> PipelineResult:
    """Fit (unless ``model`` is given), score and rank every object type."""
    config = config or PipelineConfig()
    aggregated = aggregate_all(graph)
    if model is None:
        model = fit_models(graph, config, aggregated)
    scores = score_graph(graph, model, config, aggregated)
    rankings = {b: rank(s, b) for b, s in scores.items()}
    return PipelineResult(model, scores, rankings)
