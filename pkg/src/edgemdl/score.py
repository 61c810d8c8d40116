"""Encoding-cost abnormality scores, in bits.

A node's surprise on one attribute is the number of extra bits needed to
encode its value vector with codes built for the model distributions:
``n * KL(node || model)``, averaged over clusters by their proportions, then
summed over attributes and relations.  Model distributions are smoothed
before use so an empty model bin costs a large but finite number of bits;
node distributions are never smoothed.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .aggregate import NodeAttributeVectors
from .discretize import BinSpec, DiscreteDistribution, bin_and_normalize

DEFAULT_EPSILON = 1e-9


def _masses(x) -> np.ndarray:
    if isinstance(x, DiscreteDistribution):
        return x.masses
    return np.asarray(x, dtype=np.float64)


def smooth(q, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """``(q + eps) / (1 + d eps)``: strictly positive whenever eps > 0, still sums to 1."""
    q = _masses(q)
    return (q + epsilon) / (1.0 + q.shape[-1] * epsilon)


def kl_divergence(p, q, epsilon: float = DEFAULT_EPSILON):
    """KL(p || q) in bits against the smoothed ``q``.

    ``p`` may be a batch (shape ``(N, d)``), giving one divergence per row.
    Terms with ``p(i) = 0`` contribute nothing.

    Raises:
        ValueError: dimension mismatch.
    """
    p, q = _masses(p), _masses(q)
    if p.shape[-1] != q.shape[-1]:
        raise ValueError(f"dimension mismatch: {p.shape[-1]} vs {q.shape[-1]}")
    qs = smooth(q, epsilon) if epsilon else q
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(p / qs), 0.0)
    kl = np.maximum(terms.sum(axis=-1), 0.0)
    return float(kl) if kl.ndim == 0 else kl


def entropy(p) -> float:
    p = _masses(p)
    nz = p[p > 0]
    return max(float(-(nz * np.log2(nz)).sum()), 0.0)


def description_length(p, model, n: int | None = None, epsilon: float = DEFAULT_EPSILON) -> float:
    """Bits to encode ``n`` values distributed as ``p`` with a code for ``model``.

    ``n`` defaults to the support count of ``p`` when it is a DiscreteDistribution.
    """
    if n is None:
        n = p.n
    if n == 0:
        return 0.0
    return n * (entropy(p) + kl_divergence(p, model, epsilon))


def score_base(p, n: int, model, epsilon: float = DEFAULT_EPSILON) -> float:
    """Extra bits against a single model distribution: ``n * KL(p || model)``."""
    kl = kl_divergence(p, model, epsilon)
    return n * kl


def _check_clusters(clusters) -> tuple[np.ndarray, np.ndarray]:
    centers = np.asarray(clusters.centers, dtype=np.float64)
    rho = np.asarray(clusters.proportions, dtype=np.float64)
    if len(centers) == 0:
        raise ValueError("empty cluster set")
    return centers, rho


def expected_kl(p, clusters, epsilon: float = DEFAULT_EPSILON):
    """Proportion-weighted KL of ``p`` (one row or a batch) over the cluster centers."""
    centers, rho = _check_clusters(clusters)
    acc = 0.0
    for g in range(len(centers)):
        acc = acc + rho[g] * kl_divergence(p, centers[g], epsilon)
    return acc


def score_multifaceted(p, n: int, clusters, epsilon: float = DEFAULT_EPSILON) -> float:
    """Expected extra bits over clusters: ``n * sum_g rho_g KL(p || C_g)``.

    ``clusters`` is anything with ``centers`` and ``proportions``.
    """
    return n * expected_kl(p, clusters, epsilon)


@dataclass(frozen=True, eq=False)
class AttributeModel:
    """Fitted model of one (object type, relation, attribute): bins, centers, proportions."""

    bins: BinSpec
    centers: np.ndarray
    proportions: np.ndarray


@dataclass(frozen=True)
class ScoreBreakdown:
    node: str
    total: float
    contributions: dict[str, float] = field(default_factory=dict)
    cardinalities: dict[str, int] = field(default_factory=dict)


def contribution_key(relation: str, attribute: str) -> str:
    return f"{relation}.{attribute}"


def score_unified(
    vectors: Mapping[str, NodeAttributeVectors] | list[NodeAttributeVectors],
    models: Mapping[tuple[str, str, str], AttributeModel],
    epsilon: float = DEFAULT_EPSILON,
    node: str | None = None,
) -> ScoreBreakdown:
    """Total abnormality of one node over all its relations and attributes.

    ``vectors`` holds the node's aggregated vectors, one entry per relation it
    touches; ``models`` maps (object type, relation, attribute) to fitted
    models.  Each attribute contributes ``|f| * sum_g rho_g KL`` where ``|f|``
    is that attribute's vector length (the IAT count for temporal ones).

    Raises:
        KeyError: no model for an attribute on which the node has values.
    """
    items = list(vectors.values()) if isinstance(vectors, Mapping) else list(vectors)
    if node is None:
        if not items:
            raise ValueError("cannot infer the node id from an empty vector set")
        node = items[0].node
    contributions: dict[str, float] = {}
    cardinalities: dict[str, int] = {}
    for nv in items:
        cardinalities[nv.relation] = nv.cardinality
        for attr, values in nv.values.items():
            key = contribution_key(nv.relation, attr)
            n = len(values)
            if n == 0:
                contributions[key] = 0.0
                continue
            model = models.get((nv.object_type, nv.relation, attr))
            if model is None:
                raise KeyError(f"no model for {(nv.object_type, nv.relation, attr)}")
            dist = bin_and_normalize(values, model.bins)
            contributions[key] = score_multifaceted(dist, n, model, epsilon)
    return ScoreBreakdown(node, math.fsum(contributions.values()), contributions, cardinalities)
