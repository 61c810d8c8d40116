"""Per-node aggregation of adjacent edge attribute values.

For one (object type, relation) pair every incident node receives one value
vector per attribute.  Temporal attributes are turned into interarrival
times (sorted first difference) on the way in, so downstream stages only ever
see IATs.  Values are kept in flat arrays with CSR-style offsets; the
``Aggregation`` object exposes them as a read-only mapping node id ->
``NodeAttributeVectors``.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from dataclasses import dataclass

import numpy as np

from .graph import CATEGORICAL, TEMPORAL, AttributedMultigraph


def compute_iat(timestamps) -> np.ndarray:
    """Interarrival times: sort ascending, then take consecutive differences.

    >>> compute_iat([205, 100, 105]).tolist()
    [5.0, 100.0]
    """
    ts = np.sort(np.asarray(timestamps, dtype=np.float64))
    return np.diff(ts)


@dataclass(frozen=True, eq=False)
class NodeAttributeVectors:
    node: str
    object_type: str
    relation: str
    values: dict[str, np.ndarray]
    cardinality: int

    def count(self, attribute: str) -> int:
        """Length of the attribute's vector (the IAT count for temporal attributes)."""
        return len(self.values[attribute])


@dataclass(frozen=True, eq=False)
class AttributeRangeStats:
    relation: str
    attribute: str
    kind: str
    minimum: float
    maximum: float
    count: int
    values: np.ndarray

    @classmethod
    def from_values(cls, relation: str, attribute: str, kind: str, values: np.ndarray) -> AttributeRangeStats:
        values = np.asarray(values)
        if len(values) == 0:
            return cls(relation, attribute, kind, float("nan"), float("nan"), 0, values)
        return cls(relation, attribute, kind, float(values.min()), float(values.max()), len(values), values)

    @property
    def empty(self) -> bool:
        return self.count == 0


class Aggregation(Mapping[str, NodeAttributeVectors]):
    """Value vectors of every node of ``object_type`` incident to ``relation``.

    Keys are node ids in graph first-appearance order.  ``flat[attr]`` holds
    all values back to back; node ``i``'s slice is
    ``flat[attr][offsets[attr][i]:offsets[attr][i + 1]]``.  Categorical
    values are integer codes into ``domains[attr]``.
    """

    def __init__(
        self,
        object_type: str,
        relation: str,
        node_ids: tuple[str, ...],
        nodes: np.ndarray,
        edge_counts: np.ndarray,
        kinds: dict[str, str],
        domains: dict[str, tuple[str, ...] | None],
        flat: dict[str, np.ndarray],
        offsets: dict[str, np.ndarray],
    ):
        self.object_type = object_type
        self.relation = relation
        self.node_ids = node_ids
        self.nodes = nodes
        self.edge_counts = edge_counts
        self.kinds = kinds
        self.domains = domains
        self.flat = flat
        self.offsets = offsets
        self._pos = {n: i for i, n in enumerate(node_ids)}

    def __getitem__(self, node: str) -> NodeAttributeVectors:
        i = self._pos[node]
        values = {}
        for attr, kind in self.kinds.items():
            lo, hi = self.offsets[attr][i], self.offsets[attr][i + 1]
            v = self.flat[attr][lo:hi]
            if kind == CATEGORICAL:
                v = np.asarray(self.domains[attr], dtype=object)[v]
            values[attr] = v
        return NodeAttributeVectors(node, self.object_type, self.relation, values, int(self.edge_counts[i]))

    def __iter__(self) -> Iterator[str]:
        return iter(self.node_ids)

    def __len__(self) -> int:
        return len(self.node_ids)

    def counts(self, attribute: str) -> np.ndarray:
        return np.diff(self.offsets[attribute])


def _incidence(graph: AttributedMultigraph, object_type: str, relation: str) -> tuple[np.ndarray, np.ndarray]:
    """(node index, edge position within the relation block) pairs for the node role."""
    rel = graph.schema.relation(relation)
    block = graph.edges[relation]
    if object_type not in (rel.source, rel.target):
        raise ValueError(f"object type {object_type!r} is not an endpoint of relation {relation!r}")
    k = np.arange(len(block), dtype=np.int64)
    if rel.directed:
        # outgoing edges for the source role, incoming for the target role
        if rel.source == object_type:
            return block.source, k
        return block.target, k
    nodes, edges = [], []
    if rel.source == object_type:
        nodes.append(block.source)
        edges.append(k)
    if rel.target == object_type:
        keep = block.target != block.source if rel.source == object_type else np.ones(len(k), dtype=bool)
        nodes.append(block.target[keep])
        edges.append(k[keep])
    return np.concatenate(nodes), np.concatenate(edges)


def aggregate(
    graph: AttributedMultigraph, object_type: str, relation: str
) -> tuple[Aggregation, dict[str, AttributeRangeStats]]:
    """Collect per-node attribute vectors for one (object type, relation).

    Directed relations aggregate outgoing edges for source-typed nodes and
    incoming edges for target-typed nodes; undirected relations aggregate
    every adjacent edge.  Range statistics cover each edge once, except for
    temporal attributes whose statistics are taken over the IATs.

    Raises:
        KeyError: unknown relation.
        ValueError: ``object_type`` is not an endpoint of ``relation``.
    """
    rel = graph.schema.relation(relation)
    block = graph.edges[relation]
    inc_nodes, inc_edges = _incidence(graph, object_type, relation)

    order = np.lexsort((inc_edges, inc_nodes))
    inc_nodes, inc_edges = inc_nodes[order], inc_edges[order]
    nodes, edge_counts = np.unique(inc_nodes, return_counts=True)
    rank = np.repeat(np.arange(len(nodes)), edge_counts)
    edge_offsets = np.concatenate([[0], np.cumsum(edge_counts)]).astype(np.int64)

    kinds = {a.name: a.kind for a in rel.attributes}
    domains = {a.name: a.domain for a in rel.attributes}
    flat: dict[str, np.ndarray] = {}
    offsets: dict[str, np.ndarray] = {}
    stats: dict[str, AttributeRangeStats] = {}
    for a in rel.attributes:
        col = block.columns[a.name]
        vals = col[inc_edges]
        if a.kind == TEMPORAL:
            o = np.lexsort((vals, rank))
            ts = vals[o]
            same = rank[1:] == rank[:-1]
            iat = np.diff(ts)[same]
            counts = np.maximum(edge_counts - 1, 0)
            flat[a.name] = iat
            offsets[a.name] = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
            stats[a.name] = AttributeRangeStats.from_values(relation, a.name, a.kind, iat)
        else:
            flat[a.name] = vals
            offsets[a.name] = edge_offsets
            stats[a.name] = AttributeRangeStats.from_values(relation, a.name, a.kind, col)

    node_ids = tuple(graph.node_ids[i] for i in nodes)
    agg = Aggregation(object_type, relation, node_ids, nodes, edge_counts, kinds, domains, flat, offsets)
    return agg, stats


def relations_of(graph: AttributedMultigraph, object_type: str) -> list[str]:
    """Relations in which ``object_type`` aggregates edges, in schema order."""
    return [r.name for r in graph.schema.relations if object_type in (r.source, r.target)]
