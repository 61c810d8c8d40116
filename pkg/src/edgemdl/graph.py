"""Heterogeneous edge-attributed multigraphs: schema, in-memory model and CSV ingestion.

A graph is described by a JSON schema listing object types and relations.
Every relation names its source/target object types, whether it is directed,
and the attributes carried by each of its edges.  Edges come from a CSV file
whose rows may mix relations::

    relation,source,target,stars,ts
    rates,u1,p1,5,1425168000
    rates,u1,p2,4,1425171600

Node identifiers are opaque strings.  Each node gets a dense integer index in
first-appearance order, and its object type is inferred from the endpoint
role it plays.  Edge attribute values are stored column-wise per relation:
categorical values as integer codes into the declared domain, numerical and
temporal values as float64.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path
from typing import Any

import numpy as np

CATEGORICAL = "categorical"
NUMERICAL = "numerical"
TEMPORAL = "temporal"
KINDS = (CATEGORICAL, NUMERICAL, TEMPORAL)

FIXED_COLUMNS = ("relation", "source", "target")


class SchemaError(ValueError):
    """Invalid schema document; ``path`` locates the offending element."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class GraphFormatError(ValueError):
    """Invalid edge or node file; ``line`` is the 1-based physical line."""

    def __init__(self, line: int | None, message: str, source: str | None = None):
        where = source or "input"
        loc = f"{where}:{line}" if line is not None else where
        super().__init__(f"{loc}: {message}")
        self.line = line


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str
    domain: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SchemaError("", f"unknown attribute kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            if not self.domain:
                raise SchemaError("", f"categorical attribute {self.name!r} has an empty domain")
            if len(set(self.domain)) != len(self.domain):
                raise SchemaError("", f"categorical attribute {self.name!r} has duplicate domain values")
        elif self.domain is not None:
            raise SchemaError("", f"{self.kind} attribute {self.name!r} cannot declare a domain")


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered attribute set carried by every edge of one relation."""

    attributes: tuple[Attribute, ...]

    def __post_init__(self) -> None:
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise SchemaError("", f"duplicate attribute names in {names}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def __getitem__(self, name: str) -> Attribute:
        for a in self.attributes:
            if a.name == name:
                return a
        raise KeyError(name)

    def __iter__(self) -> Iterator[Attribute]:
        return iter(self.attributes)

    def __len__(self) -> int:
        return len(self.attributes)


@dataclass(frozen=True)
class Relation:
    name: str
    source: str
    target: str
    directed: bool
    attributes: AttributeSchema


@dataclass(frozen=True)
class GraphSchema:
    object_types: tuple[str, ...]
    relations: tuple[Relation, ...]

    def __post_init__(self) -> None:
        if not self.relations:
            raise SchemaError("relations", "relation list empty")
        declared = set(self.object_types)
        seen: set[str] = set()
        for r in self.relations:
            if r.name in seen:
                raise SchemaError("relations", f"duplicate relation name {r.name!r}")
            seen.add(r.name)
            for end in (r.source, r.target):
                if end not in declared:
                    raise SchemaError("relations", f"relation {r.name!r} references undeclared object type {end!r}")
            if len(r.attributes) == 0:
                raise SchemaError("relations", f"relation {r.name!r} has no attributes")

    def relation(self, name: str) -> Relation:
        for r in self.relations:
            if r.name == name:
                return r
        raise KeyError(name)

    def attribute_columns(self) -> list[str]:
        """Union of attribute names over all relations, in declaration order."""
        cols: list[str] = []
        for r in self.relations:
            for a in r.attributes:
                if a.name not in cols:
                    cols.append(a.name)
        return cols

    def to_dict(self) -> dict[str, Any]:
        return {
            "object_types": list(self.object_types),
            "relations": [
                {
                    "name": r.name,
                    "source": r.source,
                    "target": r.target,
                    "directed": r.directed,
                    "attributes": [
                        {"name": a.name, "kind": a.kind, **({"domain": list(a.domain)} if a.domain else {})}
                        for a in r.attributes
                    ],
                }
                for r in self.relations
            ],
        }


def _domain_value(v: Any, path: str) -> str:
    if isinstance(v, bool) or not isinstance(v, (str, int, float)):
        raise SchemaError(path, f"domain values must be strings or numbers, got {v!r}")
    return v if isinstance(v, str) else str(v)


def _require(obj: dict, key: str, typ: type | tuple[type, ...], path: str) -> Any:
    if key not in obj:
        raise SchemaError(path, f"missing key {key!r}")
    value = obj[key]
    if not isinstance(value, typ):
        raise SchemaError(f"{path}.{key}" if path else key, f"expected {getattr(typ, '__name__', typ)}, got {type(value).__name__}")
    return value


def parse_schema(config_text: str) -> GraphSchema:
    """Parse and validate a JSON schema document.

    Raises:
        SchemaError: with a dotted path into the document for malformed JSON,
            unknown attribute kinds, dangling object-type references, empty
            categorical domains and similar defects.
    """
    try:
        doc = json.loads(config_text)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("", "top level must be an object")

    types = _require(doc, "object_types", list, "")
    object_types: list[str] = []
    for i, t in enumerate(types):
        if not isinstance(t, str) or not t:
            raise SchemaError(f"object_types[{i}]", "object type names must be non-empty strings")
        if t in object_types:
            raise SchemaError(f"object_types[{i}]", f"duplicate object type {t!r}")
        object_types.append(t)

    rels = _require(doc, "relations", list, "")
    if not rels:
        raise SchemaError("relations", "relation list empty")

    relations: list[Relation] = []
    names: set[str] = set()
    for i, rel in enumerate(rels):
        rpath = f"relations[{i}]"
        if not isinstance(rel, dict):
            raise SchemaError(rpath, "relation must be an object")
        name = _require(rel, "name", str, rpath)
        if name in names:
            raise SchemaError(f"{rpath}.name", f"duplicate relation name {name!r}")
        names.add(name)
        ends = []
        for key in ("source", "target"):
            end = _require(rel, key, str, rpath)
            if end not in object_types:
                raise SchemaError(f"{rpath}.{key}", f"undeclared object type {end!r}")
            ends.append(end)
        directed = rel.get("directed", False)
        if not isinstance(directed, bool):
            raise SchemaError(f"{rpath}.directed", "expected a boolean")

        attrs_doc = _require(rel, "attributes", list, rpath)
        if not attrs_doc:
            raise SchemaError(f"{rpath}.attributes", "relation must carry at least one attribute")
        attrs: list[Attribute] = []
        for j, a in enumerate(attrs_doc):
            apath = f"{rpath}.attributes[{j}]"
            if not isinstance(a, dict):
                raise SchemaError(apath, "attribute must be an object")
            aname = _require(a, "name", str, apath)
            if aname in FIXED_COLUMNS or not aname:
                raise SchemaError(f"{apath}.name", f"reserved or empty attribute name {aname!r}")
            if any(x.name == aname for x in attrs):
                raise SchemaError(f"{apath}.name", f"duplicate attribute name {aname!r}")
            kind = _require(a, "kind", str, apath)
            if kind not in KINDS:
                raise SchemaError(f"{apath}.kind", f"unknown attribute kind {kind!r}")
            domain = None
            if kind == CATEGORICAL:
                raw = _require(a, "domain", list, apath)
                if not raw:
                    raise SchemaError(f"{apath}.domain", "empty categorical domain")
                domain = tuple(_domain_value(v, f"{apath}.domain[{k}]") for k, v in enumerate(raw))
                if len(set(domain)) != len(domain):
                    raise SchemaError(f"{apath}.domain", "duplicate domain values")
            elif "domain" in a:
                raise SchemaError(f"{apath}.domain", f"{kind} attributes take no domain")
            attrs.append(Attribute(aname, kind, domain))
        relations.append(Relation(name, ends[0], ends[1], directed, AttributeSchema(tuple(attrs))))

    return GraphSchema(tuple(object_types), tuple(relations))


def load_schema(path: str | PathLike) -> GraphSchema:
    return parse_schema(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True, eq=False)
class RelationEdges:
    """Column store for the edges of one relation.

    ``rows`` holds the global edge ids (file data-row order), ``source`` and
    ``target`` dense node indices, ``columns`` one array per attribute.
    """

    rows: np.ndarray
    source: np.ndarray
    target: np.ndarray
    columns: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True, eq=False)
class AttributedMultigraph:
    schema: GraphSchema
    node_ids: tuple[str, ...]
    node_types: tuple[str, ...]
    edges: dict[str, RelationEdges]
    node_index: dict[str, int] = field(repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        if not self.node_index:
            object.__setattr__(self, "node_index", {n: i for i, n in enumerate(self.node_ids)})

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return sum(len(e) for e in self.edges.values())

    def nodes_of_type(self, object_type: str) -> np.ndarray:
        return np.array([i for i, t in enumerate(self.node_types) if t == object_type], dtype=np.int64)

    def iter_edges(self) -> Iterator[tuple[int, str, str, str, dict[str, Any]]]:
        """Yield ``(edge_id, relation, source_id, target_id, values)`` in edge-id order.

        Categorical values are yielded as domain strings, the rest as floats.
        """
        order = []
        for rname, block in self.edges.items():
            for k, row in enumerate(block.rows):
                order.append((int(row), rname, k))
        order.sort()
        for row, rname, k in order:
            block = self.edges[rname]
            rel = self.schema.relation(rname)
            values: dict[str, Any] = {}
            for a in rel.attributes:
                v = block.columns[a.name][k]
                values[a.name] = a.domain[int(v)] if a.kind == CATEGORICAL else float(v)
            yield row, rname, self.node_ids[block.source[k]], self.node_ids[block.target[k]], values

    def equals(self, other: object) -> bool:
        if not isinstance(other, AttributedMultigraph):
            return False
        if self.schema != other.schema or self.node_ids != other.node_ids or self.node_types != other.node_types:
            return False
        if self.edges.keys() != other.edges.keys():
            return False
        for name, a in self.edges.items():
            b = other.edges[name]
            if not (
                np.array_equal(a.rows, b.rows)
                and np.array_equal(a.source, b.source)
                and np.array_equal(a.target, b.target)
                and a.columns.keys() == b.columns.keys()
                and all(np.array_equal(a.columns[c], b.columns[c]) for c in a.columns)
            ):
                return False
        return True

    __eq__ = equals  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]

    def edge_subgraph(self, edge_ids: Sequence[int] | np.ndarray) -> AttributedMultigraph:
        """Induced graph on a subset of edges; ids are renumbered densely in original order.

        Only endpoints of retained edges survive, re-indexed in first-appearance order.
        """
        keep = np.zeros(self.n_edges, dtype=bool)
        keep[np.asarray(edge_ids, dtype=np.int64)] = True
        new_row = np.cumsum(keep) - 1

        # first appearance over the retained rows, source before target
        total = self.n_edges
        src_all = np.full(total, -1, dtype=np.int64)
        tgt_all = np.full(total, -1, dtype=np.int64)
        for block in self.edges.values():
            src_all[block.rows] = block.source
            tgt_all[block.rows] = block.target
        seq = np.stack([src_all[keep], tgt_all[keep]], axis=1).ravel()
        _, first = np.unique(seq, return_index=True)
        old_nodes = seq[np.sort(first)]
        remap = np.full(self.n_nodes, -1, dtype=np.int64)
        remap[old_nodes] = np.arange(len(old_nodes))

        edges: dict[str, RelationEdges] = {}
        for name, block in self.edges.items():
            m = keep[block.rows]
            edges[name] = RelationEdges(
                rows=new_row[block.rows[m]],
                source=remap[block.source[m]],
                target=remap[block.target[m]],
                columns={c: v[m] for c, v in block.columns.items()},
            )
        return AttributedMultigraph(
            schema=self.schema,
            node_ids=tuple(self.node_ids[i] for i in old_nodes),
            node_types=tuple(self.node_types[i] for i in old_nodes),
            edges=edges,
        )


class _NodeTable:
    def __init__(self, source: str | None):
        self.ids: list[str] = []
        self.types: list[str] = []
        self.index: dict[str, int] = {}
        self.source = source

    def add(self, node: str, object_type: str, line: int | None) -> int:
        i = self.index.get(node)
        if i is None:
            i = len(self.ids)
            self.index[node] = i
            self.ids.append(node)
            self.types.append(object_type)
        elif self.types[i] != object_type:
            raise GraphFormatError(
                line,
                f"object-type conflict for node {node!r}: {self.types[i]!r} vs {object_type!r}",
                self.source,
            )
        return i


def _parse_float(text: str, attr: Attribute, line: int, source: str | None) -> float:
    try:
        v = float(text)
    except ValueError:
        raise GraphFormatError(line, f"non-numeric value {text!r} for {attr.kind} attribute {attr.name!r}", source) from None
    if not math.isfinite(v):
        raise GraphFormatError(line, f"non-finite value {text!r} for attribute {attr.name!r}", source)
    if attr.kind == TEMPORAL and v < 0:
        raise GraphFormatError(line, f"negative timestamp {text!r} for attribute {attr.name!r}", source)
    return v


def read_graph(
    edge_text: Iterator[str] | io.TextIOBase,
    schema: GraphSchema,
    nodes_text: Iterator[str] | io.TextIOBase | None = None,
    *,
    source_name: str | None = None,
    nodes_name: str | None = None,
) -> AttributedMultigraph:
    """Build a graph from already-open edge (and optional node) CSV streams."""
    table = _NodeTable(source_name)
    if nodes_text is not None:
        reader = csv.reader(nodes_text)
        header = next(reader, None)
        if header is not None and [h.strip() for h in header] != ["node", "type"]:
            raise GraphFormatError(1, "nodes file header must be 'node,type'", nodes_name)
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise GraphFormatError(reader.line_num, f"expected 2 columns, got {len(row)}", nodes_name)
            if row[1] not in schema.object_types:
                raise GraphFormatError(reader.line_num, f"undeclared object type {row[1]!r}", nodes_name)
            table.source = nodes_name
            table.add(row[0], row[1], reader.line_num)
        table.source = source_name

    relations = {r.name: r for r in schema.relations}
    reader = csv.reader(edge_text)
    header = next(reader, None)
    buffers: dict[str, dict[str, list]] = {
        r.name: {"rows": [], "source": [], "target": [], **{a.name: [] for a in r.attributes}} for r in schema.relations
    }
    if header is not None:
        header = [h.strip() for h in header]
        if tuple(header[:3]) != FIXED_COLUMNS:
            raise GraphFormatError(1, "header must start with 'relation,source,target'", source_name)
        attr_cols = header[3:]
        if len(set(attr_cols)) != len(attr_cols):
            raise GraphFormatError(1, "duplicate attribute columns in header", source_name)
        col_of = {c: 3 + k for k, c in enumerate(attr_cols)}
        for r in schema.relations:
            missing = [a.name for a in r.attributes if a.name not in col_of]
            if missing:
                raise GraphFormatError(1, f"header lacks attribute columns {missing} of relation {r.name!r}", source_name)
        # per relation: (attribute, column, code map) and columns that must stay empty
        plans = {}
        for r in schema.relations:
            used = [(a, col_of[a.name], {v: k for k, v in enumerate(a.domain)} if a.domain else None) for a in r.attributes]
            unused = [col_of[c] for c in attr_cols if c not in r.attributes.names]
            plans[r.name] = (used, unused)

        n_cols = len(header)
        row_id = 0
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != n_cols:
                raise GraphFormatError(line, f"expected {n_cols} columns, got {len(row)}", source_name)
            rname = row[0]
            rel = relations.get(rname)
            if rel is None:
                raise GraphFormatError(line, f"unknown relation {rname!r}", source_name)
            if not row[1] or not row[2]:
                raise GraphFormatError(line, "empty node id", source_name)
            used, unused = plans[rname]
            for c in unused:
                if row[c] != "":
                    raise GraphFormatError(line, f"column {header[c]!r} is not an attribute of relation {rname!r}", source_name)
            buf = buffers[rname]
            for attr, c, codes in used:
                text = row[c]
                if text == "":
                    raise GraphFormatError(line, f"missing value for attribute {attr.name!r}", source_name)
                if codes is not None:
                    code = codes.get(text)
                    if code is None:
                        raise GraphFormatError(
                            line, f"value {text!r} outside domain of categorical attribute {attr.name!r}", source_name
                        )
                    buf[attr.name].append(code)
                else:
                    buf[attr.name].append(_parse_float(text, attr, line, source_name))
            s = table.add(row[1], rel.source, line)
            t = table.add(row[2], rel.target, line)
            buf["rows"].append(row_id)
            buf["source"].append(s)
            buf["target"].append(t)
            row_id += 1

    edges: dict[str, RelationEdges] = {}
    for r in schema.relations:
        buf = buffers[r.name]
        edges[r.name] = RelationEdges(
            rows=np.asarray(buf["rows"], dtype=np.int64),
            source=np.asarray(buf["source"], dtype=np.int64),
            target=np.asarray(buf["target"], dtype=np.int64),
            columns={
                a.name: np.asarray(buf[a.name], dtype=np.int64 if a.kind == CATEGORICAL else np.float64)
                for a in r.attributes
            },
        )
    return AttributedMultigraph(schema, tuple(table.ids), tuple(table.types), edges)


def load_graph(
    edge_file: str | PathLike, schema: GraphSchema, nodes_file: str | PathLike | None = None
) -> AttributedMultigraph:
    """Load an edge CSV (and optional ``node,type`` CSV of isolated nodes).

    Raises:
        GraphFormatError: with the offending line number.
    """
    with open(edge_file, newline="", encoding="utf-8") as ef:
        if nodes_file is None:
            return read_graph(ef, schema, source_name=str(edge_file))
        with open(nodes_file, newline="", encoding="utf-8") as nf:
            return read_graph(ef, schema, nf, source_name=str(edge_file), nodes_name=str(nodes_file))


def format_value(v: Any) -> str:
    return v if isinstance(v, str) else repr(float(v))


def dump_edges(graph: AttributedMultigraph) -> str:
    """Serialize edges to the CSV edge-file format, preserving edge order."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    cols = graph.schema.attribute_columns()
    writer.writerow([*FIXED_COLUMNS, *cols])
    for _, rname, s, t, values in graph.iter_edges():
        writer.writerow([rname, s, t, *(format_value(values[c]) if c in values else "" for c in cols)])
    return out.getvalue()


def dump_nodes(graph: AttributedMultigraph) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["node", "type"])
    for n, t in zip(graph.node_ids, graph.node_types):
        writer.writerow([n, t])
    return out.getvalue()
