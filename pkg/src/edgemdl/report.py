"""Rankings and plot-ready exports.

CSV rankings print scores with 6 decimals.  Contribution columns are rounded
by largest remainder so they add up exactly to the printed score.  JSON
rankings keep full float precision and round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

from .score import ScoreBreakdown

DECIMALS = 6
_UNIT = 10**DECIMALS


@dataclass(frozen=True)
class RankedNode:
    rank: int
    node: str
    score: float
    breakdown: ScoreBreakdown


@dataclass(frozen=True)
class AbnormalityRanking:
    object_type: str
    entries: tuple[RankedNode, ...]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def nodes(self) -> list[str]:
        return [e.node for e in self.entries]

    def columns(self) -> list[str]:
        cols: list[str] = []
        for e in self.entries:
            for k in e.breakdown.contributions:
                if k not in cols:
                    cols.append(k)
        return cols


def rank(scores: Iterable[ScoreBreakdown], object_type: str) -> AbnormalityRanking:
    """Sort descending by total score; equal scores fall back to node id ascending."""
    ordered = sorted(scores, key=lambda s: (-s.total, s.node))
    return AbnormalityRanking(
        object_type, tuple(RankedNode(i + 1, s.node, s.total, s) for i, s in enumerate(ordered))
    )


def _fmt_units(u: int) -> str:
    sign = "-" if u < 0 else ""
    u = abs(u)
    return f"{sign}{u // _UNIT}.{u % _UNIT:0{DECIMALS}d}"


def _apportion(total: float, parts: list[float]) -> tuple[int, list[int]]:
    """Round ``total`` and ``parts`` to fixed-point units so the parts sum to the total."""
    total_u = round(total * _UNIT)
    scaled = [p * _UNIT for p in parts]
    floors = [math.floor(x) for x in scaled]
    rem = total_u - sum(floors)
    if not 0 <= rem <= len(parts):
        # parts do not add up to total (hand-built breakdown); round independently
        return total_u, [round(x) for x in scaled]
    order = sorted(range(len(parts)), key=lambda i: (-(scaled[i] - floors[i]), i))
    for i in order[:rem]:
        floors[i] += 1
    return total_u, floors


def emit_ranking(ranking: AbnormalityRanking, fmt: str = "csv", top_k: int | None = None) -> str:
    """Serialize a ranking as CSV (``rank,node,score,<relation.attribute>...``) or JSON."""
    entries = ranking.entries if top_k is None else ranking.entries[:top_k]
    cols = ranking.columns()
    if fmt == "json":
        doc = {
            "object_type": ranking.object_type,
            "columns": cols,
            "ranking": [
                {
                    "rank": e.rank,
                    "node": e.node,
                    "score": e.score,
                    "contributions": {c: e.breakdown.contributions.get(c, 0.0) for c in cols},
                }
                for e in entries
            ],
        }
        return json.dumps(doc, indent=1) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown ranking format {fmt!r}")
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["rank", "node", "score", *cols])
    for e in entries:
        total_u, parts_u = _apportion(e.score, [e.breakdown.contributions.get(c, 0.0) for c in cols])
        w.writerow([e.rank, e.node, _fmt_units(total_u), *map(_fmt_units, parts_u)])
    return out.getvalue()


def parse_ranking(text: str, fmt: str = "csv", object_type: str | None = None) -> AbnormalityRanking:
    """Inverse of :func:`emit_ranking` (CSV scores carry only 6 decimals)."""
    entries = []
    if fmt == "json":
        doc = json.loads(text)
        object_type = object_type or doc["object_type"]
        for row in doc["ranking"]:
            bd = ScoreBreakdown(row["node"], float(row["score"]), dict(row["contributions"]))
            entries.append(RankedNode(int(row["rank"]), row["node"], bd.total, bd))
    elif fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if header[:3] != ["rank", "node", "score"]:
            raise ValueError("ranking CSV must start with rank,node,score")
        cols = header[3:]
        for row in reader:
            if not row:
                continue
            bd = ScoreBreakdown(row[1], float(row[2]), {c: float(v) for c, v in zip(cols, row[3:])})
            entries.append(RankedNode(int(row[0]), row[1], bd.total, bd))
    else:
        raise ValueError(f"unknown ranking format {fmt!r}")
    return AbnormalityRanking(object_type or "", tuple(entries))


def emit_cluster_profiles(models: Mapping) -> str:
    """One CSV row per (model, cluster, bin) with the cluster proportion and bin mass."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["object_type", "relation", "attribute", "cluster", "rho", "bin", "bin_label", "mass"])
    for (b, r, a), m in models.items():
        labels = m.bins.labels()
        for g, (center, rho) in enumerate(zip(m.centers, m.proportions)):
            for i, mass in enumerate(center):
                w.writerow([b, r, a, g, repr(float(rho)), i, labels[i], repr(float(mass))])
    return out.getvalue()
