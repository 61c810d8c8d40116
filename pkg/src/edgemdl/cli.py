"""Command-line entry point: ``edgemdl {score,synth,eval,bench}``.

Exit codes: 0 success, 1 bad input (missing file, invalid schema/edges/config),
2 internal invariant violation.  Logs go to stderr; tables to stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import re
import sys
from pathlib import Path

from .cluster import XMeansConfig
from .graph import GraphFormatError, SchemaError, dump_edges, load_graph, load_schema
from .model import ClusterModel, ModelFormatError
from .pipeline import PipelineConfig, run_pipeline
from .report import emit_cluster_profiles, emit_ranking, parse_ranking
from .synth import (
    RATING_SCHEMA,
    SynthConfig,
    SynthConfigError,
    default_config,
    dump_benchmark,
    dump_labels,
    generate,
    loglog_slope,
    parse_labels,
    precision_at_k,
    scaled_config,
    scaling_benchmark,
)

log = logging.getLogger("edgemdl")


class InvariantError(RuntimeError):
    pass


INPUT_ERRORS = (SchemaError, GraphFormatError, ModelFormatError, SynthConfigError, OSError, KeyError, ValueError)


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError("must be a finite number >= 0")
    return v


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name)


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    log.info("wrote %s", path)


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bins", type=_positive_int, default=20, help="bins for numerical/temporal attributes (default: 20)")
    p.add_argument("--epsilon", type=_nonneg_float, default=1e-9, help="smoothing added to model distributions (default: 1e-9)")
    p.add_argument("--kmin", type=_positive_int, default=1, help="X-means minimum cluster count (default: 1)")
    p.add_argument("--kmax", type=_positive_int, default=25, help="X-means maximum cluster count (default: 25)")
    p.add_argument("--max-iter", type=_positive_int, default=100, help="Lloyd iterations per k-means run (default: 100)")
    p.add_argument("--tol", type=float, default=1e-6, help="centroid-movement convergence tolerance (default: 1e-6)")
    p.add_argument("--seed", type=int, default=0, help="random seed for k-means++ seeding (default: 0)")


def _pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        bins=args.bins,
        epsilon=args.epsilon,
        xmeans=XMeansConfig(args.kmin, args.kmax, args.max_iter, args.tol, args.seed),
    )


def _check_rankings(result) -> None:
    for b, ranking in result.rankings.items():
        prev = math.inf
        for e in ranking.entries:
            if not (math.isfinite(e.score) and e.score >= 0 and e.score <= prev):
                raise InvariantError(f"ranking for {b!r} violates ordering/non-negativity at rank {e.rank}")
            if any(c < 0 for c in e.breakdown.contributions.values()):
                raise InvariantError(f"negative contribution for node {e.node!r}")
            prev = e.score


def cmd_score(args: argparse.Namespace) -> int:
    schema = load_schema(args.schema)
    graph = load_graph(args.edges, schema, args.nodes)
    log.info("loaded %d nodes, %d edges", graph.n_nodes, graph.n_edges)
    model = ClusterModel.from_json(_read_text(args.model_in)) if args.model_in else None
    result = run_pipeline(graph, _pipeline_config(args), model)
    _check_rankings(result)
    out = Path(args.out_dir)
    for b, ranking in result.rankings.items():
        _write(out / f"ranking_{_safe_name(b)}.{args.format}", emit_ranking(ranking, args.format, args.top_k))
    _write(Path(args.model_out) if args.model_out else out / "cluster_model.json", result.model.to_json())
    _write(out / "cluster_profiles.csv", emit_cluster_profiles(result.model))
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    if args.config:
        cfg = SynthConfig.from_json(_read_text(args.config))
    else:
        cfg = default_config(args.honest, args.fraud, args.products)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.n_users is not None:
        cfg.n_users = args.n_users
    labeled = generate(cfg)
    out = Path(args.out_dir)
    _write(out / "edges.csv", dump_edges(labeled.graph))
    _write(out / "labels.csv", dump_labels(labeled.labels))
    _write(out / "schema.json", json.dumps(RATING_SCHEMA, indent=1) + "\n")
    _write(out / "synth_config.json", cfg.to_json())
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    fmt = "json" if args.ranking.endswith(".json") else "csv"
    ranking = parse_ranking(_read_text(args.ranking), fmt)
    labels = parse_labels(_read_text(args.labels))
    lines = ["k,precision"]
    for k in args.k:
        lines.append(f"{k},{precision_at_k(ranking, labels, k):.3f}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        _write(Path(args.out), text)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    graph = generate(scaled_config(args.edges_target, args.seed)).graph
    log.info("benchmark graph: %d nodes, %d edges", graph.n_nodes, graph.n_edges)
    rows = scaling_benchmark(graph, args.fractions, args.seed, _pipeline_config(args))
    text = dump_benchmark(rows)
    sys.stdout.write(text)
    if args.out:
        _write(Path(args.out), text)
    if len(rows) >= 2:
        log.info("log-log slope of time vs edges: %.3f", loglog_slope(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgemdl", description="Rank nodes of edge-attributed graphs by encoding-cost abnormality.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score and rank every node of every object type")
    p.add_argument("--schema", required=True, help="schema JSON")
    p.add_argument("--edges", required=True, help="edge CSV")
    p.add_argument("--nodes", help="optional node,type CSV declaring isolated nodes")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.add_argument("--top-k", type=_positive_int, default=None, help="keep only the top k rows per ranking (default: all)")
    p.add_argument("--model-in", help="reuse an exported cluster model instead of clustering")
    p.add_argument("--model-out", help="cluster model path (default: OUT_DIR/cluster_model.json)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="ranking file format (default: csv)")
    _add_model_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("synth", help="generate a labeled synthetic rating graph")
    p.add_argument("--config", help="generator config JSON (default: built-in reference scenario)")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--n-users", type=int, default=None, help="override the config user count")
    p.add_argument("--honest", type=int, default=10_000, help="honest users in the built-in scenario (default: 10000)")
    p.add_argument("--fraud", type=int, default=100, help="fraudsters in the built-in scenario (default: 100)")
    p.add_argument("--products", type=int, default=1_000, help="products in the built-in scenario (default: 1000)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="precision@k of a ranking against labels")
    p.add_argument("--ranking", required=True, help="ranking file (.csv or .json)")
    p.add_argument("--labels", required=True, help="node,label CSV")
    p.add_argument("--k", type=_int_list, default=[1, 10, 50, 100], help="comma-separated k values (default: 1,10,50,100)")
    p.add_argument("--out", help="also write the table to this path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="pipeline wall time on nested edge subsamples of a synthetic graph")
    p.add_argument("--edges-target", type=_positive_int, default=1_000_000, help="approximate edges of the full graph (default: 1000000)")
    p.add_argument("--fractions", type=_float_list, default=[0.1, 0.2, 0.4, 0.7, 1.0], help="ascending edge fractions (default: 0.1,0.2,0.4,0.7,1.0)")
    p.add_argument("--out", help="benchmark CSV path (edges,seconds)")
    _add_model_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        return args.func(args)
    except InvariantError as exc:
        log.error("internal invariant violated: %s", exc)
        return 2
    except INPUT_ERRORS as exc:
        log.error("%s", exc)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
