"""Rank nodes of heterogeneous edge-attributed multigraphs by how many extra
bits their adjacent-edge attribute behavior costs under clustered models."""

from .aggregate import AttributeRangeStats, NodeAttributeVectors, aggregate, compute_iat
from .cluster import ClusterSet, XMeansConfig, assign_proportions, bic_score, kmeans, xmeans
from .discretize import BinSpec, DiscreteDistribution, bin_and_normalize, choose_binning
from .graph import (
    AttributedMultigraph,
    AttributeSchema,
    GraphFormatError,
    GraphSchema,
    SchemaError,
    load_graph,
    load_schema,
    parse_schema,
)
from .model import ClusterModel
from .pipeline import PipelineConfig, run_pipeline
from .report import AbnormalityRanking, emit_cluster_profiles, emit_ranking, rank
from .score import (
    ScoreBreakdown,
    description_length,
    entropy,
    kl_divergence,
    score_base,
    score_multifaceted,
    score_unified,
)

__version__ = "0.1.0"
