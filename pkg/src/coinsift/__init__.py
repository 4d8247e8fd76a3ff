"""Collective anomaly detection for Bitcoin-style transaction data.

Aggregates wallet addresses into users (common-input-ownership
contraction), extracts ten per-user flow/graph features, min-max scales
them, isolates the trimmed outlier group of a trimmed k-means clustering,
and matches flagged users against a catalog of known thefts.
"""

__version__ = "0.1.0"

from .cluster import (
    AssignmentTable,
    ClusterModel,
    TrimmedKMeansConfig,
    brute_force_trimmed_kmeans,
    lloyd_kmeans,
    objective,
    trimmed_kmeans,
)
from .contraction import AddressUserMap, build_contraction, load_contraction
from .errors import CoinsiftError, ConfigError, ParseError, ValidationError
from .features import (
    FEATURE_NAMES,
    FeatureMatrix,
    UserGraph,
    assemble_feature_matrix,
    build_user_graph,
)
from .ingest import (
    DatasetStats,
    TheftCatalog,
    TransactionFlowRecord,
    load_flow_records,
    load_theft_catalog,
    wipe_addresses,
)
from .normalize import MinMaxScaler, fit, transform
from .report import AnomalyReport, build_report, match_catalog, summarize
from .synth import GroundTruth, SynthConfig, generate

__all__ = [
    "AddressUserMap",
    "AnomalyReport",
    "AssignmentTable",
    "ClusterModel",
    "CoinsiftError",
    "ConfigError",
    "DatasetStats",
    "FEATURE_NAMES",
    "FeatureMatrix",
    "GroundTruth",
    "MinMaxScaler",
    "ParseError",
    "SynthConfig",
    "TheftCatalog",
    "TransactionFlowRecord",
    "TrimmedKMeansConfig",
    "UserGraph",
    "ValidationError",
    "assemble_feature_matrix",
    "brute_force_trimmed_kmeans",
    "build_contraction",
    "build_report",
    "build_user_graph",
    "fit",
    "generate",
    "load_contraction",
    "load_flow_records",
    "load_theft_catalog",
    "lloyd_kmeans",
    "match_catalog",
    "objective",
    "summarize",
    "transform",
    "trimmed_kmeans",
    "wipe_addresses",
]
