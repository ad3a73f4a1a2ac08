"""Practical regularity partitions of graphs and clustering through the reduced graph."""

__version__ = "0.1.0"

from .bench import BenchmarkRow, GridSearchSpec, grid_search, run_benchmark  # noqa: E402
from .clustering import (  # noqa: E402
    ClusterAssignment,
    assign_exceptional,
    kmeans,
    project_labels,
    regularity_cluster,
    spectral_njw,
)
from .estimators import (  # noqa: E402
    NJWSpectralClustering,
    RegularityClustering,
    RegularityPartitioner,
    SeededKMeans,
)
from .evaluation import AccuracyReport, accuracy, accuracy_bruteforce, hungarian  # noqa: E402
from .graph_core import (  # noqa: E402
    AffinityGraph,
    PreconditionError,
    density,
    deviation_matrix,
    gen_planted_partition,
    gen_random_bipartite,
)
from .ingest import Dataset, binarize, build_affinity, load_csv  # noqa: E402
from .partition import (  # noqa: E402
    EquitablePartition,
    RegularityConfig,
    RunTrace,
    index_of,
    modified_refine,
    run_ppr,
)
from .reduced_graph import ReducedGraph, build_reduced  # noqa: E402
from .regularity_check import (  # noqa: E402
    PairVerdict,
    check_pair_alon,
    check_pair_exhaustive,
    check_pair_fk,
    first_singular_value,
)

__all__ = [
    "AccuracyReport", "AffinityGraph", "BenchmarkRow", "ClusterAssignment", "Dataset",
    "EquitablePartition", "GridSearchSpec", "NJWSpectralClustering", "PairVerdict",
    "PreconditionError", "ReducedGraph", "RegularityClustering", "RegularityConfig",
    "RegularityPartitioner", "RunTrace", "SeededKMeans", "accuracy", "accuracy_bruteforce",
    "assign_exceptional", "binarize", "build_affinity", "build_reduced", "check_pair_alon",
    "check_pair_exhaustive", "check_pair_fk", "density", "deviation_matrix", "first_singular_value",
    "gen_planted_partition", "gen_random_bipartite", "grid_search", "hungarian", "index_of",
    "kmeans", "load_csv", "modified_refine", "project_labels", "regularity_cluster",
    "run_benchmark", "run_ppr", "spectral_njw",
]
