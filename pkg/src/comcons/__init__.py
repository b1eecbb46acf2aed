"""Consensus community detection with node-level membership consistency."""

__version__ = "0.1.0"

from comcons.graph import (  # noqa: E402
    WeightedGraph,
    aggregate_by_attribute,
    largest_connected_component,
    load_edge_list,
    stats,
)
from comcons.detect import Algorithm, DetectionConfig, Partition, detect, modularity  # noqa: E402
from comcons.ensemble import (  # noqa: E402
    ConsensusMode,
    consensus_cluster,
    consensus_matrix,
    run_ensemble,
    tau_sweep,
    threshold_filter,
)
from comcons.consistency import (  # noqa: E402
    classify_cores,
    community_descriptives,
    consistency_degree_correlation,
    consistency_report,
    membership_consistency,
    pair_consistency,
)
from comcons.compare import consensus_nmi, ensemble_nmi, nmi  # noqa: E402

__all__ = [
    "WeightedGraph",
    "aggregate_by_attribute",
    "largest_connected_component",
    "load_edge_list",
    "stats",
    "Algorithm",
    "DetectionConfig",
    "Partition",
    "detect",
    "modularity",
    "ConsensusMode",
    "consensus_cluster",
    "consensus_matrix",
    "run_ensemble",
    "tau_sweep",
    "threshold_filter",
    "classify_cores",
    "community_descriptives",
    "consistency_degree_correlation",
    "consistency_report",
    "membership_consistency",
    "pair_consistency",
    "consensus_nmi",
    "ensemble_nmi",
    "nmi",
]
