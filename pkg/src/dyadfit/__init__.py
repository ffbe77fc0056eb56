"""Directed network models with nodal homophily and in/out effects.

Public API: feature tables and dyad designs, four-state dyad
probabilities and likelihood, maximum likelihood and adaptive-lasso
fitting with NBIC selection, network sampling, simulation studies, and
a brute-force enumeration oracle for tiny graphs.
"""

from .errors import (
    CollinearityError,
    ConvergenceError,
    DataError,
    DegenerateDataError,
    DyadfitError,
    NumericError,
    StudyError,
)
from .estimation import (
    FitOptions,
    InferenceResult,
    MleResult,
    PathResult,
    RmleResult,
    adaptive_weights,
    fit_mle,
    fit_path,
    fit_rmle,
    lambda_grid,
    nbic,
    soft_threshold,
    standard_errors,
)
from .features import (
    MAGNITUDE_KINDS,
    SIMILARITY_KINDS,
    FeatureTable,
    GroupSpec,
    compute_similarity,
)
from .model import (
    DesignRow,
    DyadDesign,
    SufficientStats,
    adjacency_from_dyads,
    build_dyad_design,
    category_log_weight,
    dyad_probabilities,
    dyad_probability_matrix,
    dyads_from_adjacency,
    log_likelihood,
    observed_information,
    score,
    sufficient_statistics,
)
from .oracle import (
    GraphEnumeration,
    brute_force_dyad_marginal,
    brute_force_graph_probability,
    enumerate_distribution,
    enumerate_graphs,
    graph_statistics,
)
from .params import ParamVector, block_labels, param_length
from .simulation import (
    FIT_KINDS,
    EstimationMetrics,
    GeneratorSpec,
    GroupGenerator,
    MetricsReport,
    ReplicationSet,
    SelectionMetrics,
    default_study_spec,
    estimation_metrics,
    generate_features,
    replication_seed,
    run_replications,
    run_study,
    sample_network,
    selection_metrics,
)

__version__ = "0.1.0"
