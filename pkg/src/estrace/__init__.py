"""Strategy-parameter traces of modular CMA-ES variants as time series.

The package runs modular CMA-ES variants on the BBOB suite, records
eight strategy-parameter channels per generation, turns the traces into
time-series feature vectors, and learns from those: which variant was
running, which problem it was solving, and how many precision targets
the run will hit.
"""

from ._base import BaseEstimator, NotFittedError
from .cluster import (
    DistanceMatrix,
    Dendrogram,
    bakers_gamma,
    distance_matrix,
    mean_vectors,
    parse_merge_csv,
    parse_newick,
    render_merge_csv,
    render_newick,
    ward_linkage,
)
from .cmaes import CMAES, VARIANTS, ModularConfig, variant_config
from .config import ExperimentConfig, load_config
from .ensemble import ExtraTreesClassifier, ExtraTreesRegressor
from .features import (
    FUNCTION_NAMES,
    FeatureMatrix,
    FeatureSpec,
    compute_feature,
    extract_row,
    raw_catalog,
    selected_catalog,
)
from .metrics import accuracy, f1_macro, r2_score
from .model_selection import CVResult, kfold_cv, logo_cv
from .problems import make_problem
from .sampling import make_sampler
from .selection import BorutaSelector, boruta_select, consensus_select
from .trace import (
    CHANNELS,
    Trace,
    TraceError,
    count_targets_hit,
    precision_targets,
    run_and_trace,
)

__version__ = "0.1.0"

__all__ = [
    "BaseEstimator",
    "BorutaSelector",
    "CHANNELS",
    "CMAES",
    "CVResult",
    "Dendrogram",
    "DistanceMatrix",
    "ExperimentConfig",
    "ExtraTreesClassifier",
    "ExtraTreesRegressor",
    "FUNCTION_NAMES",
    "FeatureMatrix",
    "FeatureSpec",
    "ModularConfig",
    "NotFittedError",
    "Trace",
    "TraceError",
    "VARIANTS",
    "accuracy",
    "bakers_gamma",
    "boruta_select",
    "compute_feature",
    "consensus_select",
    "count_targets_hit",
    "distance_matrix",
    "extract_row",
    "f1_macro",
    "kfold_cv",
    "load_config",
    "logo_cv",
    "make_problem",
    "make_sampler",
    "mean_vectors",
    "parse_merge_csv",
    "parse_newick",
    "precision_targets",
    "r2_score",
    "raw_catalog",
    "render_merge_csv",
    "render_newick",
    "run_and_trace",
    "selected_catalog",
    "variant_config",
    "ward_linkage",
]
