"""Tree-structured multivariate extreme value modelling.

Learn a maximum dependence tree from data, fit bivariate stable tail
dependence functions on its edges, evaluate the induced tree-structured
limit distribution, and estimate joint exceedance probabilities with
generalized-Pareto margins.
"""

from tailtree._backend import active_backend, set_backend
from tailtree.depmeasures import (
    SampleMatrix,
    empirical_stdf,
    empirical_tdc_matrix,
    kendall_tau_matrix,
)
from tailtree.errors import EstimationError, InputError, TailTreeError
from tailtree.estimators import (
    EdgeFitDiagnostics,
    EstimatorConfig,
    edge_estimate,
    fit_tree_model,
    m_estimate,
    moments_estimate,
    wls_estimate,
)
from tailtree.families import (
    AsymLogisticSpecial,
    HuslerReiss,
    Lognormal,
    TwoAtom,
    increment_law,
    sample_increment,
    stdf_pair,
    tdc_pair,
)
from tailtree.graph import Tree, path_between, prim_max_tree, tree_weight_sum
from tailtree.margins import (
    EventSeries,
    GpdFit,
    HybridTailCdf,
    decluster,
    empirical_quantile,
    fit_margin,
    gpd_fit_mle,
    tail_prob,
)
from tailtree.simulate import (
    SimulationSpec,
    add_frechet_noise,
    ae_metric,
    complete_variogram,
    oracle_joint_cdf,
    sample_asym_logistic,
    sample_husler_reiss,
    variogram_distance,
)
from tailtree.treemodel import (
    FrechetMargin,
    TreeModel,
    approximation_error_D,
    model_from_json,
    model_to_json,
    rare_event_probability,
    stdf_tree_closed_alog,
    stdf_tree_mc,
    tdc_tree,
    tdc_tree_mc,
    variogram_tree,
)

__version__ = "0.1.0"

__all__ = [
    "AsymLogisticSpecial",
    "EdgeFitDiagnostics",
    "EstimationError",
    "EstimatorConfig",
    "EventSeries",
    "FrechetMargin",
    "GpdFit",
    "HuslerReiss",
    "HybridTailCdf",
    "InputError",
    "Lognormal",
    "SampleMatrix",
    "SimulationSpec",
    "TailTreeError",
    "Tree",
    "TreeModel",
    "TwoAtom",
    "active_backend",
    "add_frechet_noise",
    "ae_metric",
    "approximation_error_D",
    "complete_variogram",
    "decluster",
    "edge_estimate",
    "empirical_quantile",
    "empirical_stdf",
    "empirical_tdc_matrix",
    "fit_margin",
    "fit_tree_model",
    "gpd_fit_mle",
    "increment_law",
    "kendall_tau_matrix",
    "m_estimate",
    "model_from_json",
    "model_to_json",
    "moments_estimate",
    "oracle_joint_cdf",
    "path_between",
    "prim_max_tree",
    "rare_event_probability",
    "sample_asym_logistic",
    "sample_husler_reiss",
    "sample_increment",
    "set_backend",
    "stdf_pair",
    "stdf_tree_closed_alog",
    "stdf_tree_mc",
    "tail_prob",
    "tdc_pair",
    "tdc_tree",
    "tdc_tree_mc",
    "tree_weight_sum",
    "variogram_distance",
    "variogram_tree",
]
