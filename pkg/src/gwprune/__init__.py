"""Horton pruning of Galton-Watson trees.

Combinatorial Horton pruning and Horton-Strahler ordering of finite planted
trees, the induced pruning operator on critical/subcritical offspring
distributions with its invariant family and attractors, analytic and Monte
Carlo Tokunaga statistics, Horton exponents, and exact small-tree enumeration.
"""

__version__ = "0.1.0"

from .distributions import (
    ExplicitFinite,
    ExplicitWithTail,
    InvariantGW,
    OrderDistribution,
    OscillatorySum,
    TokunagaSequence,
    TokunagaTable,
    ZipfCriticalExample,
    critical_binary,
    g_eval,
    gf_eval,
    horton_exponent,
    igw,
    igw_constants,
    order_distribution,
    regularity_probe,
    s_eval,
    tokunaga_analytic,
    zipf_critical,
)
from .errors import (
    CapacityError,
    ConditioningError,
    NumericalError,
    StructuralError,
    TruncationError,
)
from .oracle import EnumerationResult, enumerate_conditional
from .pruning import (
    PruningTrajectory,
    invariance_residual,
    iterate_pruning,
    oscillatory_invariant,
    prune_distribution,
)
from .sampler import (
    McEstimates,
    SampleConfig,
    mc_tokunaga,
    sample_conditioned,
    sample_tree,
)
from .trees import (
    BranchStatistics,
    OrderedTree,
    Tree,
    branch_statistics,
    canonical_form,
    horton_prune,
    hs_order_by_pruning,
    hs_order_recursive,
    series_reduce,
)

__all__ = [
    "BranchStatistics",
    "CapacityError",
    "ConditioningError",
    "EnumerationResult",
    "ExplicitFinite",
    "ExplicitWithTail",
    "InvariantGW",
    "McEstimates",
    "NumericalError",
    "OrderDistribution",
    "OrderedTree",
    "OscillatorySum",
    "PruningTrajectory",
    "SampleConfig",
    "StructuralError",
    "TokunagaSequence",
    "TokunagaTable",
    "Tree",
    "TruncationError",
    "ZipfCriticalExample",
    "branch_statistics",
    "canonical_form",
    "critical_binary",
    "enumerate_conditional",
    "g_eval",
    "gf_eval",
    "horton_exponent",
    "horton_prune",
    "hs_order_by_pruning",
    "hs_order_recursive",
    "igw",
    "igw_constants",
    "invariance_residual",
    "iterate_pruning",
    "mc_tokunaga",
    "order_distribution",
    "oscillatory_invariant",
    "prune_distribution",
    "regularity_probe",
    "s_eval",
    "sample_conditioned",
    "sample_tree",
    "series_reduce",
    "tokunaga_analytic",
    "zipf_critical",
]
