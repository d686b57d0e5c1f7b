"""Worst-case target semi-variance and regret bounds over moment sets,
with mean-variance-style portfolio selection built on top of them."""

from .errors import (
    BudgetExhausted,
    DegenerateMeans,
    EmptyUncertaintySet,
    InfeasibleBudget,
    InfeasibleConstraints,
    InfeasibleSupport,
    InvalidBudget,
    InvalidProfile,
    NoKnownWitness,
    NonConvergence,
    NonNegativeRequiresPositiveMean,
    NonPositivePrice,
    NotPositiveDefinite,
    ParseError,
    TooFewRows,
    UnsortedDates,
    WctsvError,
    WindowTooLarge,
)
from .oracle import (
    DiscreteDistribution,
    OracleReport,
    PartialMoments,
    brute_force_worst_case,
    partial_moments,
    two_point_match,
    witness_family,
)
from .worst_case import (
    ComplementBounds,
    Family,
    MomentProfile,
    WorstCaseValue,
    reflect_complement_bounds,
    set_nonempty,
    wc_expected_regret,
    wc_target_semivariance,
    wc_target_semivariance_constrained,
)

__version__ = "0.1.0"

__all__ = [
    "Family",
    "MomentProfile",
    "WorstCaseValue",
    "ComplementBounds",
    "wc_expected_regret",
    "wc_target_semivariance",
    "wc_target_semivariance_constrained",
    "set_nonempty",
    "reflect_complement_bounds",
    "DiscreteDistribution",
    "PartialMoments",
    "OracleReport",
    "partial_moments",
    "two_point_match",
    "witness_family",
    "brute_force_worst_case",
    "WctsvError",
    "InvalidProfile",
    "InvalidBudget",
    "NonNegativeRequiresPositiveMean",
    "EmptyUncertaintySet",
    "InfeasibleSupport",
    "NoKnownWitness",
    "InfeasibleConstraints",
    "BudgetExhausted",
    "NotPositiveDefinite",
    "DegenerateMeans",
    "InfeasibleBudget",
    "NonConvergence",
    "ParseError",
    "NonPositivePrice",
    "UnsortedDates",
    "TooFewRows",
    "WindowTooLarge",
    "__version__",
]
