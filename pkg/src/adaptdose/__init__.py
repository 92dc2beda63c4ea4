"""Design quantities for adaptive phase 2/3 trials with dose selection.

Core computations: the probability that the dose picked on short-term
efficacy/safety data is the one with the better long-term outcome, the
exact adjusted significance level for the pooled test, the exact
inverse normal combination test and its equivalent level, correlation
estimation from historical data, and seeded Monte Carlo verification of
every analytic quantity.
"""

from .alpha_exact import TrialGeometry, overall_type1, solve_alpha_e
from .combination import (
    AlphaLevels,
    PValuePair,
    adjust_p1,
    alpha_c,
    alpha_level_sweep,
    combination_p,
    dunnett_adjust,
    invert_p1,
    reject,
    sidak_adjust,
)
from .correlation import (
    BootstrapCorr,
    PatientRecord,
    SubgroupEffect,
    bootstrap_corr,
    collapse_subgroups,
    load_patient_records,
    load_subgroup_table,
    logrank_z,
    modified_pearson,
)
from .errors import (
    AdaptDoseError,
    BracketingError,
    DataError,
    DegenerateDataError,
    DomainError,
    InvalidParameterError,
    NonPSDError,
    NumericError,
)
from .montecarlo import (
    McEstimate,
    simulate_type1_abstract,
    simulate_type1_full,
    simulate_w,
)
from .numerics import (
    Corr3,
    bvn_cdf,
    extreme_pair_density,
    find_root,
    norm_cdf,
    norm_pdf,
    norm_quantile,
    tvn_cdf,
)
from .selection import (
    CorrelationSet,
    DesignParams,
    SelectionRule,
    SweepPoint,
    WinnerProb,
    winner_prob,
    winner_prob_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptDoseError",
    "AlphaLevels",
    "BootstrapCorr",
    "BracketingError",
    "Corr3",
    "CorrelationSet",
    "DataError",
    "DegenerateDataError",
    "DesignParams",
    "DomainError",
    "InvalidParameterError",
    "McEstimate",
    "NonPSDError",
    "NumericError",
    "PValuePair",
    "PatientRecord",
    "SelectionRule",
    "SubgroupEffect",
    "SweepPoint",
    "TrialGeometry",
    "WinnerProb",
    "adjust_p1",
    "alpha_c",
    "alpha_level_sweep",
    "bootstrap_corr",
    "bvn_cdf",
    "collapse_subgroups",
    "combination_p",
    "dunnett_adjust",
    "extreme_pair_density",
    "find_root",
    "invert_p1",
    "load_patient_records",
    "load_subgroup_table",
    "logrank_z",
    "modified_pearson",
    "norm_cdf",
    "norm_pdf",
    "norm_quantile",
    "overall_type1",
    "reject",
    "sidak_adjust",
    "simulate_type1_abstract",
    "simulate_type1_full",
    "simulate_w",
    "solve_alpha_e",
    "tvn_cdf",
    "winner_prob",
    "winner_prob_sweep",
]
