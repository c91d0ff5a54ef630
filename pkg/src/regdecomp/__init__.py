"""Exact finite-difference decompositions of regression means.

The change in a frequency-weighted mean of a regression outcome between two
contexts splits exactly into a coefficients-fixed term and a
coefficient-change term. The same product rule gives Fisher's fundamental
theorem for haploid selection and both forms of the Price equation.
"""

__version__ = "0.1.0"

from regdecomp.algebra import (
    DeltaPair,
    differential_remainder,
    dot,
    product_rule_delta,
)
from regdecomp.decomposition import (
    ContextData,
    Convention,
    DecompositionReport,
    PredictorContribution,
    decompose_mean_change,
    per_predictor_breakdown,
)
from regdecomp.fisher import (
    HaploidPopulation,
    SelectionSummary,
    SimulationConfig,
    SimulationResult,
    allele_frequencies,
    delta_p_via_covariance,
    fundamental_theorem_term,
    marginal_fitness_and_excess,
    select,
    simulate,
)
from regdecomp.price import (
    PairedPopulation,
    PricePartition,
    normalize_fitness,
    price_covariance_form,
    price_partition,
)
from regdecomp.regression import (
    DesignMatrix,
    FrequencyVector,
    RankDeficiencyError,
    RegressionFit,
    fit_weighted_least_squares,
    predicted_mean,
    weighted_covariance,
    weighted_mean,
)

__all__ = [
    "ContextData",
    "Convention",
    "DecompositionReport",
    "DeltaPair",
    "DesignMatrix",
    "FrequencyVector",
    "HaploidPopulation",
    "PairedPopulation",
    "PredictorContribution",
    "PricePartition",
    "RankDeficiencyError",
    "RegressionFit",
    "SelectionSummary",
    "SimulationConfig",
    "SimulationResult",
    "allele_frequencies",
    "decompose_mean_change",
    "delta_p_via_covariance",
    "differential_remainder",
    "dot",
    "fit_weighted_least_squares",
    "fundamental_theorem_term",
    "marginal_fitness_and_excess",
    "normalize_fitness",
    "per_predictor_breakdown",
    "predicted_mean",
    "price_covariance_form",
    "price_partition",
    "select",
    "simulate",
    "weighted_covariance",
    "weighted_mean",
]
