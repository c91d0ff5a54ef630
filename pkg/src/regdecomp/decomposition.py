"""Two-context decomposition of the change in a regression's predicted mean.

With ``b, xbar`` from the initial context and ``b', xbar'`` from the changed
one, ``zbar' - zbar = b'.xbar' - b.xbar`` splits as

* ``paper`` (default): ``b.dxbar + xbar'.db``
* ``changed-ref``:     ``b'.dxbar + xbar.db``
* ``threefold``:       ``b.dxbar + xbar.db + dxbar.db``

The first term is the coefficients-fixed ("endowments") term and the second
the coefficient-change term. Entities need not be paired across contexts.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from regdecomp.algebra import closure_scale
from regdecomp.regression import (
    DesignMatrix,
    FrequencyVector,
    RegressionFit,
    as_frequencies,
    fit_weighted_least_squares,
    weighted_mean,
)


class Convention(str, enum.Enum):
    PAPER = "paper"
    CHANGED_REF = "changed-ref"
    THREEFOLD = "threefold"


class SchemaMismatchError(ValueError):
    """The two contexts do not share the same predictor columns."""


@dataclass(frozen=True)
class ContextData:
    design: DesignMatrix
    outcome: np.ndarray
    frequencies: FrequencyVector
    label: str = ""

    def __post_init__(self):
        design = self.design if isinstance(self.design, DesignMatrix) else DesignMatrix(self.design)
        outcome = np.array(self.outcome, dtype=np.float64)
        outcome.flags.writeable = False
        freqs = as_frequencies(self.frequencies)
        if not (design.n_entities == len(outcome) == len(freqs)):
            raise ValueError(
                f"context {self.label!r}: {design.n_entities} design rows, "
                f"{len(outcome)} outcomes, {len(freqs)} frequencies"
            )
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "outcome", outcome)
        object.__setattr__(self, "frequencies", freqs)

    @property
    def mean_outcome(self) -> float:
        return weighted_mean(self.outcome, self.frequencies)

    @property
    def predictor_means(self) -> np.ndarray:
        return self.design.column_means(self.frequencies)


@dataclass(frozen=True)
class PredictorContribution:
    index: int
    name: str
    coefficients_fixed: float
    coefficient_change: float
    interaction: Optional[float] = None


@dataclass(frozen=True)
class DecompositionReport:
    total_change: float
    coefficients_fixed_term: float
    coefficient_change_term: float
    interaction_term: Optional[float]
    closure_error: float
    convention: Convention
    per_predictor_contributions: tuple
    initial_fit: RegressionFit
    changed_fit: RegressionFit
    initial_means: np.ndarray
    changed_means: np.ndarray
    initial_mean_outcome: float
    changed_mean_outcome: float
    labels: tuple = ("initial", "changed")

    @property
    def terms(self) -> tuple:
        t = (self.coefficients_fixed_term, self.coefficient_change_term)
        return t if self.interaction_term is None else t + (self.interaction_term,)

    @property
    def relative_closure_error(self) -> float:
        return abs(self.closure_error) / closure_scale(
            self.initial_mean_outcome, self.changed_mean_outcome, *self.terms
        )


def _term_vectors(convention: Convention, b, b2, xbar, xbar2):
    """Per-predictor contribution vectors for each term of ``convention``."""
    dx = xbar2 - xbar
    db = b2 - b
    if convention is Convention.PAPER:
        return b * dx, xbar2 * db, None
    if convention is Convention.CHANGED_REF:
        return b2 * dx, xbar * db, None
    return b * dx, xbar * db, dx * db


def decompose_mean_change(
    initial: ContextData,
    changed: ContextData,
    convention: Convention | str = Convention.PAPER,
    *,
    drop_dependent: bool = False,
) -> DecompositionReport:
    """Fit both contexts and split ``zbar' - zbar`` under ``convention``.

    ``total_change`` is the direct difference of weighted outcome means, so
    ``closure_error`` measures how well the fitted terms reproduce the data.
    """
    convention = Convention(convention)
    if initial.design.names != changed.design.names:
        raise SchemaMismatchError(
            f"predictor columns differ: {list(initial.design.names)} vs {list(changed.design.names)}"
        )
    fit = fit_weighted_least_squares(
        initial.design, initial.outcome, initial.frequencies, drop_dependent=drop_dependent
    )
    fit2 = fit_weighted_least_squares(
        changed.design, changed.outcome, changed.frequencies, drop_dependent=drop_dependent
    )
    xbar = initial.predictor_means
    xbar2 = changed.predictor_means
    zbar = initial.mean_outcome
    zbar2 = changed.mean_outcome

    b, b2 = fit.coefficients, fit2.coefficients
    fixed_v, change_v, inter_v = _term_vectors(convention, b, b2, xbar, xbar2)
    fixed = math.fsum(fixed_v.tolist())
    change = math.fsum(change_v.tolist())
    inter = None if inter_v is None else math.fsum(inter_v.tolist())
    contributions = tuple(
        PredictorContribution(
            index=i,
            name=initial.design.names[i],
            coefficients_fixed=float(fixed_v[i]),
            coefficient_change=float(change_v[i]),
            interaction=None if inter_v is None else float(inter_v[i]),
        )
        for i in range(len(b))
    )

    total = zbar2 - zbar
    terms = [fixed, change] + ([] if inter is None else [inter])
    closure = math.fsum(terms) - total
    return DecompositionReport(
        total_change=total,
        coefficients_fixed_term=fixed,
        coefficient_change_term=change,
        interaction_term=inter,
        closure_error=closure,
        convention=convention,
        per_predictor_contributions=contributions,
        initial_fit=fit,
        changed_fit=fit2,
        initial_means=xbar,
        changed_means=xbar2,
        initial_mean_outcome=zbar,
        changed_mean_outcome=zbar2,
        labels=(initial.label or "initial", changed.label or "changed"),
    )


def per_predictor_breakdown(report: DecompositionReport) -> tuple:
    """Per-predictor contributions to each term of ``report``.

    Contributions to a term sum to that term within rounding; the intercept
    never contributes to the coefficients-fixed term since its mean is 1 in
    both contexts.
    """
    return report.per_predictor_contributions
