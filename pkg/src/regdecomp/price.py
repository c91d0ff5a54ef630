"""Price equation in dot-product and covariance/expectation form.

Entities are paired by index across the two contexts. With ``zbar = q.z``::

    zbar' - zbar = dq.z + q'.dz                      (dot-product form)
                 = Cov(w, z) + E(w dz)               (fitness form, wbar = 1)

where ``q'_j = q_j w_j`` once fitness is normalised to mean one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from regdecomp.algebra import as_vector, closure_scale, dot
from regdecomp.regression import FrequencyVector, as_frequencies, weighted_covariance, weighted_mean

FITNESS_TOL = 1e-10


class ZeroMeanFitnessError(ValueError):
    """Mean fitness is zero, so fitness cannot be normalised."""


class PriceForm(str, enum.Enum):
    DOT_PRODUCT = "dot_product"
    COVARIANCE_EXPECTATION = "covariance_expectation"


def normalize_fitness(w, q) -> np.ndarray:
    """Rescale fitness so that its q-weighted mean is one."""
    q = as_frequencies(q)
    w = as_vector(w, "fitness")
    if len(w) != len(q):
        raise ValueError(f"length mismatch: {len(w)} fitness values, {len(q)} frequencies")
    if np.any(w < 0):
        raise ValueError("fitness must be nonnegative")
    wbar = weighted_mean(w, q)
    if wbar <= 0:
        raise ZeroMeanFitnessError("mean fitness is zero")
    if wbar == 1.0:
        return w
    out = w / wbar
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class PairedPopulation:
    """Index-paired entities observed before and after one change.

    Entities with ``q'_j = 0`` (extinct) are allowed. Their changed value is
    still required but enters the transmission term with weight zero; see
    :attr:`extinct`.
    """

    frequencies_initial: FrequencyVector
    frequencies_changed: FrequencyVector
    values_initial: np.ndarray
    values_changed: np.ndarray
    fitness: Optional[np.ndarray] = None

    def __post_init__(self):
        q = as_frequencies(self.frequencies_initial)
        q2 = as_frequencies(self.frequencies_changed)
        z = as_vector(self.values_initial, "values_initial")
        z2 = as_vector(self.values_changed, "values_changed")
        n = len(q)
        if not (len(q2) == len(z) == len(z2) == n):
            raise ValueError(
                f"length mismatch: q={n}, q'={len(q2)}, z={len(z)}, z'={len(z2)}"
            )
        object.__setattr__(self, "frequencies_initial", q)
        object.__setattr__(self, "frequencies_changed", q2)
        object.__setattr__(self, "values_initial", z)
        object.__setattr__(self, "values_changed", z2)
        if self.fitness is not None:
            w = normalize_fitness(self.fitness, q)
            expected = q.weights * w
            gap = float(np.max(np.abs(q2.weights - expected)))
            if gap > FITNESS_TOL:
                raise ValueError(
                    f"changed frequencies are not q*w/wbar (max deviation {gap:.3g})"
                )
            object.__setattr__(self, "fitness", as_vector(self.fitness, "fitness"))

    @classmethod
    def from_fitness(cls, q, w, z, z_changed) -> "PairedPopulation":
        """Build the changed frequencies as ``q_j w_j / wbar``."""
        q = as_frequencies(q)
        wn = normalize_fitness(w, q)
        return cls(q, FrequencyVector(q.weights * wn), z, z_changed, w)

    @property
    def extinct(self) -> np.ndarray:
        """Indices of entities absent from the changed context."""
        return np.flatnonzero(self.frequencies_changed.weights == 0)


@dataclass(frozen=True)
class PricePartition:
    selection_term: float
    transmission_term: float
    total: float
    form: PriceForm

    @property
    def closure_error(self) -> float:
        return self.selection_term + self.transmission_term - self.total

    @property
    def relative_closure_error(self) -> float:
        return abs(self.closure_error) / closure_scale(
            self.selection_term, self.transmission_term, self.total
        )


def _direct_change(pop: PairedPopulation) -> float:
    return weighted_mean(pop.values_changed, pop.frequencies_changed) - weighted_mean(
        pop.values_initial, pop.frequencies_initial
    )


def price_partition(pop: PairedPopulation) -> PricePartition:
    """Selection ``dq.z`` and transmission ``q'.dz``; total from the data."""
    q, q2 = pop.frequencies_initial.weights, pop.frequencies_changed.weights
    z, z2 = pop.values_initial, pop.values_changed
    return PricePartition(
        selection_term=dot(q2 - q, z),
        transmission_term=dot(q2, z2 - z),
        total=_direct_change(pop),
        form=PriceForm.DOT_PRODUCT,
    )


def price_covariance_form(pop: PairedPopulation) -> PricePartition:
    """Selection ``Cov(w, z)`` and transmission ``E(w dz)`` under ``q``."""
    if pop.fitness is None:
        raise ValueError("covariance form needs fitness values")
    q = pop.frequencies_initial
    w = normalize_fitness(pop.fitness, q)
    dz = pop.values_changed - pop.values_initial
    return PricePartition(
        selection_term=weighted_covariance(w, pop.values_initial, q),
        transmission_term=weighted_mean(w * dz, q),
        total=_direct_change(pop),
        form=PriceForm.COVARIANCE_EXPECTATION,
    )
