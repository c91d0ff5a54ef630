"""Haploid selection: allele frequencies, Fisher's partition, and a simulator.

Individuals carry 0/1 alleles at ``n`` loci (columns 1..n of the design;
column 0 is the intercept). Fitness is regressed on genotype under the
current frequencies ``q``; one round of selection sets ``q'_j = q_j w_j``
with ``w`` normalised to mean one. The change in mean fitness then splits as

    dwbar = b . dp  +  p' . db

The first term is Fisher's natural-selection term, and equals the additive
genetic variance ``Var(g)`` of the fitted genetic values ``g``; the second is
the change-of-environment term.

Loci fixed at frequency 0 or 1 are collinear with the intercept. Their
columns are dropped from the fit and they contribute nothing to either term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from regdecomp.algebra import as_vector, closure_scale, dot
from regdecomp.price import ZeroMeanFitnessError, normalize_fitness
from regdecomp.regression import (
    DesignMatrix,
    FrequencyVector,
    as_frequencies,
    fit_weighted_least_squares,
    weighted_covariance,
    weighted_mean,
)

FTNS_TOL = 1e-10
CLOSURE_TOL = 1e-10
EXCESS_TOL = 1e-12


class ConsistencyError(ValueError):
    """Allele frequencies are inconsistent with pure selection."""


class IdentityViolation(AssertionError):
    """A decomposition identity failed beyond its tolerance."""


@dataclass(frozen=True)
class HaploidPopulation:
    genotypes: DesignMatrix
    frequencies: FrequencyVector
    fitness: np.ndarray

    def __post_init__(self):
        X = self.genotypes if isinstance(self.genotypes, DesignMatrix) else DesignMatrix(self.genotypes)
        loci = X.values[:, 1:]
        if not np.all((loci == 0.0) | (loci == 1.0)):
            raise ValueError("genotype entries outside the intercept column must be 0 or 1")
        q = as_frequencies(self.frequencies)
        w = as_vector(self.fitness, "fitness")
        if not (X.n_entities == len(q) == len(w)):
            raise ValueError(f"length mismatch: {X.n_entities} genotypes, {len(q)} frequencies, {len(w)} fitness values")
        if np.any(w < 0):
            raise ValueError("fitness must be nonnegative")
        object.__setattr__(self, "genotypes", X)
        object.__setattr__(self, "frequencies", q)
        object.__setattr__(self, "fitness", w)

    @classmethod
    def from_loci(cls, loci, frequencies, fitness) -> "HaploidPopulation":
        """Build from an entity-by-locus 0/1 array (intercept added)."""
        loci = np.asarray(loci, dtype=np.float64)
        if loci.ndim == 1:
            loci = loci[:, None]
        names = [f"locus{i}" for i in range(1, loci.shape[1] + 1)]
        return cls(DesignMatrix.with_intercept(loci, names), frequencies, fitness)

    @property
    def n_loci(self) -> int:
        return self.genotypes.n_columns - 1


class MarginalFitness(NamedTuple):
    marginal_fitness: np.ndarray
    average_excess: np.ndarray


@dataclass(frozen=True)
class SelectionSummary:
    p_initial: np.ndarray
    p_changed: np.ndarray
    delta_p: np.ndarray
    marginal_fitness: np.ndarray
    average_excess: np.ndarray
    coefficients_initial: np.ndarray
    coefficients_changed: np.ndarray
    ftns_term: float
    environment_term: float
    total_change: float
    genetic_variance: float
    genetic_covariance: float
    ftns_via_excess: float
    raw_mean_fitness: float
    fixed_loci: tuple = ()
    undefined_loci: tuple = ()
    dropped_initial: tuple = ()
    dropped_changed: tuple = ()

    @property
    def closure_error(self) -> float:
        return self.ftns_term + self.environment_term - self.total_change

    @property
    def relative_closure_error(self) -> float:
        return abs(self.closure_error) / closure_scale(
            self.ftns_term, self.environment_term, self.total_change
        )

    @property
    def ftns_error(self) -> float:
        """Largest gap among ``b.dp``, ``Cov(g, w)`` and ``Var(g)``."""
        vals = (self.ftns_term, self.genetic_covariance, self.genetic_variance)
        return max(vals) - min(vals)

    def violations(self) -> list:
        out = []
        scale = closure_scale(self.ftns_term, self.genetic_variance)
        if self.ftns_error > FTNS_TOL * scale:
            out.append(
                f"b.dp={self.ftns_term!r}, Cov(g,w)={self.genetic_covariance!r}, "
                f"Var(g)={self.genetic_variance!r} differ by {self.ftns_error:.3g}"
            )
        if abs(self.ftns_term - self.ftns_via_excess) > EXCESS_TOL * scale:
            out.append(f"b.dp={self.ftns_term!r} but sum p*alpha*b={self.ftns_via_excess!r}")
        if self.relative_closure_error > CLOSURE_TOL:
            out.append(
                f"b.dp + p'.db = {self.ftns_term + self.environment_term!r} "
                f"but dwbar = {self.total_change!r}"
            )
        return out

    def check(self) -> "SelectionSummary":
        problems = self.violations()
        if problems:
            raise IdentityViolation("; ".join(problems))
        return self


def allele_frequencies(pop: HaploidPopulation) -> np.ndarray:
    """Weighted column means of the genotype matrix; entry 0 is exactly 1."""
    return pop.genotypes.column_means(pop.frequencies)


def select(pop: HaploidPopulation) -> HaploidPopulation:
    """One round of selection: ``q'_j = q_j w_j / wbar``.

    Genotypes and raw fitness values carry over unchanged.
    """
    w = normalize_fitness(pop.fitness, pop.frequencies)
    return HaploidPopulation(pop.genotypes, FrequencyVector(pop.frequencies.weights * w), pop.fitness)


def marginal_fitness_and_excess(p, p_changed) -> MarginalFitness:
    """Marginal fitness ``p'_i / p_i`` and average excess ``w_i - 1``.

    Loci absent before and after (``p_i = p'_i = 0``) have no defined
    marginal fitness and are reported as NaN.
    """
    p = np.asarray(p, dtype=np.float64)
    p2 = np.asarray(p_changed, dtype=np.float64)
    if p.shape != p2.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {p2.shape}")
    absent = p == 0
    appeared = absent & (p2 > 0)
    if np.any(appeared):
        raise ConsistencyError(
            f"loci {np.flatnonzero(appeared).tolist()} have p = 0 but p' > 0, "
            "which selection alone cannot produce"
        )
    wi = np.full_like(p, np.nan)
    np.divide(p2, p, out=wi, where=~absent)
    return MarginalFitness(wi, wi - 1.0)


def delta_p_via_covariance(pop: HaploidPopulation) -> np.ndarray:
    """Allele-frequency change per locus as ``Cov(x_i, w)`` under ``q``."""
    w = normalize_fitness(pop.fitness, pop.frequencies)
    return np.array([weighted_covariance(col, w, pop.frequencies) for col in pop.genotypes.values.T])


def fundamental_theorem_term(pop: HaploidPopulation, *, check: bool = True) -> SelectionSummary:
    """Partition the change in mean fitness over one round of selection.

    Fitness is normalised to mean one, regressed on genotype before and after
    selection, and the two terms ``b.dp`` and ``p'.db`` computed. With
    ``check`` (the default) the identities ``b.dp = Cov(g, w) = Var(g)`` and
    ``b.dp + p'.db = dwbar`` are verified and :class:`IdentityViolation` is
    raised if either fails.
    """
    q = pop.frequencies
    raw_mean = weighted_mean(pop.fitness, q)
    w = normalize_fitness(pop.fitness, q)
    after = select(pop)
    q2 = after.frequencies

    fit = fit_weighted_least_squares(pop.genotypes, w, q, drop_dependent=True)
    fit2 = fit_weighted_least_squares(pop.genotypes, w, q2, drop_dependent=True)
    b, b2 = fit.coefficients, fit2.coefficients

    p = allele_frequencies(pop)
    p2 = allele_frequencies(after)
    dp = p2 - p
    wi, alpha = marginal_fitness_and_excess(p, p2)
    defined = ~np.isnan(alpha)
    g = fit.fitted

    summary = SelectionSummary(
        p_initial=p,
        p_changed=p2,
        delta_p=dp,
        marginal_fitness=wi,
        average_excess=alpha,
        coefficients_initial=b,
        coefficients_changed=b2,
        ftns_term=dot(b, dp),
        environment_term=dot(p2, b2 - b),
        total_change=weighted_mean(w, q2) - weighted_mean(w, q),
        genetic_variance=weighted_covariance(g, g, q),
        genetic_covariance=weighted_covariance(g, w, q),
        ftns_via_excess=math.fsum((p * alpha * b)[defined].tolist()),
        raw_mean_fitness=raw_mean,
        fixed_loci=tuple(i for i in range(1, len(p)) if p[i] in (0.0, 1.0)),
        undefined_loci=tuple(np.flatnonzero(~defined).tolist()),
        dropped_initial=fit.dropped,
        dropped_changed=fit2.dropped,
    )
    return summary.check() if check else summary


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


class ConfigError(ValueError):
    """An invalid simulation configuration field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class SimulationConfig:
    """Parameters of a deterministic haploid selection run.

    Fitness of entity ``j`` in generation ``t`` is::

        max(0, baseline + sum_i (s_i + t*environment_shift) x_ij
                        + sum_{i<k} e_ik x_ij x_ik)

    ``s_i`` are ``additive_effects`` if given, else drawn ``Normal(0,
    selection)``; ``e_ik`` are drawn ``Normal(0, epistasis)``.
    """

    seed: int = 42
    loci: int = 4
    entities: int = 32
    generations: int = 20
    selection: float = 0.1
    additive_effects: Optional[tuple] = None
    epistasis: float = 0.05
    environment_shift: float = 0.0
    baseline: float = 1.0

    def __post_init__(self):
        for name in ("seed", "loci", "entities", "generations"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(f"config.{name}", f"expected an integer, got {value!r}")
        if self.seed < 0:
            raise ConfigError("config.seed", "must be >= 0")
        if self.loci < 1:
            raise ConfigError("config.loci", "must be >= 1")
        if self.entities < 2:
            raise ConfigError("config.entities", "must be >= 2")
        if self.generations < 0:
            raise ConfigError("config.generations", "must be >= 0")
        for name in ("selection", "epistasis", "environment_shift", "baseline"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f"config.{name}", f"expected a finite number, got {value!r}")
        if self.selection < 0:
            raise ConfigError("config.selection", "must be >= 0")
        if self.epistasis < 0:
            raise ConfigError("config.epistasis", "must be >= 0")
        if self.additive_effects is not None:
            effects = self.additive_effects
            if isinstance(effects, (str, bytes)) or not isinstance(effects, Sequence):
                raise ConfigError("config.additive_effects", "expected a list of numbers")
            if len(effects) != self.loci:
                raise ConfigError(
                    "config.additive_effects", f"expected {self.loci} values, got {len(effects)}"
                )
            for i, v in enumerate(effects):
                if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                    raise ConfigError(f"config.additive_effects[{i}]", f"expected a finite number, got {v!r}")
            object.__setattr__(self, "additive_effects", tuple(float(v) for v in effects))

    @classmethod
    def from_mapping(cls, data) -> "SimulationConfig":
        if not isinstance(data, dict):
            raise ConfigError("config", "expected a mapping of fields")
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"config.{unknown[0]}", "unknown field")
        return cls(**data)

    def to_mapping(self) -> dict:
        return {
            name: (list(v) if isinstance(v, tuple) else v)
            for name, v in ((n, getattr(self, n)) for n in self.__dataclass_fields__)
        }


@dataclass(frozen=True)
class SimulationResult:
    config: SimulationConfig
    summaries: tuple
    status: str
    genotypes: np.ndarray
    additive_effects: np.ndarray
    epistasis: np.ndarray = field(repr=False)

    @property
    def generations_run(self) -> int:
        return len(self.summaries)


def _draw_model(config: SimulationConfig):
    """Genotypes, additive effects and epistasis matrix, drawn in that order."""
    rng = np.random.default_rng(config.seed)
    genotypes = rng.integers(0, 2, size=(config.entities, config.loci)).astype(np.float64)
    drawn = rng.normal(0.0, 1.0, size=config.loci) * config.selection
    effects = np.array(config.additive_effects) if config.additive_effects is not None else drawn
    upper = rng.normal(0.0, 1.0, size=config.loci * (config.loci - 1) // 2) * config.epistasis
    epi = np.zeros((config.loci, config.loci))
    epi[np.triu_indices(config.loci, k=1)] = upper
    return genotypes, effects, epi


def simulation_fitness(genotypes, effects, epistasis, baseline: float, shift: float) -> np.ndarray:
    """Fitness under additive effects shifted by ``shift`` plus pairwise epistasis."""
    additive = genotypes @ (effects + shift)
    pairwise = np.einsum("ji,ik,jk->j", genotypes, epistasis, genotypes)
    return np.maximum(baseline + additive + pairwise, 0.0)


def simulate(config: SimulationConfig) -> SimulationResult:
    """Run ``config.generations`` rounds of deterministic haploid selection.

    Each generation emits the :class:`SelectionSummary` of its selection
    round, with every identity checked. The run stops early with status
    ``"fixed"`` once no locus varies, or ``"extinct"`` if mean fitness
    reaches zero; otherwise the status is ``"completed"``.
    """
    genotypes, effects, epi = _draw_model(config)
    X = DesignMatrix.with_intercept(genotypes, [f"locus{i}" for i in range(1, config.loci + 1)])
    q = FrequencyVector(np.full(config.entities, 1.0 / config.entities))

    summaries = []
    status = "completed"
    for t in range(config.generations):
        w = simulation_fitness(genotypes, effects, epi, config.baseline, t * config.environment_shift)
        pop = HaploidPopulation(X, q, w)
        p = allele_frequencies(pop)[1:]
        if np.all((p == 0.0) | (p == 1.0)):
            status = "fixed"
            break
        try:
            summary = fundamental_theorem_term(pop)
        except ZeroMeanFitnessError:
            status = "extinct"
            break
        summaries.append(summary)
        q = select(pop).frequencies
    return SimulationResult(config, tuple(summaries), status, genotypes, effects, epi)
