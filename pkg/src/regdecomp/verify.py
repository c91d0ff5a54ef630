"""Randomised verification of every identity in the package.

Case ``k`` of a run with seed ``s`` draws check ``c`` from
``numpy.random.default_rng([s, k, c])``, so any failing case can be replayed
in isolation from its ``(seed, case)`` pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from regdecomp.algebra import DeltaPair, closure_scale, dot, product_rule_delta
from regdecomp.decomposition import ContextData, Convention, decompose_mean_change
from regdecomp.fisher import HaploidPopulation, fundamental_theorem_term
from regdecomp.price import PairedPopulation, price_covariance_form, price_partition
from regdecomp.regression import DesignMatrix, FrequencyVector, fit_weighted_least_squares, weighted_mean

PRODUCT_RULE_TOL = 1e-12
REGRESSION_TOL = 1e-10
DECOMPOSITION_TOL = 1e-10
FISHER_TOL = 1e-10
PRICE_TOL = 1e-12


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------


def random_frequencies(rng: np.random.Generator, m: int) -> FrequencyVector:
    return FrequencyVector(rng.dirichlet(np.ones(m)))


def random_context(rng, m: int, k: int, shift: float = 0.0, label: str = "") -> ContextData:
    """Outcome linear in ``k`` predictors plus noise; predictors shifted by ``shift``."""
    P = rng.normal(shift, 1.0, size=(m, k))
    beta = rng.normal(0.0, 2.0, size=k + 1)
    z = beta[0] + P @ beta[1:] + rng.normal(0.0, 0.5, size=m)
    names = [f"x{i}" for i in range(1, k + 1)]
    return ContextData(DesignMatrix.with_intercept(P, names), z, random_frequencies(rng, m), label)


def random_haploid(rng, loci: int, m: int, epistasis: float = 0.1) -> HaploidPopulation:
    G = rng.integers(0, 2, size=(m, loci)).astype(float)
    s = rng.normal(0.0, 0.2, size=loci)
    E = np.triu(rng.normal(0.0, epistasis, size=(loci, loci)), k=1)
    w = np.maximum(1.0 + G @ s + np.einsum("ji,ik,jk->j", G, E, G), 0.05)
    return HaploidPopulation.from_loci(G, random_frequencies(rng, m), w)


def random_paired(rng, m: int) -> PairedPopulation:
    q = random_frequencies(rng, m)
    w = rng.uniform(0.0, 2.0, size=m)
    z = rng.normal(0.0, 3.0, size=m)
    return PairedPopulation.from_fitness(q, w, z, z + rng.normal(0.0, 1.0, size=m))


# ---------------------------------------------------------------------------
# Checks: each returns ({measure: (error, tolerance)}, inputs)
# ---------------------------------------------------------------------------


def check_product_rule(rng):
    n = int(rng.integers(1, 101))
    b, b2, x, x2 = rng.uniform(-10, 10, size=(4, n))
    t = product_rule_delta(DeltaPair(b, b2), DeltaPair(x, x2))
    direct = dot(b2, x2) - dot(b, x)
    err = abs(t.holding_coefficients + t.coefficient_change - direct) / closure_scale(dot(b2, x2), dot(b, x))
    return {"product_rule": (err, PRODUCT_RULE_TOL)}, {"b": b, "b_changed": b2, "x": x, "x_changed": x2}


def check_regression(rng):
    ctx = random_context(rng, int(rng.integers(20, 81)), int(rng.integers(2, 7)))
    fit = fit_weighted_least_squares(ctx.design, ctx.outcome, ctx.frequencies)
    X, q, e = ctx.design.values, ctx.frequencies.weights, fit.residuals
    scale = closure_scale(*ctx.outcome) * closure_scale(*X.ravel())
    ortho = max(abs(dot(q * e, col)) for col in X.T)
    return (
        {"mean_residual": (abs(dot(q, e)) / scale, REGRESSION_TOL),
         "residual_orthogonality": (ortho / scale, REGRESSION_TOL)},
        {"design": X, "outcome": ctx.outcome, "frequencies": q},
    )


def check_decomposition(rng):
    m, m2, k = int(rng.integers(20, 61)), int(rng.integers(20, 61)), int(rng.integers(1, 5))
    a = random_context(rng, m, k, label="initial")
    c = random_context(rng, m2, k, shift=float(rng.normal()), label="changed")
    out = {}
    for conv in Convention:
        r = decompose_mean_change(a, c, conv)
        out[f"closure_{conv.value}"] = (r.relative_closure_error, DECOMPOSITION_TOL)
        if conv is Convention.THREEFOLD:
            dx = r.changed_means - r.initial_means
            db = r.changed_fit.coefficients - r.initial_fit.coefficients
            out["interaction"] = (abs(r.interaction_term - dot(dx, db)) / closure_scale(r.interaction_term), PRODUCT_RULE_TOL)
    inputs = {
        "initial": {"design": a.design.values, "outcome": a.outcome, "frequencies": a.frequencies.weights},
        "changed": {"design": c.design.values, "outcome": c.outcome, "frequencies": c.frequencies.weights},
    }
    return out, inputs


def check_fisher(rng):
    pop = random_haploid(rng, int(rng.integers(2, 6)), int(rng.integers(16, 65)))
    s = fundamental_theorem_term(pop, check=False)
    scale = closure_scale(s.ftns_term, s.genetic_variance)
    return (
        {"ftns_identity": (s.ftns_error / scale, FISHER_TOL),
         "fitness_closure": (s.relative_closure_error, FISHER_TOL)},
        {"genotypes": pop.genotypes.values, "frequencies": pop.frequencies.weights, "fitness": pop.fitness},
    )


def check_price(rng):
    pop = random_paired(rng, int(rng.integers(2, 21)))
    a, c = price_partition(pop), price_covariance_form(pop)
    direct = weighted_mean(pop.values_changed, pop.frequencies_changed) - weighted_mean(
        pop.values_initial, pop.frequencies_initial
    )
    scale = closure_scale(a.selection_term, a.transmission_term, a.total)
    return (
        {"selection_forms": (abs(a.selection_term - c.selection_term) / scale, PRICE_TOL),
         "transmission_forms": (abs(a.transmission_term - c.transmission_term) / scale, PRICE_TOL),
         "price_closure": (abs(a.selection_term + a.transmission_term - direct) / scale, PRICE_TOL)},
        {"q": pop.frequencies_initial.weights, "q_changed": pop.frequencies_changed.weights,
         "z": pop.values_initial, "z_changed": pop.values_changed, "fitness": pop.fitness},
    )


CHECKS: dict = {
    "product_rule": check_product_rule,
    "regression": check_regression,
    "decomposition": check_decomposition,
    "fisher": check_fisher,
    "price": check_price,
}


@dataclass
class VerificationResult:
    seed: int
    cases: int
    worst: dict = field(default_factory=dict)
    failure: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.failure is None

    @property
    def worst_error(self) -> float:
        return max((e for e, _ in self.worst.values()), default=0.0)


def run_verification(seed: int, cases: int, checks: Optional[dict] = None) -> VerificationResult:
    """Run every check on ``cases`` random instances; stop at the first failure."""
    checks = CHECKS if checks is None else checks
    result = VerificationResult(seed, cases)
    for k in range(cases):
        for c, (name, fn) in enumerate(checks.items()):
            measures, inputs = fn(np.random.default_rng([seed, k, c]))
            for measure, (err, tol) in measures.items():
                key = f"{name}.{measure}"
                if err > result.worst.get(key, (-1.0, tol))[0]:
                    result.worst[key] = (err, tol)
                if not err <= tol:
                    result.failure = {
                        "seed": seed,
                        "case": k,
                        "check": name,
                        "measure": measure,
                        "error": err,
                        "tolerance": tol,
                        "inputs": inputs,
                    }
                    return result
    return result
