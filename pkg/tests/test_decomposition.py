import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import exact_mean, normal_equations_fit
from regdecomp.decomposition import (
    ContextData,
    Convention,
    SchemaMismatchError,
    decompose_mean_change,
    per_predictor_breakdown,
)
from regdecomp.regression import DesignMatrix, FrequencyVector


def make_context(seed, m=6, k=2, shift=0.0, label=""):
    rng = np.random.default_rng(seed)
    P = rng.normal(shift, 1.0, size=(m, k))
    z = 1.0 + P @ rng.normal(size=k) + 0.3 * rng.normal(size=m)
    q = FrequencyVector(rng.dirichlet(np.ones(m)))
    return ContextData(DesignMatrix.with_intercept(P, [f"x{i}" for i in range(1, k + 1)]), z, q, label)


def rel(a, b, *scale):
    return abs(a - b) / max([1.0] + [abs(s) for s in scale])


def test_identical_contexts_give_zero():
    ctx = make_context(1, m=10)
    for conv in Convention:
        r = decompose_mean_change(ctx, ctx, conv)
        assert r.total_change == 0.0
        assert all(t == 0.0 for t in r.terms)


def test_exact_linear_outcome_has_no_coefficient_change():
    rng = np.random.default_rng(3)
    X = DesignMatrix.with_intercept(rng.normal(size=(12, 2)))
    z = X.values @ np.array([2.0, -1.0, 0.5])
    a = ContextData(X, z, FrequencyVector(rng.dirichlet(np.ones(12))))
    b = ContextData(X, z, FrequencyVector(rng.dirichlet(np.ones(12))))
    r = decompose_mean_change(a, b)
    assert abs(r.coefficient_change_term) <= 1e-13
    dx = r.changed_means - r.initial_means
    assert r.total_change == pytest.approx(float(np.dot(r.initial_fit.coefficients, dx)), abs=1e-13)


def test_six_entity_pair_against_two_fit_oracle():
    a = make_context(10, m=6, k=2)
    c = make_context(11, m=6, k=2, shift=0.7)
    r = decompose_mean_change(a, c)

    direct = float(exact_mean(c.outcome, c.frequencies.weights) - exact_mean(a.outcome, a.frequencies.weights))
    assert rel(r.total_change, direct, direct) <= 1e-10

    with mpmath.workdps(40):
        b = normal_equations_fit(a.design.values, a.outcome, a.frequencies.weights)
        b2 = normal_equations_fit(c.design.values, c.outcome, c.frequencies.weights)
        xbar = [mpmath.fsum(mpmath.mpf(qj) * mpmath.mpf(x) for qj, x in zip(a.frequencies.weights, col))
                for col in a.design.values.T]
        xbar2 = [mpmath.fsum(mpmath.mpf(qj) * mpmath.mpf(x) for qj, x in zip(c.frequencies.weights, col))
                 for col in c.design.values.T]
        fixed = float(mpmath.fsum(bi * (x2 - x1) for bi, x1, x2 in zip(b, xbar, xbar2)))
        change = float(mpmath.fsum(x2 * (bj - bi) for bi, bj, x2 in zip(b, b2, xbar2)))
    assert rel(r.coefficients_fixed_term, fixed, direct) <= 1e-10
    assert rel(r.coefficient_change_term, change, direct) <= 1e-10


def test_conventions_share_total():
    a = make_context(20, m=30, k=3)
    c = make_context(21, m=25, k=3, shift=1.0)
    reports = {conv: decompose_mean_change(a, c, conv) for conv in Convention}
    totals = {r.total_change for r in reports.values()}
    assert len(totals) == 1
    assert reports[Convention.PAPER].coefficients_fixed_term != reports[Convention.CHANGED_REF].coefficients_fixed_term
    three = reports[Convention.THREEFOLD]
    dx = three.changed_means - three.initial_means
    db = three.changed_fit.coefficients - three.initial_fit.coefficients
    assert three.interaction_term == pytest.approx(math.fsum((dx * db).tolist()), abs=1e-12)
    for r in reports.values():
        assert r.relative_closure_error <= 1e-10


def test_convention_from_string():
    a, c = make_context(1, m=8), make_context(2, m=8)
    assert decompose_mean_change(a, c, "changed-ref").convention is Convention.CHANGED_REF
    with pytest.raises(ValueError):
        decompose_mean_change(a, c, "bogus")


def test_schema_mismatch():
    a = make_context(1, m=8, k=2)
    c = make_context(2, m=8, k=3)
    with pytest.raises(SchemaMismatchError):
        decompose_mean_change(a, c)


def test_context_row_counts_checked():
    X = DesignMatrix.with_intercept(np.arange(4.0))
    with pytest.raises(ValueError, match="design rows"):
        ContextData(X, np.zeros(3), FrequencyVector([0.25] * 4))


def test_single_predictor_breakdown():
    a = make_context(30, m=10, k=1)
    c = make_context(31, m=10, k=1, shift=0.5)
    r = decompose_mean_change(a, c)
    parts = per_predictor_breakdown(r)
    assert parts[0].name == "intercept"
    assert parts[0].coefficients_fixed == 0.0
    db0 = r.changed_fit.coefficients[0] - r.initial_fit.coefficients[0]
    assert parts[0].coefficient_change == db0
    assert parts[1].coefficients_fixed == pytest.approx(r.coefficients_fixed_term, abs=1e-15)


@pytest.mark.parametrize("conv", list(Convention))
def test_breakdown_sums_to_terms(conv):
    a = make_context(40, m=40, k=4)
    c = make_context(41, m=35, k=4, shift=-0.8)
    r = decompose_mean_change(a, c, conv)
    parts = per_predictor_breakdown(r)
    assert math.fsum(p.coefficients_fixed for p in parts) == pytest.approx(r.coefficients_fixed_term, abs=1e-12)
    assert math.fsum(p.coefficient_change for p in parts) == pytest.approx(r.coefficient_change_term, abs=1e-12)
    if conv is Convention.THREEFOLD:
        assert math.fsum(p.interaction for p in parts) == pytest.approx(r.interaction_term, abs=1e-12)
    else:
        assert all(p.interaction is None for p in parts)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 5), st.sampled_from(list(Convention)))
def test_closure_and_swap(seed, k, conv):
    rng = np.random.default_rng(seed)
    a = make_context(seed, m=int(rng.integers(k + 3, 50)), k=k)
    c = make_context(seed + 1, m=int(rng.integers(k + 3, 50)), k=k, shift=float(rng.normal()))
    r = decompose_mean_change(a, c, conv)
    s = decompose_mean_change(c, a, conv)
    assert r.relative_closure_error <= 1e-10
    assert s.total_change == -r.total_change
