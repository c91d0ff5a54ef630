import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import exact_dot, neumaier_dot
from regdecomp.price import (
    PairedPopulation,
    PriceForm,
    ZeroMeanFitnessError,
    normalize_fitness,
    price_covariance_form,
    price_partition,
)
from regdecomp.regression import FrequencyVector


def random_population(seed, m=8):
    rng = np.random.default_rng(seed)
    q = rng.dirichlet(np.ones(m))
    w = rng.uniform(0.1, 2.0, size=m)
    z = rng.normal(size=m)
    return PairedPopulation.from_fitness(q, w, z, z + 0.5 * rng.normal(size=m))


def test_static_population():
    q = FrequencyVector([0.2, 0.3, 0.5])
    z = [1.0, 4.0, -2.0]
    part = price_partition(PairedPopulation(q, q, z, z))
    assert part.selection_term == part.transmission_term == part.total == 0.0


def test_pure_selection():
    q, q2 = [0.2, 0.3, 0.5], [0.4, 0.4, 0.2]
    z = [1.0, 4.0, -2.0]
    part = price_partition(PairedPopulation(q, q2, z, z))
    assert part.transmission_term == 0.0
    assert part.total == pytest.approx(float(exact_dot(np.subtract(q2, q), z)), abs=1e-15)


def test_random_total_is_direct_difference():
    pop = random_population(1)
    part = price_partition(pop)
    q, q2 = pop.frequencies_initial.weights, pop.frequencies_changed.weights
    direct = float(exact_dot(q2, pop.values_changed) - exact_dot(q, pop.values_initial))
    assert abs(part.total - direct) <= 1e-12
    assert abs(part.selection_term + part.transmission_term - direct) <= 1e-12


def test_neutral_fitness():
    rng = np.random.default_rng(2)
    q = rng.dirichlet(np.ones(5))
    z = rng.normal(size=5)
    dz = rng.normal(size=5)
    pop = PairedPopulation.from_fitness(q, np.ones(5), z, z + dz)
    cov = price_covariance_form(pop)
    assert abs(cov.selection_term) <= 1e-15
    assert cov.total == pytest.approx(neumaier_dot(q, dz), abs=1e-14)


def test_fitness_as_trait_gives_variance():
    rng = np.random.default_rng(3)
    q = rng.dirichlet(np.ones(6))
    w = normalize_fitness(rng.uniform(0.5, 1.5, size=6), q)
    pop = PairedPopulation.from_fitness(q, w, w, w)
    cov = price_covariance_form(pop)
    var = neumaier_dot(q, (w - 1.0) ** 2)
    assert cov.total == pytest.approx(var, abs=1e-14)
    assert cov.selection_term == pytest.approx(var, abs=1e-14)
    assert cov.transmission_term == 0.0


def test_forms_agree_term_by_term():
    pop = random_population(4)
    a, b = price_partition(pop), price_covariance_form(pop)
    assert b.form is PriceForm.COVARIANCE_EXPECTATION
    assert abs(a.selection_term - b.selection_term) <= 1e-12
    assert abs(a.transmission_term - b.transmission_term) <= 1e-12
    assert a.total == b.total


def test_normalize_fitness():
    w = np.array([0.5, 1.5])
    np.testing.assert_array_equal(normalize_fitness(w, [0.5, 0.5]), w)
    np.testing.assert_array_equal(normalize_fitness([2.0, 2.0], [0.5, 0.5]), [1.0, 1.0])
    with pytest.raises(ZeroMeanFitnessError):
        normalize_fitness([0.0, 0.0], [0.5, 0.5])
    with pytest.raises(ValueError, match="nonnegative"):
        normalize_fitness([-1.0, 3.0], [0.5, 0.5])


def test_normalized_mean_is_one():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        q = rng.dirichlet(np.ones(12))
        w = normalize_fitness(rng.uniform(0, 5, size=12), q)
        assert abs(float(exact_dot(q, w)) - 1.0) <= 1e-15


def test_covariance_form_needs_fitness():
    q = [0.5, 0.5]
    with pytest.raises(ValueError, match="fitness"):
        price_covariance_form(PairedPopulation(q, q, [1.0, 2.0], [1.0, 2.0]))


def test_inconsistent_fitness_rejected():
    with pytest.raises(ValueError, match="q\\*w/wbar"):
        PairedPopulation([0.5, 0.5], [0.5, 0.5], [1.0, 2.0], [1.0, 2.0], fitness=[2.0, 1.0])


def test_length_mismatch():
    with pytest.raises(ValueError, match="length mismatch"):
        PairedPopulation([0.5, 0.5], [0.5, 0.5], [1.0, 2.0, 3.0], [1.0, 2.0])


def test_extinct_entities_allowed():
    q = [0.25, 0.25, 0.5]
    pop = PairedPopulation.from_fitness(q, [2.0, 0.0, 1.0], [1.0, 2.0, 3.0], [1.5, 999.0, 3.0])
    assert pop.extinct.tolist() == [1]
    part = price_partition(pop)
    assert part.selection_term + part.transmission_term == pytest.approx(part.total, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 30))
def test_direct_total_property(seed, m):
    rng = np.random.default_rng(seed)
    q = rng.dirichlet(np.ones(m))
    q2 = rng.dirichlet(np.ones(m))
    z, z2 = rng.normal(size=(2, m))
    part = price_partition(PairedPopulation(q, q2, z, z2))
    scale = max(1.0, abs(part.selection_term), abs(part.transmission_term))
    assert part.relative_closure_error <= 1e-12
    assert abs(part.total - float(exact_dot(q2, z2) - exact_dot(q, z))) <= 1e-12 * scale


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([-3.0, 0.5, 7.0, 1e3]))
def test_scale_invariance(seed, c):
    pop = random_population(seed)
    scaled = PairedPopulation(
        pop.frequencies_initial, pop.frequencies_changed, c * pop.values_initial, c * pop.values_changed
    )
    a, b = price_partition(pop), price_partition(scaled)
    for name in ("selection_term", "transmission_term", "total"):
        assert getattr(b, name) == pytest.approx(c * getattr(a, name), rel=1e-12, abs=1e-12 * abs(c))
