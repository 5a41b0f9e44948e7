import math

import numpy as np
import pytest

from src.core.concepts import Dictator, MonotoneConjunction, parse_concept, phi_encode
from src.core.distributions import (
    Coupled, Induced, Product, Table, Uniform, build_hiding_distribution, conditional,
    distribution_from_config, fix_bits, log_lipschitz_constant, marginal, parse_distribution, pattern_probability,
    random_log_lipschitz_table, total_variation, verify_log_lipschitz,
)
from src.core.hypercube import Point
from src.errors import InvalidParameterError, TrivialPairError, ZeroMassError


def test_uniform_pmf_and_table():
    D = Uniform(3)
    assert D.pmf(Point.from_string("101")) == 0.125
    assert np.allclose(D.pmf_table(), 0.125)


def test_product_pmf():
    D = Product((0.75, 0.5, 0.25))
    x = Point.from_string("110")
    assert math.isclose(D.pmf(x), 0.75 * 0.5 * 0.75)
    table = D.pmf_table()
    assert math.isclose(table[x.bits], D.pmf(x))
    assert math.isclose(math.fsum(table), 1.0)


def test_table_validates_mass():
    with pytest.raises(InvalidParameterError):
        Table(2, [0.5, 0.5, 0.5, 0.0])
    with pytest.raises(InvalidParameterError):
        Table(2, [1.5, -0.5, 0.0, 0.0])
    D = Table.from_mapping(2, {"10": 0.25, "11": 0.75})
    assert D.pmf(Point.from_string("10")) == 0.25
    assert D.pmf(Point.from_string("01")) == 0.0


def test_table_sampler_never_draws_zero_mass(rng):
    D = Table.from_mapping(3, {"100": 0.5, "011": 0.5})
    samples = D.sample_matrix(rng, 2000)
    rows = {"".join("1" if bit else "0" for bit in row) for row in samples}
    assert rows == {"100", "011"}


def test_coupled_first_pair_equal(rng):
    D = Coupled.first_pair_equal(4)
    assert D.pmf(Point.from_string("1101")) == 0.125
    assert D.pmf(Point.from_string("1001")) == 0.0
    samples = D.sample_matrix(rng, 1000)
    assert np.array_equal(samples[:, 0], samples[:, 1])
    assert math.isclose(math.fsum(D.pmf_table()), 1.0)


def test_samplers_are_seed_deterministic():
    D = Product((0.3, 0.6, 0.9))
    first = D.sample_matrix(np.random.default_rng(5), 100)
    second = D.sample_matrix(np.random.default_rng(5), 100)
    assert np.array_equal(first, second)


def test_sampler_matches_pmf(rng):
    D = random_log_lipschitz_table(4, 3.0, rng)
    assert total_variation(D, D.sample_matrix(rng, 100000)) < 0.02


def test_log_lipschitz_constants():
    assert log_lipschitz_constant(Uniform(5)) == 1.0
    assert math.isclose(log_lipschitz_constant(Product((0.75, 0.5))), 3.0)
    assert math.isinf(log_lipschitz_constant(Coupled.first_pair_equal(3)))
    assert verify_log_lipschitz(Product((0.75,) * 4), 3.0)
    assert not verify_log_lipschitz(Product((0.8,) * 4), 3.0)
    with pytest.raises(InvalidParameterError):
        verify_log_lipschitz(Uniform(3), 0.5)


def test_closed_form_matches_edge_scan():
    D = Product((0.2, 0.55, 0.7))
    assert math.isclose(log_lipschitz_constant(D), log_lipschitz_constant(Table(3, D.pmf_table())))


def test_random_tables_are_log_lipschitz(rng):
    for alpha in (1.5, 2.0, 5.0):
        assert verify_log_lipschitz(random_log_lipschitz_table(5, alpha, rng), alpha)


def test_marginal_keeps_position_order():
    D = Product((0.1, 0.2, 0.3, 0.4))
    M = marginal(D, [1])
    assert M.dim == 3
    assert math.isclose(M.pmf(Point.from_string("100")), 0.1 * 0.7 * 0.6)
    assert math.isclose(M.pmf(Point.from_string("011")), 0.9 * 0.3 * 0.4)


def test_conditional_on_fixed_bits():
    D = Coupled.first_pair_equal(3)
    positions, predicate = fix_bits({0: 1})
    C = conditional(D, positions, predicate)
    assert C.dim == 2
    assert math.isclose(C.pmf(Point.from_string("10")), 0.5)
    assert C.pmf(Point.from_string("00")) == 0.0
    with pytest.raises(ZeroMassError):
        conditional(D, [0, 1], lambda bits: bits == (1, 0))


def test_pattern_probability():
    D = Product((0.75, 0.5, 0.25))
    assert math.isclose(pattern_probability(D, {0: 1, 2: 0}), 0.75 * 0.75)
    assert math.isclose(pattern_probability(D, {}), 1.0)
    with pytest.raises(InvalidParameterError):
        pattern_probability(D, {3: 1})
    with pytest.raises(InvalidParameterError):
        pattern_probability(D, {0: 2})


@pytest.mark.parametrize("alpha", [1.0, 2.0, 3.0])
def test_bits_of_log_lipschitz_tables_are_balanced(alpha, rng):
    for n in (2, 6, 10):
        D = random_log_lipschitz_table(n, alpha, rng)
        for i in range(n):
            for b in (0, 1):
                mass = pattern_probability(D, {i: b})
                assert 1.0 / (1.0 + alpha) - 1e-12 <= mass <= alpha / (1.0 + alpha) + 1e-12


@pytest.mark.parametrize("alpha", [1.0, 2.0, 3.0])
def test_marginals_stay_log_lipschitz(alpha, rng):
    for _ in range(10):
        n = int(rng.integers(2, 11))
        D = random_log_lipschitz_table(n, alpha, rng)
        S = rng.choice(n, size=int(rng.integers(1, n)), replace=False).tolist()
        assert verify_log_lipschitz(marginal(D, S), alpha)


@pytest.mark.parametrize("alpha", [1.0, 2.0, 3.0])
def test_conditionals_then_marginals_stay_log_lipschitz(alpha, rng):
    for _ in range(10):
        n = int(rng.integers(3, 11))
        D = random_log_lipschitz_table(n, alpha, rng)
        fixed = rng.choice(n, size=int(rng.integers(1, n - 1)), replace=False)
        assignment = {int(i): int(rng.integers(2)) for i in fixed}
        C = conditional(D, *fix_bits(assignment))
        assert verify_log_lipschitz(C, alpha)
        assert verify_log_lipschitz(marginal(C, [0]), alpha)


@pytest.mark.parametrize("alpha", [1.0, 2.0, 3.0])
def test_fixed_patterns_have_mass_floor(alpha, rng):
    for _ in range(10):
        n = int(rng.integers(2, 11))
        D = random_log_lipschitz_table(n, alpha, rng)
        size = int(rng.integers(1, n + 1))
        assignment = {int(i): int(rng.integers(2)) for i in rng.choice(n, size=size, replace=False)}
        assert pattern_probability(D, assignment) >= (1.0 / (1.0 + alpha)) ** size - 1e-12


def test_product_patterns_between_floor_and_ceiling():
    alpha = 3.0
    D = Product((0.25, 0.75, 0.5, 0.3))
    assert verify_log_lipschitz(D, alpha)
    for assignment in ({0: 0}, {0: 1, 1: 0}, {0: 0, 1: 1, 3: 0}):
        mass = pattern_probability(D, assignment)
        assert 0.25 ** len(assignment) - 1e-12 <= mass <= 0.75 ** len(assignment) + 1e-12
    assert math.isclose(pattern_probability(D, {0: 0, 1: 1}), 0.75 ** 2)


def test_log_lipschitz_facts_catch_a_bad_table():
    # Pr[x_0 = 1] = 0.9 breaks the per-bit ceiling for alpha = 2
    D = Product((0.9, 0.5))
    assert pattern_probability(D, {0: 1}) > 2.0 / 3.0
    assert not verify_log_lipschitz(D, 2.0)


def test_hiding_distribution_for_separate_dictators():
    c1, c2 = MonotoneConjunction(4, frozenset({0})), MonotoneConjunction(4, frozenset({1}))
    D, z = build_hiding_distribution(c1, c2, 0.1)
    assert z == Point.from_string("0000")
    assert D.p == (0.1, 0.1, 0.5, 0.5)


def test_hiding_distribution_rejects_trivial_pairs():
    c = MonotoneConjunction(3, frozenset({0, 1}))
    with pytest.raises(TrivialPairError):
        build_hiding_distribution(c, c, 0.1)


def test_induced_distribution_moves_mass_to_encoded_points():
    D = Product((0.25, 0.5))
    c = Dictator(2, 0)
    D_prime = Induced(D, c, 1)
    assert D_prime.dim == 7
    x = Point.from_string("10")
    assert D_prime.pmf(phi_encode(x, 1, 1)) == D.pmf(x)
    assert D_prime.pmf(phi_encode(x, 0, 1)) == 0.0
    assert math.isclose(math.fsum(D_prime.pmf_table()), 1.0)
    assert not verify_log_lipschitz(D_prime, 10.0)


@pytest.mark.parametrize("text, dim", [
    ("uniform:4", 4), ("product:0.75,0.75", 2), ("coupled:5", 5),
    ('{"kind": "product", "p": [0.5, 0.5, 0.5]}', 3),
])
def test_parse_distribution(text, dim):
    assert parse_distribution(text).dim == dim


def test_parse_distribution_rejects_garbage():
    for text in ("uniform:x", "normal:3", "product:1.5", '{"kind": "mystery"}'):
        with pytest.raises(InvalidParameterError):
            parse_distribution(text)


def test_distribution_from_config_round_trips_kinds():
    for D in (Uniform(3), Product((0.5, 0.25)), Coupled.first_pair_equal(3),
              Table.from_mapping(2, {"01": 1.0})):
        rebuilt = distribution_from_config(D.to_config())
        assert np.allclose(rebuilt.pmf_table(), D.pmf_table())
    induced = Induced(Uniform(2), parse_concept("conj:0", 2), 1)
    assert np.allclose(distribution_from_config(induced.to_config()).pmf_table(), induced.pmf_table())
