import math

import numpy as np
import pytest

from src.config import settings
from src.core.adversary import (
    distance_transform, exists_disagreement_in_ball, exists_label_change_in_ball, min_flips_batch,
    min_flips_conj_pair, min_flips_to_satisfy,
)
from src.core.concepts import (
    Constant, Dictator, MajorityEncoded, MonotoneConjunction, Parity, TruthTable, evaluate,
)
from src.core.hypercube import BallSpec, Point, enumerate_ball, hamming_distance
from src.errors import IntractableError, InvalidParameterError


def brute_min_flips(h, c, x, kind="exact_in_ball"):
    best = math.inf
    for z in enumerate_ball(BallSpec(x, x.dim)):
        reference = evaluate(c, z) if kind == "exact_in_ball" else evaluate(c, x)
        if evaluate(h, z) != reference:
            best = min(best, hamming_distance(x, z))
    return best


def conj(n, *indices):
    return MonotoneConjunction(n, frozenset(indices))


def test_identical_concepts_never_disagree():
    c = conj(4, 0, 2)
    result = exists_disagreement_in_ball(c, c, Point.from_string("0101"), 4)
    assert not result.feasible
    assert math.isinf(result.min_flips)
    assert result.witness is None


def test_dictators_disagree_after_one_flip():
    result = exists_disagreement_in_ball(Dictator(2, 0), Dictator(2, 1), Point.from_string("11"), 1)
    assert result.feasible
    assert result.min_flips == 1
    assert str(result.witness) in ("01", "10")


def test_conj_pair_closed_form():
    assert math.isinf(min_flips_conj_pair(conj(3, 0, 1), conj(3, 0, 1), Point.from_string("000")))
    assert min_flips_conj_pair(conj(2, 0), conj(2, 1), Point.from_string("11")) == 1
    assert min_flips_conj_pair(conj(4, 0, 1), conj(4, 2, 3), Point.from_string("0000")) == 2


def test_conj_pair_matches_brute_force_exhaustively(rng):
    n = 6
    for _ in range(30):
        c1 = MonotoneConjunction(n, frozenset(np.flatnonzero(rng.random(n) < 0.4).tolist()))
        c2 = MonotoneConjunction(n, frozenset(np.flatnonzero(rng.random(n) < 0.4).tolist()))
        for code in range(1 << n):
            x = Point(n, code)
            assert min_flips_conj_pair(c1, c2, x) == brute_min_flips(c1, c2, x)


def test_min_flips_to_satisfy():
    assert min_flips_to_satisfy(conj(5, 0, 1, 2), Point.ones(5)) == 0
    assert min_flips_to_satisfy(conj(5, 0, 1, 2), Point.zeros(5)) == 3
    assert min_flips_to_satisfy(conj(5, 1, 4), Point.from_string("01000")) == 1


def test_parity_changes_label_after_one_flip():
    f = Parity(3, frozenset({0, 2}))
    for code in range(8):
        assert exists_label_change_in_ball(f, f, Point(3, code), 1).feasible


def test_constant_never_changes_label():
    one = Constant(4, 1)
    for code in range(16):
        assert not exists_label_change_in_ball(one, one, Point(4, code), 4).feasible


def test_label_change_witness_is_certified():
    h, c = conj(5, 0, 1), conj(5, 0)
    x = Point.from_string("11000")
    result = exists_label_change_in_ball(h, c, x, 2)
    assert result.feasible
    assert result.min_flips == 1
    assert evaluate(h, result.witness) != evaluate(c, x)


@pytest.mark.parametrize("kind", ["exact_in_ball", "constant_in_ball"])
def test_batch_matches_brute_force_on_tables(rng, kind):
    n = 6
    h = TruthTable.from_array(rng.random(1 << n) < 0.2, n)
    c = Parity(n, frozenset({1, 4}))
    X = rng.random((20, n)) < 0.5
    flips = min_flips_batch(h, c, X, kind)
    for row, value in zip(X, flips):
        assert value == brute_min_flips(h, c, Point.from_array(row), kind)


def test_majority_fast_path_counts_block_flips():
    h = MajorityEncoded(Dictator(2, 0), 1)
    c = MajorityEncoded(Constant(2, 1), 1)
    z = Point.from_string("0000001")
    flips = min_flips_batch(h, c, z.to_array()[None, :], "exact_in_ball")
    assert flips[0] == 0
    z = Point.from_string("1110001")
    flips = min_flips_batch(h, c, z.to_array()[None, :], "exact_in_ball")
    assert flips[0] == 2


def test_brute_force_respects_intractable_limit():
    settings.update(intractable_limit=10)
    h = Parity(40, frozenset({0, 1}))
    c = Parity(40, frozenset({0, 2}))
    with pytest.raises(IntractableError):
        exists_disagreement_in_ball(h, c, Point.zeros(40), 3)


def test_large_conjunctions_use_closed_form():
    n = 2000
    c1, c2 = conj(n, *range(10)), conj(n, *range(10, 20))
    result = exists_disagreement_in_ball(c1, c2, Point.zeros(n), 10)
    assert result.feasible
    assert result.min_flips == 10
    assert result.searched_radius == n


def test_unknown_kind_is_rejected():
    with pytest.raises(InvalidParameterError):
        min_flips_batch(conj(3, 0), conj(3, 1), np.zeros((1, 3), dtype=bool), "sideways")


def test_distance_transform():
    target = np.zeros(8, dtype=bool)
    target[0] = True
    distances = distance_transform(target, 3)
    assert distances.tolist() == [0, 1, 1, 2, 1, 2, 2, 3]
