import numpy as np
import pytest

from src.core.concepts import (
    Constant, Dictator, MajorityEncoded, MonotoneConjunction, Parity, Pullback, TruthTable,
    as_conjunction, concepts_equal_on_cube, encoded_dim, evaluate, evaluate_matrix, format_concept,
    maj_decode, parse_concept, phi_encode, random_concept, truth_table,
)
from src.core.hypercube import Point, cube_matrix
from src.errors import DimensionMismatchError, InvalidParameterError


def test_conjunction_evaluation():
    c = MonotoneConjunction(4, frozenset({0, 2}))
    assert evaluate(c, Point.from_string("1010")) == 1
    assert evaluate(c, Point.from_string("1110")) == 1
    assert evaluate(c, Point.from_string("0010")) == 0
    assert evaluate(MonotoneConjunction(4), Point.zeros(4)) == 1


def test_dictator_parity_constant():
    x = Point.from_string("0110")
    assert evaluate(Dictator(4, 1), x) == 1
    assert evaluate(Dictator(4, 0), x) == 0
    assert evaluate(Parity(4, frozenset({1, 2})), x) == 0
    assert evaluate(Parity(4, frozenset({1, 2}), 1), x) == 1
    assert evaluate(Constant(4, 0), x) == 0


def test_evaluate_checks_dimension():
    with pytest.raises(DimensionMismatchError):
        evaluate(Dictator(3, 0), Point.zeros(4))
    with pytest.raises(InvalidParameterError):
        MonotoneConjunction(3, frozenset({3}))


def _assert_parity_sensitivity(f, cube, values):
    for i in range(f.dim):
        flipped = cube.copy()
        flipped[:, i] = ~flipped[:, i]
        changed = evaluate_matrix(f, flipped) != values
        assert changed.all() if i in f.index_set else not changed.any()


@pytest.mark.parametrize("n", range(1, 11))
def test_parity_flips_on_every_relevant_position(n, rng):
    cube = cube_matrix(n)
    if n <= 6:
        index_sets = [frozenset(i for i in range(n) if mask >> i & 1) for mask in range(1, 1 << n)]
    else:
        sizes = rng.integers(1, n + 1, size=8)
        index_sets = [frozenset(rng.choice(n, size=int(size), replace=False).tolist()) for size in sizes]
    for index_set in index_sets:
        for offset in (0, 1):
            f = Parity(n, index_set, offset)
            _assert_parity_sensitivity(f, cube, evaluate_matrix(f, cube))


def test_concepts_equal_on_cube_refuses_large_dimensions():
    assert concepts_equal_on_cube(MonotoneConjunction(10, frozenset({0})), Dictator(10, 0))
    with pytest.raises(InvalidParameterError):
        concepts_equal_on_cube(MonotoneConjunction(25, frozenset({0})), Dictator(25, 0))
    with pytest.raises(DimensionMismatchError):
        concepts_equal_on_cube(Dictator(3, 0), Dictator(4, 0))


def test_batched_evaluation_matches_pointwise(rng):
    matrix = cube_matrix(5)
    for _ in range(20):
        c = random_concept(5, rng)
        expected = [evaluate(c, Point(5, code)) for code in range(32)]
        assert evaluate_matrix(c, matrix).astype(int).tolist() == expected
        assert truth_table(c).astype(int).tolist() == expected


@pytest.mark.parametrize("text", [
    "conj:0,2", "conj:", "dict:3", "parity:0,1", "parity:0,1;b=1", "const:0",
])
def test_text_format(text):
    assert format_concept(parse_concept(text, 4)) == text


def test_text_format_of_encoded_concepts():
    encoded = parse_concept("majenc(k=1):conj:0,1", encoded_dim(2, 1))
    assert isinstance(encoded, MajorityEncoded)
    assert encoded.inner == MonotoneConjunction(2, frozenset({0, 1}))
    pullback = parse_concept("pullback(k=1,b=0):dict:6", 2)
    assert isinstance(pullback, Pullback)
    assert format_concept(pullback) == "pullback(k=1,b=0):dict:6"


def test_parse_rejects_malformed_text():
    for text in ("conj:9", "dict:x", "nonsense:1", "majenc(k=2):conj:0"):
        with pytest.raises(InvalidParameterError):
            parse_concept(text, 4)


def test_truth_table_round_trips_through_text():
    values = np.array([0, 1, 1, 0, 1, 0, 0, 1], dtype=bool)
    f = TruthTable.from_array(values, 3)
    assert concepts_equal_on_cube(parse_concept(format_concept(f), 3), Parity(3, frozenset({0, 1, 2})))


def test_truth_table_relevant_positions():
    f = TruthTable.from_array(truth_table(Dictator(4, 2)), 4)
    assert f.relevant_positions() == frozenset({2})


def test_as_conjunction():
    assert as_conjunction(Dictator(3, 1)) == MonotoneConjunction(3, frozenset({1}))
    assert as_conjunction(Constant(3, 1)) == MonotoneConjunction(3)
    assert as_conjunction(Constant(3, 0)) is None
    assert as_conjunction(Parity(3, frozenset({0}))) is None


def test_phi_encode_layout():
    z = phi_encode(Point.from_string("10"), 1, 1)
    assert z.dim == 7
    assert str(z) == "1110001"


def test_maj_decode_tolerates_k_flips_per_block():
    z = Point.from_string("1100011")
    assert str(maj_decode(z, 1, 2)) == "10"
    with pytest.raises(DimensionMismatchError):
        maj_decode(Point.zeros(6), 1, 2)


def test_majority_encoded_ignores_label_bit():
    c = MajorityEncoded(Dictator(2, 0), 1)
    for label in (0, 1):
        assert evaluate(c, phi_encode(Point.from_string("10"), label, 1)) == 1
        assert evaluate(c, phi_encode(Point.from_string("01"), label, 1)) == 0


def test_pullback_reads_outer_on_encoded_points():
    outer = Dictator(encoded_dim(3, 1), 9)
    h = Pullback(outer, 1, 0)
    assert h.dim == 3
    assert all(evaluate(h, Point(3, code)) == 0 for code in range(8))
    assert concepts_equal_on_cube(Pullback(MajorityEncoded(Dictator(3, 2), 1), 1), Dictator(3, 2))
