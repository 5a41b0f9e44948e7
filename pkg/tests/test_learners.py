import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.core.concepts import Constant, MonotoneConjunction, evaluate
from src.core.distributions import Uniform
from src.core.hypercube import Point
from src.core.learners import (
    LabeledSample, LearnParams, agreement_probability, short_target_sample_size, dump_sample,
    exact_learn_membership, get_learner, learn_monotone_conjunction, max_agreement_sample_size,
    load_sample, pac_sample_size_finite_class, robust_sample_size,
)
from src.errors import DimensionMismatchError, InvalidParameterError


def sample_of(*rows):
    points = [Point.from_string(text) for text, _ in rows]
    return LabeledSample.from_points(points, [label for _, label in rows])


def test_elimination_without_eliminations():
    assert learn_monotone_conjunction(sample_of(("111", 1))).vars == {0, 1, 2}


def test_elimination_drops_zero_positions():
    assert learn_monotone_conjunction(sample_of(("101", 1))).vars == {0, 2}
    assert learn_monotone_conjunction(sample_of(("101", 1), ("110", 1), ("000", 0))).vars == {0}


def test_elimination_on_negatives_only_returns_full_conjunction():
    h = learn_monotone_conjunction(sample_of(("000", 0), ("010", 0)))
    assert h.vars == {0, 1, 2}


def test_elimination_is_consistent_and_contains_target(rng):
    target = MonotoneConjunction(10, frozenset({1, 4, 7}))
    for _ in range(20):
        S = LabeledSample.draw(Uniform(10), target, 40, rng)
        h = learn_monotone_conjunction(S)
        assert target.vars <= h.vars
        assert LabeledSample(S.matrix, S.labels, h).is_realizable()
        assert learn_monotone_conjunction(S.shuffled(rng)) == h


def test_sample_validation():
    with pytest.raises(InvalidParameterError):
        LabeledSample(np.zeros((2, 3), dtype=bool), np.zeros(3, dtype=bool))
    with pytest.raises(DimensionMismatchError):
        LabeledSample(np.zeros((2, 3), dtype=bool), np.zeros(2, dtype=bool), Constant(4, 0))
    with pytest.raises(InvalidParameterError):
        LabeledSample.from_points([], [])
    assert LabeledSample.from_points([], [], dim=4).size == 0


def test_membership_learner_queries():
    target = MonotoneConjunction(3, frozenset({0, 2}))
    queries = []

    def oracle(x):
        queries.append(str(x))
        return evaluate(target, x)

    assert exact_learn_membership(oracle, 3) == target
    assert queries == ["111", "011", "101", "110"]


def test_membership_learner_on_empty_conjunction():
    assert exact_learn_membership(lambda x: 1, 5).vars == frozenset()
    with pytest.raises(InvalidParameterError):
        exact_learn_membership(lambda x: 0, 5)


def test_short_target_sample_size():
    assert short_target_sample_size(16, 0.1, 0.5, 3) == 82


def test_robust_sample_size_threshold_length():
    result = robust_sample_size(LearnParams(epsilon=0.25, delta=0.1, n=32, alpha=1.0))
    assert result.l0 == 45
    assert result.eta == 0.5
    assert result.m == math.ceil((math.log(32) - math.log(0.1)) * 2**46)
    assert not result.practical


def test_robust_sample_size_is_monotone():
    base = robust_sample_size(LearnParams(epsilon=0.25, delta=0.1, n=32)).m
    assert robust_sample_size(LearnParams(epsilon=0.25, delta=0.1, n=64)).m >= base
    assert robust_sample_size(LearnParams(epsilon=0.25, delta=0.05, n=32)).m >= base
    assert robust_sample_size(LearnParams(epsilon=0.1, delta=0.1, n=32)).m >= base
    assert robust_sample_size(LearnParams(epsilon=0.25, delta=0.1, n=32, alpha=2.0)).m >= base


def test_learn_params_validation():
    with pytest.raises(ValidationError):
        LearnParams(epsilon=0.6, delta=0.1, n=10)
    with pytest.raises(ValidationError):
        LearnParams(epsilon=0.1, delta=0.1, n=10, alpha=0.5)
    assert LearnParams(epsilon=0.1, delta=0.1, n=10, alpha=3.0).eta == 0.25


@pytest.mark.parametrize("l, expected", [(1, 0), (16, 22712)])
def test_max_agreement_sample_size(l, expected):
    assert max_agreement_sample_size(l) == expected


def test_max_agreement_defining_property():
    for l in (2, 5, 10, 20, 30):
        m = max_agreement_sample_size(l)
        assert agreement_probability(l, m) >= 0.5
        assert agreement_probability(l, m + 1) < 0.5


def test_max_agreement_sample_size_for_long_conjunctions():
    # m is about ln(2) * 2^(l-1), so its top bits are those of ln(2) * 2^9 = 354.9
    assert max_agreement_sample_size(1200) >> 1190 == 354
    assert max_agreement_sample_size(5000) >> 4990 == 354
    assert abs(max_agreement_sample_size(31) - 2 * max_agreement_sample_size(30)) <= 2
    with pytest.raises(InvalidParameterError):
        max_agreement_sample_size(0)


def test_agreement_probability():
    assert agreement_probability(16, 0) == 1.0
    assert math.isclose(agreement_probability(16, 100), (1 - 2**-16) ** 200)


def test_pac_sample_size_finite_class():
    assert pac_sample_size_finite_class(1, 1.0, math.exp(-1)) == 1
    assert pac_sample_size_finite_class(2**16, 0.1, 0.05) == 141


def test_get_learner():
    S = sample_of(("10", 1), ("01", 0))
    assert get_learner("elimination")(S).vars == {0}
    assert get_learner("const1")(S) == Constant(2, 1)
    target = MonotoneConjunction(2, frozenset({1}))
    assert get_learner("membership", target)(S) == target
    with pytest.raises(InvalidParameterError):
        get_learner("membership")
    with pytest.raises(InvalidParameterError):
        get_learner("oracle")


def test_sample_files(tmp_path, rng):
    target = MonotoneConjunction(6, frozenset({0, 3}))
    S = LabeledSample.draw(Uniform(6), target, 25, rng)
    path = tmp_path / "sample.txt"
    dump_sample(S, path)
    loaded = load_sample(path, target)
    assert np.array_equal(loaded.matrix, S.matrix)
    assert np.array_equal(loaded.labels, S.labels)
    assert loaded.is_realizable()


def test_sample_file_parsing(tmp_path):
    path = tmp_path / "sample.txt"
    path.write_text("# comment\n\n101 1\n001 0\n")
    S = load_sample(path)
    assert S.size == 2
    assert S.labels.tolist() == [True, False]
    path.write_text("101 1\n01 0\n")
    with pytest.raises(DimensionMismatchError):
        load_sample(path)
    path.write_text("101 2\n")
    with pytest.raises(InvalidParameterError):
        load_sample(path)
