import numpy as np
import pytest

from src.core.hypercube import (
    BallSpec, Point, ball_flip_sets, ball_size, codes_to_matrix, cube_matrix, enumerate_ball,
    flip, flip_axis_view, hamming_distance, matrix_to_codes, matrix_to_points, points_to_matrix,
)
from src.errors import DimensionMismatchError, InvalidParameterError


def test_point_string_positions():
    x = Point.from_string("1011")
    assert x.bits == 0b1101
    assert [x[i] for i in range(4)] == [1, 0, 1, 1]
    assert str(x) == "1011"
    assert x.weight == 3


def test_point_array_conversions():
    x = Point.from_array([True, False, False, True, True])
    assert str(x) == "10011"
    assert x.to_array().tolist() == [True, False, False, True, True]
    assert Point.ones(3) == Point.from_string("111")
    assert Point.zeros(3).weight == 0


def test_point_rejects_stray_bits():
    with pytest.raises(InvalidParameterError):
        Point(3, 0b1000)
    with pytest.raises(InvalidParameterError):
        Point.from_string("10a")


def test_large_points_pack_into_integers():
    x = Point.ones(4096)
    assert x.weight == 4096
    assert hamming_distance(x, Point.zeros(4096)) == 4096


@pytest.mark.parametrize("n, rho, expected", [(4, 0, 1), (4, 1, 5), (10, 2, 56), (6, 6, 64)])
def test_ball_size(n, rho, expected):
    assert ball_size(n, rho) == expected


def test_ball_size_rejects_large_radius():
    with pytest.raises(InvalidParameterError):
        ball_size(3, 4)
    with pytest.raises(InvalidParameterError):
        BallSpec(Point.zeros(3), 4)


def test_enumerate_ball_canonical_order():
    points = [str(z) for z in enumerate_ball(BallSpec(Point.from_string("000"), 2))]
    assert points == ["000", "100", "010", "001", "110", "101", "011"]


def test_enumerate_ball_is_exhaustive_and_distinct():
    center = Point.from_string("01101")
    points = list(enumerate_ball(BallSpec(center, 2)))
    assert len(points) == ball_size(5, 2)
    assert len(set(points)) == len(points)
    assert all(hamming_distance(center, z) <= 2 for z in points)


def test_ball_flip_sets_start_radius():
    assert list(ball_flip_sets(3, 2, start_radius=2)) == [(0, 1), (0, 2), (1, 2)]


def test_hamming_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        hamming_distance(Point.zeros(3), Point.zeros(4))


def test_flip():
    assert str(flip(Point.from_string("0000"), [1, 3])) == "0101"
    with pytest.raises(InvalidParameterError):
        flip(Point.zeros(2), [2])


def test_hamming_distance_is_a_metric(rng):
    for _ in range(10000):
        n = int(rng.integers(1, 17))
        x, y, z = (Point.from_array(rng.random(n) < 0.5) for _ in range(3))
        assert hamming_distance(x, y) == hamming_distance(y, x)
        assert hamming_distance(x, x) == 0
        assert (hamming_distance(x, y) == 0) == (x == y)
        assert hamming_distance(x, z) <= hamming_distance(x, y) + hamming_distance(y, z)


def test_flip_is_an_involution(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 17))
        x = Point.from_array(rng.random(n) < 0.5)
        indices = rng.choice(n, size=int(rng.integers(0, n + 1)), replace=False).tolist()
        y = flip(x, indices)
        assert flip(y, indices) == x
        assert hamming_distance(x, y) == len(indices)


def test_codes_and_matrices_agree():
    matrix = cube_matrix(3)
    assert matrix.shape == (8, 3)
    assert matrix[5].tolist() == [True, False, True]
    assert matrix_to_codes(matrix).tolist() == list(range(8))
    assert np.array_equal(codes_to_matrix(np.array([6]), 3), [[False, True, True]])


def test_points_and_matrices_agree():
    points = [Point.from_string("110"), Point.from_string("001")]
    matrix = points_to_matrix(points)
    assert matrix.tolist() == [[True, True, False], [False, False, True]]
    assert matrix_to_points(matrix) == points


def test_flip_axis_view():
    table = np.arange(8)
    assert flip_axis_view(table, 3, 0).tolist() == [1, 0, 3, 2, 5, 4, 7, 6]
    assert flip_axis_view(table, 3, 2).tolist() == [4, 5, 6, 7, 0, 1, 2, 3]
