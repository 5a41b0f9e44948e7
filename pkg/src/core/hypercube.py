"""
Points of {0,1}^n, Hamming distance and Hamming-ball enumeration.

Bit convention: position 0 is the leftmost character of a point's string
rendering and the least significant bit of its packed integer. Every module in
the package uses this convention.
"""
from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Iterable, Iterator, List, Sequence, Tuple

import numpy as np

from src.errors import DimensionMismatchError, InvalidParameterError

MAX_DIM = 4096
# Widest cube for which integer codes fit comfortably in int64
MAX_CODE_DIM = 62


@dataclass(frozen=True)
class Point:
    """
    A point of {0,1}^dim packed into an arbitrary-precision integer.

    Attributes:
        dim: Cube dimension, 1 <= dim <= 4096
        bits: Packed bits; bit i of the integer is position i
    """
    dim: int
    bits: int

    def __post_init__(self):
        if not 1 <= self.dim <= MAX_DIM:
            raise InvalidParameterError(f"dim must lie in [1, {MAX_DIM}], got {self.dim}")
        if self.bits < 0 or self.bits >> self.dim:
            raise InvalidParameterError(f"bits set beyond position {self.dim - 1}")

    @classmethod
    def from_string(cls, text: str) -> "Point":
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise InvalidParameterError(f"not a bit string: '{text}'")
        bits = 0
        for i, char in enumerate(text):
            if char == "1":
                bits |= 1 << i
        return cls(len(text), bits)

    @classmethod
    def from_array(cls, array) -> "Point":
        array = np.asarray(array, dtype=bool).ravel()
        packed = np.packbits(array, bitorder="little")
        return cls(int(array.size), int.from_bytes(packed.tobytes(), "little"))

    @classmethod
    def zeros(cls, dim: int) -> "Point":
        return cls(dim, 0)

    @classmethod
    def ones(cls, dim: int) -> "Point":
        return cls(dim, (1 << dim) - 1)

    def to_array(self) -> np.ndarray:
        raw = np.frombuffer(self.bits.to_bytes((self.dim + 7) // 8, "little"), dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.dim].astype(bool)

    @property
    def weight(self) -> int:
        return bin(self.bits).count("1")

    def __getitem__(self, index: int) -> int:
        if not 0 <= index < self.dim:
            raise IndexError(f"position {index} outside [0, {self.dim})")
        return (self.bits >> index) & 1

    def __str__(self) -> str:
        return "".join("1" if (self.bits >> i) & 1 else "0" for i in range(self.dim))

    def __repr__(self) -> str:
        return f"Point('{self}')"


@dataclass(frozen=True)
class BallSpec:
    center: Point
    radius: int

    def __post_init__(self):
        if not 0 <= self.radius <= self.center.dim:
            raise InvalidParameterError(
                f"radius must lie in [0, {self.center.dim}], got {self.radius}"
            )


def _check_same_dim(x: Point, y: Point):
    if x.dim != y.dim:
        raise DimensionMismatchError(x.dim, y.dim)


def hamming_distance(x: Point, y: Point) -> int:
    _check_same_dim(x, y)
    return bin(x.bits ^ y.bits).count("1")


def ball_size(n: int, rho: int) -> int:
    """Number of points within distance rho of any center of {0,1}^n."""
    if n < 1:
        raise InvalidParameterError(f"n must be positive, got {n}")
    if not 0 <= rho <= n:
        raise InvalidParameterError(f"radius must lie in [0, {n}], got {rho}")
    return sum(comb(n, i) for i in range(rho + 1))


def ball_flip_sets(n: int, rho: int, start_radius: int = 0) -> Iterator[Tuple[int, ...]]:
    """
    Canonical flip sets of a radius-rho ball: increasing size, then
    lexicographic order of the index tuples.
    """
    for d in range(start_radius, rho + 1):
        yield from combinations(range(n), d)


def flip_mask(indices: Iterable[int], dim: int) -> int:
    mask = 0
    for i in indices:
        if not 0 <= i < dim:
            raise InvalidParameterError(f"position {i} outside [0, {dim})")
        mask |= 1 << i
    return mask


def flip(x: Point, indices: Iterable[int]) -> Point:
    return Point(x.dim, x.bits ^ flip_mask(indices, x.dim))


def enumerate_ball(spec: BallSpec) -> Iterator[Point]:
    center = spec.center
    for flip_set in ball_flip_sets(center.dim, spec.radius):
        mask = 0
        for i in flip_set:
            mask |= 1 << i
        yield Point(center.dim, center.bits ^ mask)


# Vectorised helpers. Matrices hold one point per row, column i = position i.

def matrix_to_codes(matrix: np.ndarray) -> np.ndarray:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=bool))
    n = matrix.shape[1]
    if n > MAX_CODE_DIM:
        raise InvalidParameterError(f"integer codes need dim <= {MAX_CODE_DIM}, got {n}")
    weights = np.left_shift(np.int64(1), np.arange(n, dtype=np.int64))
    return matrix.astype(np.int64) @ weights


def codes_to_matrix(codes: np.ndarray, n: int) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)


def cube_matrix(n: int, start: int = 0, stop: int = None) -> np.ndarray:
    """Rows for codes start..stop-1 of {0,1}^n (the whole cube by default)."""
    if stop is None:
        stop = 1 << n
    return codes_to_matrix(np.arange(start, stop, dtype=np.int64), n)


def points_to_matrix(points: Sequence[Point]) -> np.ndarray:
    if not points:
        raise InvalidParameterError("cannot build a matrix from zero points")
    dim = points[0].dim
    matrix = np.empty((len(points), dim), dtype=bool)
    for row, point in enumerate(points):
        _check_same_dim(points[0], point)
        matrix[row] = point.to_array()
    return matrix


def matrix_to_points(matrix: np.ndarray) -> List[Point]:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=bool))
    dim = matrix.shape[1]
    packed = np.packbits(matrix, axis=1, bitorder="little")
    return [Point(dim, int.from_bytes(row.tobytes(), "little")) for row in packed]


def flip_axis_view(table: np.ndarray, n: int, position: int) -> np.ndarray:
    """Cube table re-indexed so entry x holds table[x with `position` flipped]."""
    blocks = table.reshape(1 << (n - 1 - position), 2, 1 << position)
    return blocks[:, ::-1, :].reshape(table.shape)
