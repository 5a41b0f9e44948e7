"""
Concept classes as evaluable boolean functions with inspectable structure.

Text format, used in configs and reports:
    conj:0,2   dict:3   parity:0,1;b=1   const:0   table:<hex>
    majenc(k=2):<inner>   pullback(k=1,b=0):<outer>
"""
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import FrozenSet, Optional, Sequence

import numpy as np

from src.core.hypercube import Point, cube_matrix, flip_axis_view, matrix_to_codes
from src.errors import DimensionMismatchError, InvalidParameterError

MAX_TABLE_DIM = 24
_CHUNK_ROWS = 1 << 16


def _positions(values, dim: int, what: str) -> FrozenSet[int]:
    positions = frozenset(int(v) for v in values)
    for i in positions:
        if not 0 <= i < dim:
            raise InvalidParameterError(f"{what}: position {i} outside [0, {dim})")
    return positions


def _mask(positions) -> int:
    mask = 0
    for i in positions:
        mask |= 1 << i
    return mask


def _join(positions) -> str:
    return ",".join(str(i) for i in sorted(positions))


class Concept(ABC):
    """A boolean function on {0,1}^dim."""
    dim: int

    @abstractmethod
    def _evaluate_bits(self, bits: int) -> int:
        """Evaluate on a packed point already known to have dimension dim."""

    @abstractmethod
    def _evaluate_rows(self, matrix: np.ndarray) -> np.ndarray:
        """Evaluate on a boolean matrix already known to have dim columns."""

    @abstractmethod
    def relevant_positions(self) -> FrozenSet[int]:
        """A superset of the positions the function depends on."""

    @abstractmethod
    def to_text(self) -> str:
        pass

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class MonotoneConjunction(Concept):
    dim: int
    vars: FrozenSet[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "vars", _positions(self.vars, self.dim, "conjunction"))

    @cached_property
    def mask(self) -> int:
        return _mask(self.vars)

    @property
    def length(self) -> int:
        return len(self.vars)

    def _evaluate_bits(self, bits: int) -> int:
        return int(bits & self.mask == self.mask)

    def _evaluate_rows(self, matrix):
        if not self.vars:
            return np.ones(matrix.shape[0], dtype=bool)
        return matrix[:, sorted(self.vars)].all(axis=1)

    def relevant_positions(self):
        return self.vars

    def to_text(self):
        return f"conj:{_join(self.vars)}"


@dataclass(frozen=True)
class Dictator(Concept):
    dim: int
    index: int

    def __post_init__(self):
        _positions([self.index], self.dim, "dictator")

    def _evaluate_bits(self, bits):
        return (bits >> self.index) & 1

    def _evaluate_rows(self, matrix):
        return matrix[:, self.index].copy()

    def relevant_positions(self):
        return frozenset({self.index})

    def to_text(self):
        return f"dict:{self.index}"


@dataclass(frozen=True)
class Parity(Concept):
    dim: int
    index_set: FrozenSet[int]
    offset: int = 0

    def __post_init__(self):
        object.__setattr__(self, "index_set", _positions(self.index_set, self.dim, "parity"))
        if self.offset not in (0, 1):
            raise InvalidParameterError(f"parity offset must be a bit, got {self.offset}")

    @cached_property
    def mask(self) -> int:
        return _mask(self.index_set)

    def _evaluate_bits(self, bits):
        return (bin(bits & self.mask).count("1") + self.offset) % 2

    def _evaluate_rows(self, matrix):
        total = matrix[:, sorted(self.index_set)].sum(axis=1) + self.offset
        return (total % 2).astype(bool)

    def relevant_positions(self):
        return self.index_set

    def to_text(self):
        text = f"parity:{_join(self.index_set)}"
        return text + f";b={self.offset}" if self.offset else text


@dataclass(frozen=True)
class Constant(Concept):
    dim: int
    value: int

    def __post_init__(self):
        if self.value not in (0, 1):
            raise InvalidParameterError(f"constant value must be a bit, got {self.value}")

    def _evaluate_bits(self, bits):
        return self.value

    def _evaluate_rows(self, matrix):
        return np.full(matrix.shape[0], bool(self.value))

    def relevant_positions(self):
        return frozenset()

    def to_text(self):
        return f"const:{self.value}"


@dataclass(frozen=True)
class TruthTable(Concept):
    """Arbitrary function given by its packed truth table (bit x of `table` is f(x))."""
    dim: int
    table: bytes

    def __post_init__(self):
        if not 1 <= self.dim <= MAX_TABLE_DIM:
            raise InvalidParameterError(f"truth tables need dim <= {MAX_TABLE_DIM}, got {self.dim}")
        if len(self.table) != max(1, (1 << self.dim) // 8):
            raise InvalidParameterError("truth table length does not match dim")

    @classmethod
    def from_array(cls, values, dim: int) -> "TruthTable":
        values = np.asarray(values, dtype=bool).ravel()
        if values.size != 1 << dim:
            raise InvalidParameterError(f"expected {1 << dim} table entries, got {values.size}")
        return cls(dim, np.packbits(values, bitorder="little").tobytes())

    @cached_property
    def values(self) -> np.ndarray:
        raw = np.frombuffer(self.table, dtype=np.uint8)
        values = np.unpackbits(raw, bitorder="little")[: 1 << self.dim].astype(bool)
        values.setflags(write=False)
        return values

    def _evaluate_bits(self, bits):
        return int(self.values[bits])

    def _evaluate_rows(self, matrix):
        return self.values[matrix_to_codes(matrix)]

    def relevant_positions(self):
        return frozenset(
            i for i in range(self.dim)
            if np.any(self.values != flip_axis_view(self.values, self.dim, i))
        )

    def to_text(self):
        return f"table:{self.table.hex()}"


@dataclass(frozen=True)
class MajorityEncoded(Concept):
    """inner ∘ maj_{2k+1} on {0,1}^{(2k+1)n+1}; the final bit is ignored."""
    inner: Concept
    k: int
    dim: int = field(init=False)

    def __post_init__(self):
        if self.k < 0:
            raise InvalidParameterError(f"k must be non-negative, got {self.k}")
        object.__setattr__(self, "dim", encoded_dim(self.inner.dim, self.k))

    def _evaluate_bits(self, bits):
        decoded = maj_decode(Point(self.dim, bits), self.k, self.inner.dim)
        return self.inner._evaluate_bits(decoded.bits)

    def _evaluate_rows(self, matrix):
        return self.inner._evaluate_rows(maj_decode_matrix(matrix, self.k, self.inner.dim))

    def relevant_positions(self):
        width = 2 * self.k + 1
        return frozenset(
            i * width + j for i in self.inner.relevant_positions() for j in range(width)
        )

    def to_text(self):
        return f"majenc(k={self.k}):{self.inner.to_text()}"


@dataclass(frozen=True)
class Pullback(Concept):
    """x ↦ outer(φ_k(x, label_bit)): a hypothesis on the encoded cube read on the base cube."""
    outer: Concept
    k: int
    label_bit: int = 0
    dim: int = field(init=False)

    def __post_init__(self):
        width = 2 * self.k + 1
        if self.k < 0 or (self.outer.dim - 1) % width or self.outer.dim < width + 1:
            raise InvalidParameterError(
                f"outer dim {self.outer.dim} is not of the form (2k+1)n+1 for k={self.k}"
            )
        if self.label_bit not in (0, 1):
            raise InvalidParameterError(f"label bit must be a bit, got {self.label_bit}")
        object.__setattr__(self, "dim", (self.outer.dim - 1) // width)

    def _evaluate_bits(self, bits):
        return self.outer._evaluate_bits(phi_encode(Point(self.dim, bits), self.label_bit, self.k).bits)

    def _evaluate_rows(self, matrix):
        labels = np.full(matrix.shape[0], bool(self.label_bit))
        return self.outer._evaluate_rows(phi_encode_matrix(matrix, labels, self.k))

    def relevant_positions(self):
        width = 2 * self.k + 1
        return frozenset(
            i // width for i in self.outer.relevant_positions() if i < self.dim * width
        )

    def to_text(self):
        return f"pullback(k={self.k},b={self.label_bit}):{self.outer.to_text()}"


def encoded_dim(n: int, k: int) -> int:
    return (2 * k + 1) * n + 1


def evaluate(c: Concept, x: Point) -> int:
    if x.dim != c.dim:
        raise DimensionMismatchError(c.dim, x.dim)
    return c._evaluate_bits(x.bits)


def evaluate_matrix(c: Concept, matrix: np.ndarray) -> np.ndarray:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=bool))
    if matrix.shape[1] != c.dim:
        raise DimensionMismatchError(c.dim, matrix.shape[1], "matrix")
    return np.asarray(c._evaluate_rows(matrix), dtype=bool)


@lru_cache(maxsize=128)
def truth_table(c: Concept) -> np.ndarray:
    """Values of c on every cube point, indexed by integer code (read-only)."""
    if c.dim > MAX_TABLE_DIM:
        raise InvalidParameterError(f"truth tables need dim <= {MAX_TABLE_DIM}, got {c.dim}")
    size = 1 << c.dim
    values = np.empty(size, dtype=bool)
    for start in range(0, size, _CHUNK_ROWS):
        stop = min(size, start + _CHUNK_ROWS)
        values[start:stop] = c._evaluate_rows(cube_matrix(c.dim, start, stop))
    values.setflags(write=False)
    return values


def maj_decode(z: Point, k: int, n: int) -> Point:
    width = 2 * k + 1
    if z.dim != encoded_dim(n, k):
        raise DimensionMismatchError(encoded_dim(n, k), z.dim, "encoded point")
    block = (1 << width) - 1
    bits = 0
    for i in range(n):
        if bin((z.bits >> (i * width)) & block).count("1") > k:
            bits |= 1 << i
    return Point(n, bits)


def phi_encode(x: Point, label: int, k: int) -> Point:
    if label not in (0, 1):
        raise InvalidParameterError(f"label must be a bit, got {label}")
    width = 2 * k + 1
    block = (1 << width) - 1
    bits = 0
    for i in range(x.dim):
        if (x.bits >> i) & 1:
            bits |= block << (i * width)
    bits |= label << (width * x.dim)
    return Point(encoded_dim(x.dim, k), bits)


def maj_decode_matrix(matrix: np.ndarray, k: int, n: int) -> np.ndarray:
    width = 2 * k + 1
    if matrix.shape[1] != encoded_dim(n, k):
        raise DimensionMismatchError(encoded_dim(n, k), matrix.shape[1], "encoded matrix")
    blocks = matrix[:, : n * width].reshape(matrix.shape[0], n, width)
    return blocks.sum(axis=2) > k


def phi_encode_matrix(matrix: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    repeated = np.repeat(np.asarray(matrix, dtype=bool), 2 * k + 1, axis=1)
    return np.hstack([repeated, np.asarray(labels, dtype=bool).reshape(-1, 1)])


def concepts_equal_on_cube(c1: Concept, c2: Concept) -> bool:
    if c1.dim != c2.dim:
        raise DimensionMismatchError(c1.dim, c2.dim, "concept")
    if c1.dim > MAX_TABLE_DIM:
        raise InvalidParameterError(
            f"exhaustive comparison refused above dim {MAX_TABLE_DIM} (got {c1.dim})"
        )
    return bool(np.array_equal(truth_table(c1), truth_table(c2)))


def as_conjunction(c: Concept) -> Optional[MonotoneConjunction]:
    """The monotone conjunction equal to c by structure, if there is one."""
    if isinstance(c, MonotoneConjunction):
        return c
    if isinstance(c, Dictator):
        return MonotoneConjunction(c.dim, frozenset({c.index}))
    if isinstance(c, Constant) and c.value == 1:
        return MonotoneConjunction(c.dim, frozenset())
    return None


_MAJENC = re.compile(r"^majenc\(k=(\d+)\):(.+)$")
_PULLBACK = re.compile(r"^pullback\(k=(\d+),b=([01])\):(.+)$")


def _parse_indices(body: str):
    body = body.strip()
    if not body:
        return []
    return [int(part) for part in body.split(",")]


def parse_concept(text: str, dim: int) -> Concept:
    """
    Parse the text format into a concept over {0,1}^dim.

    Raises:
        InvalidParameterError: If the text is malformed or does not fit dim
    """
    text = text.strip()
    try:
        match = _MAJENC.match(text)
        if match:
            k = int(match.group(1))
            width = 2 * k + 1
            if (dim - 1) % width or dim <= width:
                raise InvalidParameterError(f"dim {dim} is not (2k+1)n+1 for k={k}")
            return MajorityEncoded(parse_concept(match.group(2), (dim - 1) // width), k)
        match = _PULLBACK.match(text)
        if match:
            k, label_bit = int(match.group(1)), int(match.group(2))
            return Pullback(parse_concept(match.group(3), encoded_dim(dim, k)), k, label_bit)

        kind, _, body = text.partition(":")
        if kind == "conj":
            return MonotoneConjunction(dim, frozenset(_parse_indices(body)))
        if kind == "dict":
            return Dictator(dim, int(body))
        if kind == "parity":
            indices, _, offset = body.partition(";")
            offset_value = int(offset.split("=", 1)[1]) if offset else 0
            return Parity(dim, frozenset(_parse_indices(indices)), offset_value)
        if kind == "const":
            return Constant(dim, int(body))
        if kind == "table":
            return TruthTable(dim, bytes.fromhex(body))
    except (ValueError, IndexError) as e:
        if isinstance(e, InvalidParameterError):
            raise
        raise InvalidParameterError(f"malformed concept '{text}': {e}") from e
    raise InvalidParameterError(f"unknown concept kind in '{text}'")


def format_concept(c: Concept) -> str:
    return c.to_text()


CONCEPT_KINDS = ("conj", "dict", "parity", "const", "table")


def random_concept(n: int, rng: np.random.Generator, kinds: Sequence[str] = CONCEPT_KINDS) -> Concept:
    kind = kinds[int(rng.integers(len(kinds)))]
    if kind == "table" and n > MAX_TABLE_DIM:
        kind = "conj"
    if kind == "conj":
        return MonotoneConjunction(n, frozenset(np.flatnonzero(rng.random(n) < 0.5).tolist()))
    if kind == "dict":
        return Dictator(n, int(rng.integers(n)))
    if kind == "parity":
        return Parity(n, frozenset(np.flatnonzero(rng.random(n) < 0.5).tolist()), int(rng.integers(2)))
    if kind == "const":
        return Constant(n, int(rng.integers(2)))
    return TruthTable.from_array(rng.random(1 << n) < 0.5, n)
