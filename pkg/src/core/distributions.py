"""
Distributions on {0,1}^n: exact pmf, seeded sampling, marginals and
conditionals, and log-Lipschitz verification.

Samplers take an external numpy Generator and draw whole matrices at a time;
the draw is a deterministic function of the generator state.
"""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Tuple, Union

import numpy as np
import yaml
from loguru import logger
from pydantic import ValidationError

from src.core.concepts import (
    Concept, encoded_dim, evaluate, evaluate_matrix, maj_decode, parse_concept,
    phi_encode, phi_encode_matrix, truth_table,
)
from src.core.hypercube import (
    Point, codes_to_matrix, cube_matrix, flip_axis_view, matrix_to_codes,
)
from src.errors import (
    DimensionMismatchError, InvalidParameterError, NotEnumerableError,
    TrivialPairError, ZeroMassError,
)

PMF_TOLERANCE = 1e-12
# Cube-supported distributions are enumerated exactly up to this dimension
ENUMERABLE_DIM = 20
MAX_TABLE_DIM = 24
_CHUNK_ROWS = 1 << 16


class Distribution(ABC):
    """A probability distribution on {0,1}^dim."""

    @property
    @abstractmethod
    def dim(self) -> int:
        pass

    @abstractmethod
    def _pmf_bits(self, bits: int) -> float:
        pass

    @abstractmethod
    def _pmf_rows(self, matrix: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def sample_matrix(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """Draw m i.i.d. points as an (m, dim) boolean matrix."""

    @abstractmethod
    def to_config(self) -> dict:
        pass

    @property
    def enumerable(self) -> bool:
        return self.dim <= ENUMERABLE_DIM

    def pmf(self, x: Point) -> float:
        if x.dim != self.dim:
            raise DimensionMismatchError(self.dim, x.dim)
        return self._pmf_bits(x.bits)

    def sample(self, rng: np.random.Generator) -> Point:
        return Point.from_array(self.sample_matrix(rng, 1)[0])

    def pmf_table(self) -> np.ndarray:
        """Mass of every cube point indexed by integer code."""
        if self.dim > MAX_TABLE_DIM:
            raise NotEnumerableError(f"pmf tables need dim <= {MAX_TABLE_DIM}, got {self.dim}")
        size = 1 << self.dim
        table = np.empty(size, dtype=np.float64)
        for start in range(0, size, _CHUNK_ROWS):
            stop = min(size, start + _CHUNK_ROWS)
            table[start:stop] = self._pmf_rows(cube_matrix(self.dim, start, stop))
        return table

    def support_matrix(self) -> Tuple[np.ndarray, np.ndarray]:
        """Points with positive mass, one per row, and their masses."""
        if not self.enumerable:
            raise NotEnumerableError(f"{type(self).__name__} over dim {self.dim} is not enumerable")
        table = self.pmf_table()
        codes = np.flatnonzero(table > 0)
        return codes_to_matrix(codes, self.dim), table[codes]


@dataclass(frozen=True, eq=False)
class Uniform(Distribution):
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameterError(f"n must be positive, got {self.n}")

    @property
    def dim(self):
        return self.n

    def _pmf_bits(self, bits):
        return 2.0 ** -self.n

    def _pmf_rows(self, matrix):
        return np.full(matrix.shape[0], 2.0 ** -self.n)

    def pmf_table(self):
        if self.n > MAX_TABLE_DIM:
            raise NotEnumerableError(f"pmf tables need dim <= {MAX_TABLE_DIM}, got {self.n}")
        return np.full(1 << self.n, 2.0 ** -self.n)

    def sample_matrix(self, rng, m):
        return rng.integers(0, 2, size=(m, self.n), dtype=np.uint8).astype(bool)

    def to_config(self):
        return {"kind": "uniform", "n": self.n}


@dataclass(frozen=True, eq=False)
class Product(Distribution):
    """Independent bits with p[i] = Pr[x_i = 1]."""
    p: Tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        if not p:
            raise InvalidParameterError("product distribution needs at least one bit")
        for value in p:
            if not 0.0 <= value <= 1.0:
                raise InvalidParameterError(f"probability {value} outside [0, 1]")
        object.__setattr__(self, "p", p)

    @property
    def dim(self):
        return len(self.p)

    def _pmf_bits(self, bits):
        mass = 1.0
        for i, p_i in enumerate(self.p):
            mass *= p_i if (bits >> i) & 1 else 1.0 - p_i
        return mass

    def _pmf_rows(self, matrix):
        p = np.asarray(self.p)
        return np.prod(np.where(matrix, p, 1.0 - p), axis=1)

    def pmf_table(self):
        if self.dim > MAX_TABLE_DIM:
            raise NotEnumerableError(f"pmf tables need dim <= {MAX_TABLE_DIM}, got {self.dim}")
        table = np.ones(1)
        for p_i in self.p:
            table = np.concatenate([table * (1.0 - p_i), table * p_i])
        return table

    def sample_matrix(self, rng, m):
        return rng.random((m, self.dim)) < np.asarray(self.p)

    def to_config(self):
        return {"kind": "product", "p": list(self.p)}


@dataclass(frozen=True, eq=False)
class Table(Distribution):
    """Explicit pmf over {0,1}^n, n <= 24, indexed by integer code."""
    n: int
    probs: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n <= MAX_TABLE_DIM:
            raise InvalidParameterError(f"table distributions need 1 <= n <= {MAX_TABLE_DIM}")
        probs = np.array(self.probs, dtype=np.float64).ravel()
        if probs.size != 1 << self.n:
            raise InvalidParameterError(f"expected {1 << self.n} masses, got {probs.size}")
        if np.any(probs < 0):
            raise InvalidParameterError("negative probability mass")
        total = float(np.sum(probs))
        if abs(total - 1.0) > PMF_TOLERANCE:
            raise InvalidParameterError(f"pmf sums to {total!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_mapping(cls, n: int, pmf: Mapping[Union[str, Point], float]) -> "Table":
        probs = np.zeros(1 << n)
        for key, mass in pmf.items():
            point = Point.from_string(key) if isinstance(key, str) else key
            if point.dim != n:
                raise DimensionMismatchError(n, point.dim)
            probs[point.bits] += mass
        return cls(n, probs)

    @property
    def dim(self):
        return self.n

    @property
    def enumerable(self):
        return True

    def _pmf_bits(self, bits):
        return float(self.probs[bits])

    def _pmf_rows(self, matrix):
        return self.probs[matrix_to_codes(matrix)]

    def pmf_table(self):
        return self.probs.copy()

    def sample_matrix(self, rng, m):
        # Inverse CDF over lexicographic code order
        cdf = np.cumsum(self.probs)
        codes = np.searchsorted(cdf, rng.random(m) * cdf[-1], side="right")
        codes = np.minimum(codes, self.probs.size - 1)
        return codes_to_matrix(codes, self.n)

    def to_config(self):
        codes = np.flatnonzero(self.probs > 0)
        return {
            "kind": "table", "n": self.n,
            "pmf": {str(Point(self.n, int(code))): float(self.probs[code]) for code in codes},
        }


@dataclass(frozen=True, eq=False)
class Coupled(Distribution):
    """
    Groups of positions forced bitwise-equal; each group and each free bit is
    an independent coin (group_p[g] = Pr[group g is all ones]).
    """
    n: int
    equal_groups: Tuple[Tuple[int, ...], ...]
    group_p: Tuple[float, ...] = None
    free_p: Tuple[float, ...] = None

    def __post_init__(self):
        groups = tuple(tuple(sorted(int(i) for i in group)) for group in self.equal_groups)
        seen = set()
        for group in groups:
            if not group:
                raise InvalidParameterError("empty equality group")
            for i in group:
                if not 0 <= i < self.n or i in seen:
                    raise InvalidParameterError(f"position {i} out of range or in two groups")
                seen.add(i)
        free = tuple(i for i in range(self.n) if i not in seen)
        group_p = tuple(self.group_p) if self.group_p is not None else (0.5,) * len(groups)
        free_p = tuple(self.free_p) if self.free_p is not None else (0.5,) * len(free)
        if len(group_p) != len(groups) or len(free_p) != len(free):
            raise InvalidParameterError("bias vectors do not match the group/free layout")
        for value in group_p + free_p:
            if not 0.0 <= value <= 1.0:
                raise InvalidParameterError(f"probability {value} outside [0, 1]")
        object.__setattr__(self, "equal_groups", groups)
        object.__setattr__(self, "group_p", tuple(float(v) for v in group_p))
        object.__setattr__(self, "free_p", tuple(float(v) for v in free_p))
        object.__setattr__(self, "free_positions", free)

    @classmethod
    def first_pair_equal(cls, n: int) -> "Coupled":
        """x_0 = x_1 almost surely, every other bit fair."""
        if n < 2:
            raise InvalidParameterError(f"need n >= 2, got {n}")
        return cls(n, ((0, 1),))

    @property
    def dim(self):
        return self.n

    def _pmf_bits(self, bits):
        mass = 1.0
        for group, p in zip(self.equal_groups, self.group_p):
            values = {(bits >> i) & 1 for i in group}
            if len(values) > 1:
                return 0.0
            mass *= p if values.pop() else 1.0 - p
        for i, p in zip(self.free_positions, self.free_p):
            mass *= p if (bits >> i) & 1 else 1.0 - p
        return mass

    def _pmf_rows(self, matrix):
        mass = np.ones(matrix.shape[0])
        for group, p in zip(self.equal_groups, self.group_p):
            block = matrix[:, list(group)]
            consistent = block.all(axis=1) | ~block.any(axis=1)
            mass *= np.where(consistent, np.where(block[:, 0], p, 1.0 - p), 0.0)
        if self.free_positions:
            p = np.asarray(self.free_p)
            mass *= np.prod(np.where(matrix[:, list(self.free_positions)], p, 1.0 - p), axis=1)
        return mass

    def sample_matrix(self, rng, m):
        matrix = np.empty((m, self.n), dtype=bool)
        group_bits = rng.random((m, len(self.equal_groups))) < np.asarray(self.group_p)
        for g, group in enumerate(self.equal_groups):
            matrix[:, list(group)] = group_bits[:, [g]]
        if self.free_positions:
            matrix[:, list(self.free_positions)] = rng.random((m, len(self.free_positions))) < np.asarray(self.free_p)
        return matrix

    def to_config(self):
        return {
            "kind": "coupled", "n": self.n,
            "equal_groups": [list(group) for group in self.equal_groups],
            "group_p": list(self.group_p), "free_p": list(self.free_p),
        }


@dataclass(frozen=True, eq=False)
class Induced(Distribution):
    """D′(φ_k(x, c(x))) = D(x); every other point of {0,1}^{(2k+1)n+1} has mass 0."""
    base: Distribution
    concept: Concept
    k: int

    def __post_init__(self):
        if self.concept.dim != self.base.dim:
            raise DimensionMismatchError(self.base.dim, self.concept.dim, "concept")
        if self.k < 0:
            raise InvalidParameterError(f"k must be non-negative, got {self.k}")

    @property
    def dim(self):
        return encoded_dim(self.base.dim, self.k)

    @property
    def enumerable(self):
        return self.base.enumerable

    def _pmf_bits(self, bits):
        z = Point(self.dim, bits)
        x = maj_decode(z, self.k, self.base.dim)
        if phi_encode(x, evaluate(self.concept, x), self.k) != z:
            return 0.0
        return self.base._pmf_bits(x.bits)

    def _pmf_rows(self, matrix):
        return np.array([self._pmf_bits(Point.from_array(row).bits) for row in matrix])

    def pmf_table(self):
        if self.dim > MAX_TABLE_DIM:
            raise NotEnumerableError(f"pmf tables need dim <= {MAX_TABLE_DIM}, got {self.dim}")
        points, masses = self.support_matrix()
        table = np.zeros(1 << self.dim)
        table[matrix_to_codes(points)] = masses
        return table

    def support_matrix(self):
        points, masses = self.base.support_matrix()
        labels = evaluate_matrix(self.concept, points)
        return phi_encode_matrix(points, labels, self.k), masses

    def sample_matrix(self, rng, m):
        points = self.base.sample_matrix(rng, m)
        return phi_encode_matrix(points, evaluate_matrix(self.concept, points), self.k)

    def to_config(self):
        return {
            "kind": "induced", "base": self.base.to_config(),
            "concept": self.concept.to_text(), "k": self.k,
        }


@dataclass(frozen=True)
class LogLipschitzParam:
    alpha: float

    def __post_init__(self):
        if not self.alpha >= 1.0:
            raise InvalidParameterError(f"alpha must be >= 1, got {self.alpha}")

    @property
    def eta(self) -> float:
        return 1.0 / (1.0 + self.alpha)


def pmf(D: Distribution, x: Point) -> float:
    return D.pmf(x)


def sample(D: Distribution, rng: np.random.Generator) -> Point:
    return D.sample(rng)


def sample_matrix(D: Distribution, rng: np.random.Generator, m: int) -> np.ndarray:
    return D.sample_matrix(rng, m)


def log_lipschitz_constant(D: Distribution) -> float:
    """Largest mass ratio across a hypercube edge; inf when some point has zero mass."""
    if isinstance(D, Uniform):
        return 1.0
    if isinstance(D, Product):
        worst = 1.0
        for p_i in D.p:
            if p_i <= 0.0 or p_i >= 1.0:
                return math.inf
            worst = max(worst, p_i / (1.0 - p_i), (1.0 - p_i) / p_i)
        return worst
    if isinstance(D, Induced):
        return math.inf
    if D.dim > MAX_TABLE_DIM:
        raise InvalidParameterError(f"edge scan refused above dim {MAX_TABLE_DIM} (got {D.dim})")
    table = D.pmf_table()
    if np.any(table <= 0.0):
        return math.inf
    logs = np.log(table)
    worst = 0.0
    for i in range(D.dim):
        worst = max(worst, float(np.max(np.abs(logs - flip_axis_view(logs, D.dim, i)))))
    return math.exp(worst)


def verify_log_lipschitz(D: Distribution, alpha: float) -> bool:
    """
    Check |log D(x) - log D(x')| <= log alpha on every edge of the cube.

    Product distributions use the closed-form edge ratio; other distributions
    are scanned exhaustively (n <= 24).
    """
    LogLipschitzParam(alpha)
    constant = log_lipschitz_constant(D)
    if math.isinf(constant):
        logger.debug(f"{type(D).__name__} is not log-Lipschitz (zero mass)")
        return False
    return constant <= alpha * (1.0 + PMF_TOLERANCE)


def _check_positions(positions: Sequence[int], n: int):
    for i in positions:
        if not 0 <= i < n:
            raise InvalidParameterError(f"position {i} outside [0, {n})")
    if len(set(positions)) != len(positions):
        raise InvalidParameterError("repeated position")


def _marginalize_table(table: np.ndarray, n: int, drop: Sequence[int]) -> np.ndarray:
    # Axis j of the reshaped table holds position n-1-j
    cube = table.reshape((2,) * n)
    if drop:
        cube = cube.sum(axis=tuple(n - 1 - i for i in drop))
    return np.ascontiguousarray(cube).ravel()


def marginal(D: Distribution, S: Sequence[int]) -> Table:
    """
    Marginal on the complement of S. Remaining positions keep their relative
    order: the j-th smallest kept position becomes position j.
    """
    S = sorted(set(int(i) for i in S))
    _check_positions(S, D.dim)
    if len(S) == D.dim:
        raise InvalidParameterError("cannot marginalize away every position")
    if D.dim > MAX_TABLE_DIM:
        raise NotEnumerableError(f"marginals need dim <= {MAX_TABLE_DIM}, got {D.dim}")
    kept = D.dim - len(S)
    return Table(kept, _marginalize_table(D.pmf_table(), D.dim, S))


Predicate = Callable[[Tuple[int, ...]], bool]


def fix_bits(assignment: Mapping[int, int]) -> Tuple[Tuple[int, ...], Predicate]:
    """Positions and predicate for the event x_i = b_i for every (i, b_i)."""
    positions = tuple(sorted(assignment))
    wanted = tuple(int(assignment[i]) for i in positions)
    return positions, lambda bits: tuple(bits) == wanted


def conditional(D: Distribution, positions: Sequence[int], predicate: Predicate) -> Table:
    """
    Condition D on an event depending only on `positions`, then marginalize
    those positions away.

    Args:
        D: Distribution with dim <= 24
        positions: The positions S the event reads
        predicate: Called with the bits of S (in the order given) for every pattern

    Raises:
        ZeroMassError: If the event has zero probability
    """
    positions = [int(i) for i in positions]
    _check_positions(positions, D.dim)
    if D.dim > MAX_TABLE_DIM:
        raise NotEnumerableError(f"conditionals need dim <= {MAX_TABLE_DIM}, got {D.dim}")
    width = len(positions)
    accept = np.array([
        bool(predicate(tuple((pattern >> j) & 1 for j in range(width))))
        for pattern in range(1 << width)
    ])
    codes = np.arange(1 << D.dim, dtype=np.int64)
    pattern = np.zeros_like(codes)
    for j, i in enumerate(positions):
        pattern |= ((codes >> i) & 1) << j
    table = D.pmf_table()
    restricted = np.where(accept[pattern], table, 0.0)
    mass = float(np.sum(restricted))
    if mass <= 0.0:
        raise ZeroMassError("conditioning event has zero probability")
    if len(positions) == D.dim:
        raise InvalidParameterError("cannot marginalize away every position")
    return Table(D.dim - width, _marginalize_table(restricted / mass, D.dim, sorted(positions)))


def pattern_probability(D: Distribution, assignment: Mapping[int, int]) -> float:
    """Pr_{x~D}[x_i = b_i for every (i, b_i)], summed over the whole pmf table."""
    positions = [int(i) for i in assignment]
    _check_positions(positions, D.dim)
    if any(int(b) not in (0, 1) for b in assignment.values()):
        raise InvalidParameterError(f"pattern bits must be 0 or 1, got {dict(assignment)}")
    if D.dim > MAX_TABLE_DIM:
        raise NotEnumerableError(f"pattern probabilities need dim <= {MAX_TABLE_DIM}, got {D.dim}")
    codes = np.arange(1 << D.dim, dtype=np.int64)
    match = np.ones(codes.size, dtype=bool)
    for i, b in assignment.items():
        match &= ((codes >> int(i)) & 1) == int(b)
    return math.fsum(D.pmf_table()[match])


def build_hiding_distribution(c1: Concept, c2: Concept, eta: float) -> Tuple[Product, Point]:
    """
    Product distribution concentrated near a boundary point z of a non-trivial pair.

    z satisfies c1(z) = c2(z), and flipping one bit of I = I_c1 ∪ I_c2 makes
    them disagree. Bits of I equal z_i with probability 1 - eta; every other
    bit is fair.

    Raises:
        TrivialPairError: If no such z exists
    """
    if c1.dim != c2.dim:
        raise DimensionMismatchError(c1.dim, c2.dim, "concept")
    if not 0.0 <= eta <= 1.0:
        raise InvalidParameterError(f"eta must be a probability, got {eta}")
    n = c1.dim
    if n > MAX_TABLE_DIM:
        raise InvalidParameterError(f"witness search refused above dim {MAX_TABLE_DIM} (got {n})")
    relevant = sorted(c1.relevant_positions() | c2.relevant_positions())
    t1, t2 = truth_table(c1), truth_table(c2)
    boundary = np.zeros(1 << n, dtype=bool)
    for i in relevant:
        boundary |= flip_axis_view(t1, n, i) != flip_axis_view(t2, n, i)
    candidates = np.flatnonzero((t1 == t2) & boundary)
    if candidates.size == 0:
        raise TrivialPairError(f"{c1} and {c2} form a trivial pair: no boundary point exists")
    z = Point(n, int(candidates[0]))
    in_relevant = set(relevant)
    p = tuple(
        (1.0 - eta if z[i] else eta) if i in in_relevant else 0.5
        for i in range(n)
    )
    logger.debug(f"hiding point z={z} over I={relevant}, eta={eta}")
    return Product(p), z


def random_log_lipschitz_table(n: int, alpha: float, rng: np.random.Generator) -> Table:
    """Masses proportional to alpha^u(x) with u(x) uniform in [0, 1]; alpha-log-Lipschitz by construction."""
    weights = np.power(float(alpha), rng.random(1 << n))
    return Table(n, weights / np.sum(weights))


def total_variation(D: Distribution, samples: np.ndarray) -> float:
    """Total-variation distance between the empirical histogram of samples and D."""
    codes = matrix_to_codes(samples)
    histogram = np.bincount(codes, minlength=1 << D.dim) / codes.size
    return 0.5 * float(np.sum(np.abs(histogram - D.pmf_table())))


def distribution_from_config(cfg) -> Distribution:
    """Build a distribution from a validated config model or a plain dict."""
    from src.schemas import (
        CoupledConfig, InducedConfig, ProductConfig, TableConfig, UniformConfig,
    )
    if isinstance(cfg, dict):
        from pydantic import TypeAdapter
        from src.schemas import DistributionConfig
        cfg = TypeAdapter(DistributionConfig).validate_python(cfg)
    if isinstance(cfg, UniformConfig):
        return Uniform(cfg.n)
    if isinstance(cfg, ProductConfig):
        return Product(tuple(cfg.p))
    if isinstance(cfg, TableConfig):
        return Table.from_mapping(cfg.n, cfg.pmf)
    if isinstance(cfg, CoupledConfig):
        return Coupled(
            cfg.n, tuple(tuple(group) for group in cfg.equal_groups),
            tuple(cfg.group_p) if cfg.group_p is not None else None,
            tuple(cfg.free_p) if cfg.free_p is not None else None,
        )
    if isinstance(cfg, InducedConfig):
        base = distribution_from_config(cfg.base)
        return Induced(base, parse_concept(cfg.concept, base.dim), cfg.k)
    raise InvalidParameterError(f"unsupported distribution config: {cfg!r}")


def parse_distribution(text: str) -> Distribution:
    """
    Build a distribution from command-line shorthand.

    Accepted forms: `uniform:<n>`, `product:<p0>,<p1>,...`, `coupled:<n>`
    (first two bits forced equal), or a JSON/YAML mapping with a `kind` key.
    """
    text = text.strip()
    if text.startswith("{"):
        try:
            spec = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise InvalidParameterError(f"malformed distribution mapping: {e}") from e
        try:
            return distribution_from_config(spec)
        except ValidationError as e:
            raise InvalidParameterError(f"invalid distribution config: {e}") from e
    kind, _, body = text.partition(":")
    try:
        if kind == "uniform":
            return Uniform(int(body))
        if kind == "product":
            return Product(tuple(float(value) for value in body.split(",")))
        if kind == "coupled":
            return Coupled.first_pair_equal(int(body))
    except InvalidParameterError:
        raise
    except ValueError as e:
        raise InvalidParameterError(f"malformed distribution '{text}': {e}") from e
    raise InvalidParameterError(
        f"unknown distribution '{text}'; use uniform:<n>, product:<p,...>, coupled:<n> or a mapping"
    )
