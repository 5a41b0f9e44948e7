"""
Learners for monotone conjunctions and the sample-size formulas that go with them.

All logarithms are natural.
"""
import math
from dataclasses import dataclass, field
from decimal import ROUND_CEILING, ROUND_FLOOR, Decimal, localcontext
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from src.core.concepts import Concept, Constant, MonotoneConjunction, evaluate, evaluate_matrix
from src.core.distributions import Distribution
from src.core.hypercube import Point, matrix_to_points, points_to_matrix
from src.errors import DimensionMismatchError, InvalidParameterError

PRACTICAL_SAMPLE_SIZE = 10**9
# Absorbs float noise when a formula lands on an integer
_CEIL_SLACK = 1e-9
# Above this l the agreement sample size no longer fits a float exactly
_FLOAT_AGREEMENT_MAX_L = 30


@dataclass(frozen=True, eq=False)
class LabeledSample:
    """
    m labeled points of {0,1}^dim, stored as a boolean matrix.

    Attributes:
        matrix: (m, dim) boolean matrix, one example per row
        labels: m labels
        target: The concept that produced the labels, kept for audit
    """
    matrix: np.ndarray
    labels: np.ndarray
    target: Optional[Concept] = None

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=bool)
        labels = np.asarray(self.labels, dtype=bool).ravel()
        if matrix.ndim != 2:
            raise InvalidParameterError("sample matrix must be two-dimensional")
        if matrix.shape[0] != labels.size:
            raise InvalidParameterError(f"{matrix.shape[0]} points but {labels.size} labels")
        if self.target is not None and self.target.dim != matrix.shape[1]:
            raise DimensionMismatchError(matrix.shape[1], self.target.dim, "target")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_points(cls, points: Sequence[Point], labels: Sequence[int], target: Optional[Concept] = None,
                    dim: Optional[int] = None) -> "LabeledSample":
        if not points:
            if dim is None:
                raise InvalidParameterError("an empty sample needs an explicit dim")
            return cls(np.zeros((0, dim), dtype=bool), np.zeros(0, dtype=bool), target)
        return cls(points_to_matrix(list(points)), np.asarray(labels, dtype=bool), target)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, labels: np.ndarray, target: Optional[Concept] = None) -> "LabeledSample":
        return cls(matrix, labels, target)

    @classmethod
    def draw(cls, D: Distribution, target: Concept, m: int, rng: np.random.Generator) -> "LabeledSample":
        """m i.i.d. points from D labeled by target."""
        if target.dim != D.dim:
            raise DimensionMismatchError(D.dim, target.dim, "target")
        matrix = D.sample_matrix(rng, m)
        return cls(matrix, evaluate_matrix(target, matrix), target)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def points(self) -> List[Point]:
        return matrix_to_points(self.matrix) if self.size else []

    def is_realizable(self) -> bool:
        if self.target is None:
            raise InvalidParameterError("sample has no target to audit against")
        return bool(np.array_equal(evaluate_matrix(self.target, self.matrix), self.labels)) if self.size else True

    def shuffled(self, rng: np.random.Generator) -> "LabeledSample":
        order = rng.permutation(self.size)
        return LabeledSample(self.matrix[order], self.labels[order], self.target)


class LearnParams(BaseModel):
    epsilon: float = Field(gt=0.0, lt=0.5)
    delta: float = Field(gt=0.0, lt=0.5)
    n: int = Field(ge=2)
    alpha: float = Field(1.0, ge=1.0)

    @property
    def eta(self) -> float:
        return 1.0 / (1.0 + self.alpha)


def learn_monotone_conjunction(S: LabeledSample) -> MonotoneConjunction:
    """
    Elimination learner: start from every index and drop each index where a
    positive example has a 0. Returns the maximal consistent conjunction.
    """
    positives = S.matrix[S.labels]
    surviving = positives.all(axis=0)
    return MonotoneConjunction(S.dim, frozenset(np.flatnonzero(surviving).tolist()))


def exact_learn_membership(oracle: Callable[[Point], int], n: int) -> MonotoneConjunction:
    """
    Recover a monotone conjunction with n + 1 membership queries: the all-ones
    point, then all-ones with each bit cleared in turn.

    Raises:
        InvalidParameterError: If the oracle labels the all-ones point 0
    """
    ones = Point.ones(n)
    if not oracle(ones):
        raise InvalidParameterError("oracle rejects the all-ones point; not a monotone conjunction")
    indices = [i for i in range(n) if not oracle(Point(n, ones.bits ^ (1 << i)))]
    logger.debug(f"membership learner used {n + 1} queries")
    return MonotoneConjunction(n, frozenset(indices))


def _ceil(value: float) -> int:
    return math.ceil(value - _CEIL_SLACK)


def _ceil_over_power(numerator: float, eta: float, power: int) -> int:
    """ceil(numerator / eta**power) as an exact integer, however large."""
    digits = int(power * math.log10(1.0 / eta)) + 40
    with localcontext() as ctx:
        ctx.prec = max(50, digits)
        value = Decimal(numerator) / (Decimal(eta) ** power)
        return int((value - Decimal(_CEIL_SLACK)).to_integral_value(rounding=ROUND_CEILING))


def short_target_sample_size(n: int, delta: float, eta: float, l: int) -> int:
    """Samples after which the elimination learner recovers a length-l target w.p. >= 1 - delta."""
    if n < 2 or not 0 < delta < 1 or not 0 < eta <= 0.5 or l < 0:
        raise InvalidParameterError(f"invalid parameters n={n}, delta={delta}, eta={eta}, l={l}")
    return _ceil_over_power(math.log(n) - math.log(delta), eta, l + 1)


@dataclass(frozen=True)
class RobustSampleSize:
    m: int
    l0: int
    eta: float
    practical: bool


def robust_sample_size(params: LearnParams) -> RobustSampleSize:
    """
    Sample size for robustly learning conjunctions under alpha-log-Lipschitz
    distributions with rho = O(log n).

    Returns:
        RobustSampleSize: m, the threshold length l0, eta, and whether m <= 10^9
    """
    eta = params.eta
    l0 = max(
        _ceil((2.0 / eta) * math.log(params.n)),
        _ceil((8.0 / eta**2) * math.log(1.0 / params.epsilon)),
    )
    m = _ceil_over_power(math.log(params.n) - math.log(params.delta), eta, l0 + 1)
    return RobustSampleSize(m=m, l0=l0, eta=eta, practical=m <= PRACTICAL_SAMPLE_SIZE)


def agreement_probability(l: int, m: int) -> float:
    """(1 - 2^-l)^(2m): chance that m uniform samples all miss both of two disjoint length-l conjunctions."""
    return math.exp(2 * m * math.log1p(-(2.0 ** -l)))


def max_agreement_sample_size(l: int) -> int:
    """Largest m with (1 - 2^-l)^(2m) >= 1/2, exact for any l >= 1."""
    if l < 1:
        raise InvalidParameterError(f"l must be positive, got {l}")
    if l <= _FLOAT_AGREEMENT_MAX_L:
        m = math.floor(math.log(2.0) / (-2.0 * math.log1p(-(2.0 ** -l))))
        while m > 0 and agreement_probability(l, m) < 0.5:
            m -= 1
        while agreement_probability(l, m + 1) >= 0.5:
            m += 1
        return m
    # -ln(1 - q) = q + q^2/2 + q^3/3 + ...; later terms cannot move the floor
    with localcontext() as ctx:
        ctx.prec = int(l * math.log10(2.0)) + 40
        q = Decimal(2) ** -l
        series = q + q * q / 2 + q ** 3 / 3
        return int((Decimal(2).ln() / (2 * series)).to_integral_value(rounding=ROUND_FLOOR))


def pac_sample_size_finite_class(class_size: int, epsilon: float, delta: float) -> int:
    """ceil((ln |C| + ln(1/delta)) / epsilon); independent of the robustness radius."""
    if class_size < 1:
        raise InvalidParameterError(f"class size must be positive, got {class_size}")
    if not 0 < epsilon <= 1 or not 0 < delta <= 1:
        raise InvalidParameterError(f"epsilon and delta must lie in (0, 1], got {epsilon}, {delta}")
    return _ceil((math.log(class_size) + math.log(1.0 / delta)) / epsilon)


@dataclass(frozen=True)
class Learner:
    """A named learning algorithm with an optional sample-size function."""
    name: str
    fit: Callable[[LabeledSample], Concept]
    sample_size: Optional[Callable[..., int]] = field(default=None, compare=False)

    def __call__(self, S: LabeledSample) -> Concept:
        return self.fit(S)


elimination_learner = Learner("elimination", learn_monotone_conjunction, short_target_sample_size)


def constant_learner(value: int) -> Learner:
    return Learner(f"const{value}", lambda S: Constant(S.dim, value))


def membership_learner(target: Concept) -> Learner:
    """Ignores the sample and queries target directly."""
    return Learner("membership", lambda S: exact_learn_membership(lambda x: evaluate(target, x), target.dim))


LEARNER_NAMES = ("elimination", "const0", "const1", "membership")


def get_learner(name: str, target: Optional[Concept] = None) -> Learner:
    if name == "elimination":
        return elimination_learner
    if name in ("const0", "const1"):
        return constant_learner(int(name[-1]))
    if name == "membership":
        if target is None:
            raise InvalidParameterError("the membership learner needs a target oracle")
        return membership_learner(target)
    raise InvalidParameterError(f"unknown learner '{name}'. Available: {', '.join(LEARNER_NAMES)}")


def load_sample(path: Union[str, Path], target: Optional[Concept] = None) -> LabeledSample:
    """
    Read a sample file: one `<bitstring> <label>` per line; blank lines and
    lines starting with # are skipped.
    """
    points, labels = [], []
    with open(path, "r") as file:
        for number, line in enumerate(file, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2 or parts[1] not in ("0", "1"):
                raise InvalidParameterError(f"{path}:{number}: expected '<bitstring> <label>'")
            point = Point.from_string(parts[0])
            if points and point.dim != points[0].dim:
                raise DimensionMismatchError(points[0].dim, point.dim)
            points.append(point)
            labels.append(int(parts[1]))
    if not points:
        raise InvalidParameterError(f"{path}: sample file has no examples")
    logger.debug(f"loaded {len(points)} examples from {path}")
    return LabeledSample.from_points(points, labels, target)


def dump_sample(S: LabeledSample, path: Union[str, Path]):
    with open(path, "w") as file:
        for point, label in zip(S.points, S.labels):
            file.write(f"{point} {int(label)}\n")
