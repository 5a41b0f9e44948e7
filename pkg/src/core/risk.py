"""
Exact and Monte Carlo evaluation of the exact-in-ball and constant-in-ball
robust risks, and the minimum-ball-mass threshold machinery.
"""
import math
from dataclasses import dataclass
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, model_validator

from src.config import settings
from src.core.adversary import ATTACK_KINDS, AttackKind, distance_transform, min_flips_batch
from src.core.concepts import Concept, TruthTable, truth_table
from src.core.distributions import Distribution, Table
from src.core.hypercube import ball_flip_sets, flip_mask
from src.core.parallel import chunk_rng, chunk_sizes, run_chunks
from src.errors import (
    DimensionMismatchError, InvalidParameterError, NotEnumerableError,
)

EXACT_CHUNK = 1 << 14
# Slack for comparing a risk against a ball mass computed by a different summation
MASS_TOLERANCE = 1e-12


class ExactMode(BaseModel):
    method: Literal["exact"] = "exact"


class MonteCarloMode(BaseModel):
    method: Literal["monte_carlo"] = "monte_carlo"
    samples: int = Field(gt=0)
    seed: int = Field(0, ge=0, lt=2**64)
    confidence: Optional[float] = Field(None, gt=0.0, lt=1.0)


RiskMode = Union[ExactMode, MonteCarloMode]


class RiskEstimate(BaseModel):
    """A robust-risk value with its provenance."""
    kind: AttackKind
    rho: int
    value: float = Field(ge=0.0, le=1.0)
    method: Literal["exact", "monte_carlo"]
    samples_used: int = 0
    confidence_radius: float = 0.0
    seed: Optional[int] = None

    @model_validator(mode="after")
    def validate_exact_radius(self):
        if self.method == "exact" and self.confidence_radius != 0.0:
            raise ValueError("exact estimates carry no confidence radius")
        return self

    def to_fragment(self) -> dict:
        """Report fragment, e.g. {"risk": {"kind": ..., "rho": ..., "value": ..., "method": ...}}."""
        fragment = {"kind": self.kind, "rho": self.rho, "value": self.value, "method": self.method}
        if self.method == "monte_carlo":
            fragment.update(samples=self.samples_used, radius=self.confidence_radius, seed=self.seed)
        return {"risk": fragment}


def hoeffding_radius(m: int, confidence: Optional[float] = None) -> float:
    """Two-sided Hoeffding radius sqrt(ln(2/gamma) / (2m)) at confidence 1 - gamma."""
    confidence = settings.confidence if confidence is None else confidence
    if m <= 0:
        raise InvalidParameterError(f"sample count must be positive, got {m}")
    if not 0.0 < confidence < 1.0:
        raise InvalidParameterError(f"confidence must lie in (0, 1), got {confidence}")
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * m))


def _check_dims(h: Concept, c: Concept, D: Distribution, rho: int):
    if h.dim != c.dim:
        raise DimensionMismatchError(c.dim, h.dim, "hypothesis")
    if D.dim != c.dim:
        raise DimensionMismatchError(c.dim, D.dim, "distribution")
    if not 0 <= rho <= c.dim:
        raise InvalidParameterError(f"radius must lie in [0, {c.dim}], got {rho}")


def _flip_profile(h, c, D, rho_max, kind, mode) -> Tuple[np.ndarray, np.ndarray]:
    """Min flips per evaluated point and the weight each point carries."""
    if isinstance(mode, ExactMode):
        if not D.enumerable:
            raise NotEnumerableError(f"exact mode needs an enumerable distribution, got {type(D).__name__} over dim {D.dim}")
        points, masses = D.support_matrix()
        starts = list(range(0, points.shape[0], EXACT_CHUNK))
        logger.debug(f"exact {kind}: {points.shape[0]} support points in {len(starts)} chunks")
        parts = run_chunks(
            lambda start: min_flips_batch(h, c, points[start:start + EXACT_CHUNK], kind, rho_max),
            starts,
        )
        return np.concatenate(parts), masses

    def draw(indexed):
        index, size = indexed
        return min_flips_batch(h, c, D.sample_matrix(chunk_rng(mode.seed, index), size), kind, rho_max)

    sizes = chunk_sizes(mode.samples)
    logger.debug(f"monte carlo {kind}: {mode.samples} samples in {len(sizes)} chunks")
    flips = np.concatenate(run_chunks(draw, list(enumerate(sizes))))
    return flips, np.full(flips.size, 1.0 / mode.samples)


def _estimate(flips, weights, rho, kind, mode) -> RiskEstimate:
    if isinstance(mode, ExactMode):
        value = math.fsum(weights[flips <= rho])
        return RiskEstimate(kind=kind, rho=rho, value=min(1.0, max(0.0, value)), method="exact")
    hits = int(np.count_nonzero(flips <= rho))
    return RiskEstimate(
        kind=kind, rho=rho, value=hits / mode.samples, method="monte_carlo",
        samples_used=mode.samples, confidence_radius=hoeffding_radius(mode.samples, mode.confidence),
        seed=mode.seed,
    )


def robust_risk(h: Concept, c: Concept, D: Distribution, rho: int,
                kind: AttackKind = "exact_in_ball", mode: Optional[RiskMode] = None) -> RiskEstimate:
    if kind not in ATTACK_KINDS:
        raise InvalidParameterError(f"unknown risk kind '{kind}'")
    _check_dims(h, c, D, rho)
    mode = mode or ExactMode()
    flips, weights = _flip_profile(h, c, D, rho, kind, mode)
    return _estimate(flips, weights, rho, kind, mode)


def exact_in_ball_risk(h: Concept, c: Concept, D: Distribution, rho: int,
                       mode: Optional[RiskMode] = None) -> RiskEstimate:
    """Pr_{x~D}[some z within distance rho of x has h(z) != c(z)]."""
    return robust_risk(h, c, D, rho, "exact_in_ball", mode)


def constant_in_ball_risk(h: Concept, c: Concept, D: Distribution, rho: int,
                          mode: Optional[RiskMode] = None) -> RiskEstimate:
    """Pr_{x~D}[some z within distance rho of x has h(z) != c(x)]."""
    return robust_risk(h, c, D, rho, "constant_in_ball", mode)


def disagreement_risk(c1: Concept, c2: Concept, D: Distribution, rho: int = 0,
                      mode: Optional[RiskMode] = None) -> RiskEstimate:
    return exact_in_ball_risk(c1, c2, D, rho, mode)


def risk_curve(h: Concept, c: Concept, D: Distribution, rho_max: int,
               kind: AttackKind = "exact_in_ball", mode: Optional[RiskMode] = None) -> List[RiskEstimate]:
    """Risks for rho = 0..rho_max from a single adversary pass over the points."""
    if kind not in ATTACK_KINDS:
        raise InvalidParameterError(f"unknown risk kind '{kind}'")
    _check_dims(h, c, D, rho_max)
    mode = mode or ExactMode()
    flips, weights = _flip_profile(h, c, D, rho_max, kind, mode)
    return [_estimate(flips, weights, rho, kind, mode) for rho in range(rho_max + 1)]


def _walsh_hadamard(values: np.ndarray, n: int) -> np.ndarray:
    result = np.array(values, dtype=np.float64)
    for i in range(n):
        blocks = result.reshape(-1, 2, 1 << i)
        low, high = blocks[:, 0, :].copy(), blocks[:, 1, :].copy()
        blocks[:, 0, :] = low + high
        blocks[:, 1, :] = low - high
    return result


def ball_masses(D: Distribution, rho: int) -> np.ndarray:
    """mu(B_rho(x)) for every cube point x, indexed by code."""
    if not D.enumerable or D.dim > 20:
        raise NotEnumerableError(f"ball masses need an enumerable distribution with dim <= 20, got dim {D.dim}")
    n = D.dim
    if not 0 <= rho <= n:
        raise InvalidParameterError(f"radius must lie in [0, {n}], got {rho}")
    codes = np.arange(1 << n, dtype=np.int64)
    weight = np.zeros_like(codes)
    for i in range(n):
        weight += (codes >> i) & 1
    ball = (weight <= rho).astype(np.float64)
    # XOR convolution of the pmf with the ball indicator
    masses = _walsh_hadamard(_walsh_hadamard(D.pmf_table(), n) * _walsh_hadamard(ball, n), n) / (1 << n)
    return np.clip(masses, 0.0, 1.0)


def _ball_hits_support(D: Distribution, rho: int) -> np.ndarray:
    return distance_transform(D.pmf_table() > 0, D.dim, rho) <= rho


def min_ball_mass(D: Distribution, rho: int) -> float:
    """Smallest positive mu(B_rho(x)) over the cube."""
    masses = ball_masses(D, rho)
    return float(np.min(masses[_ball_hits_support(D, rho)]))


def robust_to_zero_risk_check(h: Concept, c: Concept, D: Distribution, rho: int,
                              kind: AttackKind = "exact_in_ball") -> bool:
    """
    Whether a robust risk below the threshold forces agreement on this instance.

    exact_in_ball: risk < min ball mass implies h = c wherever mu(B_rho(x)) > 0.
    constant_in_ball: risk < min atom mass implies h = c on the support.
    """
    _check_dims(h, c, D, rho)
    if D.dim > 20:
        raise NotEnumerableError(f"threshold checks need dim <= 20, got {D.dim}")
    risk = robust_risk(h, c, D, rho, kind).value
    table = D.pmf_table()
    if kind == "exact_in_ball":
        threshold = min_ball_mass(D, rho)
        region = _ball_hits_support(D, rho)
    else:
        threshold = float(np.min(table[table > 0]))
        region = table > 0
    if risk >= threshold - MASS_TOLERANCE:
        return True
    return bool(np.array_equal(truth_table(h)[region], truth_table(c)[region]))


@dataclass(frozen=True)
class RiskGapInstance:
    """An instance with zero constant-in-ball risk and positive exact-in-ball risk."""
    h: Concept
    c: Concept
    distribution: Table
    rho: int
    constant_in_ball: float
    exact_in_ball: float


def find_risk_gap_instance(n: int, rho: int, rng: np.random.Generator,
                           attempts: int = 1000) -> RiskGapInstance:
    """
    Search small cubes for a hypothesis that is constant around every support
    point yet disagrees with the target somewhere inside those balls.
    """
    if not 1 <= rho <= n <= 12:
        raise InvalidParameterError(f"need 1 <= rho <= n <= 12, got n={n}, rho={rho}")
    offsets = np.array([flip_mask(flip_set, n) for flip_set in ball_flip_sets(n, rho)], dtype=np.int64)
    for attempt in range(attempts):
        support = rng.choice(1 << n, size=int(rng.integers(1, 4)), replace=False)
        target = rng.random(1 << n) < 0.5
        hypothesis = rng.random(1 << n) < 0.5
        assigned = np.full(1 << n, -1)
        consistent = True
        for code in support:
            ball = code ^ offsets
            label = int(target[code])
            if np.any((assigned[ball] >= 0) & (assigned[ball] != label)):
                consistent = False
                break
            assigned[ball] = label
        if not consistent:
            continue
        hypothesis[assigned >= 0] = assigned[assigned >= 0].astype(bool)
        masses = rng.random(support.size) + 0.5
        probs = np.zeros(1 << n)
        probs[support] = masses / masses.sum()
        D = Table(n, probs)
        h, c = TruthTable.from_array(hypothesis, n), TruthTable.from_array(target, n)
        rc = constant_in_ball_risk(h, c, D, rho).value
        re = exact_in_ball_risk(h, c, D, rho).value
        if rc == 0.0 and re > 0.0:
            logger.debug(f"risk gap instance found after {attempt + 1} attempts")
            return RiskGapInstance(h, c, D, rho, rc, re)
    raise InvalidParameterError(f"no risk gap instance found in {attempts} attempts")
