"""
Hardness-transfer construction: from (c, D) build a majority-encoded concept
over {0,1}^{(2k+1)n+1} and the induced distribution that appends the label,
then carry learners across the encoding in both directions.
"""
from dataclasses import dataclass
from typing import Callable

from loguru import logger

from src.core.concepts import Concept, Dictator, MajorityEncoded, Pullback, maj_decode_matrix, phi_encode_matrix
from src.core.distributions import Distribution, Induced
from src.core.learners import LabeledSample
from src.core.risk import constant_in_ball_risk, disagreement_risk, exact_in_ball_risk
from src.errors import DimensionMismatchError, InvalidParameterError

SampleLearner = Callable[[LabeledSample], Concept]

K_ZERO_WARNING = "k = 0: the encoding only appends the label bit, which is pinned to 0"


@dataclass(frozen=True)
class ReductionInstance:
    base_concept: Concept
    base_distribution: Distribution
    k: int
    encoded_concept: MajorityEncoded
    induced_distribution: Induced

    @property
    def n(self) -> int:
        return self.base_concept.dim

    @property
    def dim(self) -> int:
        return self.encoded_concept.dim


def build_reduction_instance(c: Concept, D: Distribution, k: int) -> ReductionInstance:
    if c.dim != D.dim:
        raise DimensionMismatchError(D.dim, c.dim, "concept")
    return ReductionInstance(
        base_concept=c,
        base_distribution=D,
        k=k,
        encoded_concept=MajorityEncoded(c, k),
        induced_distribution=Induced(D, c, k),
    )


def encode_sample(S: LabeledSample, k: int) -> LabeledSample:
    """S' = {(phi_k(x_i, y_i), y_i)}."""
    target = MajorityEncoded(S.target, k) if S.target is not None else None
    return LabeledSample(phi_encode_matrix(S.matrix, S.labels, k), S.labels, target)


def decode_sample(S: LabeledSample, k: int) -> LabeledSample:
    width = 2 * k + 1
    if k < 0 or (S.dim - 1) % width or S.dim <= width:
        raise InvalidParameterError(f"sample dim {S.dim} is not (2k+1)n+1 for k={k}")
    n = (S.dim - 1) // width
    target = S.target.inner if isinstance(S.target, MajorityEncoded) else None
    return LabeledSample(maj_decode_matrix(S.matrix, k, n), S.labels, target)


def pac_from_robust(robust_learner: SampleLearner, S: LabeledSample, k: int) -> Concept:
    """
    Turn a robust learner for the encoded class into a learner for the base class.

    The returned hypothesis reads h' on phi_k(x, 0). When h' is itself a
    majority-encoded concept with the same k its inner concept is returned.
    """
    if k == 0:
        logger.warning(K_ZERO_WARNING)
    h_prime = robust_learner(encode_sample(S, k))
    if h_prime.dim != S.dim * (2 * k + 1) + 1:
        raise DimensionMismatchError(S.dim * (2 * k + 1) + 1, h_prime.dim, "robust hypothesis")
    if isinstance(h_prime, MajorityEncoded) and h_prime.k == k:
        return h_prime.inner
    return Pullback(h_prime, k, 0)


def robust_from_pac(pac_learner: SampleLearner, S_prime: LabeledSample, k: int) -> MajorityEncoded:
    """Decode every example by block majority, learn, and re-encode: h' = h o maj_{2k+1}."""
    return MajorityEncoded(pac_learner(decode_sample(S_prime, k)), k)


def last_bit_cheat(dim: int) -> Dictator:
    """Outputs the final coordinate, which carries the label on the induced support."""
    if dim < 1:
        raise InvalidParameterError(f"dim must be positive, got {dim}")
    return Dictator(dim, dim - 1)


@dataclass(frozen=True)
class TransportedRisks:
    standard: float
    exact_in_ball: float
    constant_in_ball: float


def transport_risks(instance: ReductionInstance, h: Concept) -> TransportedRisks:
    """Standard risk of h under D next to both k-robust risks of h o maj under D'."""
    if h.dim != instance.n:
        raise DimensionMismatchError(instance.n, h.dim, "hypothesis")
    encoded = MajorityEncoded(h, instance.k)
    c_prime, D_prime = instance.encoded_concept, instance.induced_distribution
    return TransportedRisks(
        standard=disagreement_risk(h, instance.base_concept, instance.base_distribution).value,
        exact_in_ball=exact_in_ball_risk(encoded, c_prime, D_prime, instance.k).value,
        constant_in_ball=constant_in_ball_risk(encoded, c_prime, D_prime, instance.k).value,
    )
