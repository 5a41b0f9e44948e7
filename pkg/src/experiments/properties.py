"""
Randomised property suite run by `verify` and by the tests.

Each property takes a generator and a scale factor (multiplying its case count)
and returns a PropertyResult. Failures record the first counterexample.
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product as cartesian
from typing import Callable, Dict, List, Optional

import numpy as np
from loguru import logger

from src.core.adversary import (
    distance_transform, exists_disagreement_in_ball, exists_label_change_in_ball, min_flips_batch,
    min_flips_conj_pair, min_flips_conj_pair_batch, min_flips_to_satisfy, min_flips_to_satisfy_batch,
)
from src.core.concepts import (
    MajorityEncoded, MonotoneConjunction, Parity, TruthTable, evaluate, evaluate_matrix, maj_decode,
    phi_encode, random_concept, truth_table,
)
from src.core.distributions import (
    Product, Table, Uniform, build_hiding_distribution, conditional, fix_bits, log_lipschitz_constant,
    marginal, pattern_probability, random_log_lipschitz_table, total_variation, verify_log_lipschitz,
)
from src.core.hypercube import (
    BallSpec, Point, ball_flip_sets, ball_size, codes_to_matrix, cube_matrix, enumerate_ball, flip, flip_mask,
)
from src.core.learners import (
    LabeledSample, agreement_probability, exact_learn_membership, learn_monotone_conjunction,
    max_agreement_sample_size,
)
from src.core.parallel import stream_rng
from src.core.reduction import build_reduction_instance, transport_risks
from src.core.risk import (
    MonteCarloMode, constant_in_ball_risk, exact_in_ball_risk, robust_to_zero_risk_check,
)
from src.errors import InvalidParameterError, TrivialPairError


@dataclass
class PropertyResult:
    name: str
    passed: bool
    cases: int
    detail: Optional[str] = None


def _cases(base: int, scale: float) -> int:
    return max(1, int(round(base * scale)))


def _random_conj(n: int, rng: np.random.Generator) -> MonotoneConjunction:
    return MonotoneConjunction(n, frozenset(np.flatnonzero(rng.random(n) < 0.4).tolist()))


def _random_point(n: int, rng: np.random.Generator) -> Point:
    return Point.from_array(rng.random(n) < 0.5)


def _brute_min_flips(h, c, x: Point, kind: str) -> float:
    best = math.inf
    for z in enumerate_ball(BallSpec(x, x.dim)):
        reference = evaluate(c, z) if kind == "exact_in_ball" else evaluate(c, x)
        if evaluate(h, z) != reference:
            best = min(best, bin(z.bits ^ x.bits).count("1"))
    return best


@lru_cache(maxsize=None)
def _ball_offsets(n: int, rho: int) -> np.ndarray:
    """Flip masks of a radius-rho ball, one row per flip set."""
    masks = np.array([flip_mask(flip_set, n) for flip_set in ball_flip_sets(n, rho)], dtype=np.int64)
    return codes_to_matrix(masks, n)


def _brute_min_flips_within(h, c, x: Point, rho: int) -> float:
    """Fewest flips to a disagreement inside the radius-rho ball; inf if there is none."""
    offsets = _ball_offsets(x.dim, rho)
    ball = offsets ^ x.to_array()
    hits = evaluate_matrix(h, ball) != evaluate_matrix(c, ball)
    return float(offsets[hits].sum(axis=1).min()) if hits.any() else math.inf


def ball_enumeration(rng, scale) -> PropertyResult:
    cases = 0
    for n in range(1, 9):
        for rho in range(n + 1):
            center = _random_point(n, rng)
            points = list(enumerate_ball(BallSpec(center, rho)))
            cases += 1
            if len(points) != ball_size(n, rho) or len(set(points)) != len(points):
                return PropertyResult("ball_enumeration", False, cases, f"n={n}, rho={rho}")
    return PropertyResult("ball_enumeration", True, cases)


def conj_pair_fast_path(rng, scale) -> PropertyResult:
    """Closed-form conjunction-pair flips against a small-ball search and, over every cube point, the distance table."""
    cases = _cases(10000, scale)
    for _ in range(cases):
        n = int(rng.integers(2, 15))
        rho = int(rng.integers(0, min(3, n) + 1))
        c1, c2, x = _random_conj(n, rng), _random_conj(n, rng), _random_point(n, rng)
        fast = min_flips_conj_pair(c1, c2, x)
        if fast != min_flips_conj_pair(c2, c1, x):
            return PropertyResult("conj_pair_fast_path", False, cases, f"asymmetric: {c1} vs {c2} at {x}")
        if (fast if fast <= rho else math.inf) != _brute_min_flips_within(c1, c2, x, rho):
            return PropertyResult("conj_pair_fast_path", False, cases, f"{c1} vs {c2} at {x}, rho={rho}")
    pairs = _cases(20, scale)
    for n in range(1, 13):
        cube = cube_matrix(n)
        for _ in range(pairs):
            c1, c2 = _random_conj(n, rng), _random_conj(n, rng)
            cases += 1
            expected = distance_transform(truth_table(c1) != truth_table(c2), n)
            if not np.array_equal(min_flips_conj_pair_batch(c1, c2, cube), expected):
                return PropertyResult("conj_pair_fast_path", False, cases, f"cube of n={n}: {c1} vs {c2}")
    return PropertyResult("conj_pair_fast_path", True, cases)


def satisfy_fast_path(rng, scale) -> PropertyResult:
    cases = _cases(200, scale)
    for _ in range(cases):
        n = int(rng.integers(1, 9))
        c, x = _random_conj(n, rng), _random_point(n, rng)
        brute = min(
            (bin(z.bits ^ x.bits).count("1") for z in enumerate_ball(BallSpec(x, n)) if evaluate(c, z)),
            default=math.inf,
        )
        if min_flips_to_satisfy(c, x) != brute:
            return PropertyResult("satisfy_fast_path", False, cases, f"{c} at {x}")
    for n in range(1, 13):
        cube = cube_matrix(n)
        c = _random_conj(n, rng)
        cases += 1
        if not np.array_equal(min_flips_to_satisfy_batch(c, cube), distance_transform(truth_table(c), n)):
            return PropertyResult("satisfy_fast_path", False, cases, f"cube of n={n}: {c}")
    return PropertyResult("satisfy_fast_path", True, cases)


def engine_paths_agree(rng, scale) -> PropertyResult:
    """Every adversary path returns brute-force minimum flips, for both predicates."""
    cases = _cases(60, scale)
    for _ in range(cases):
        n = int(rng.integers(2, 8))
        kind = ("exact_in_ball", "constant_in_ball")[int(rng.integers(2))]
        h, c = random_concept(n, rng), random_concept(n, rng)
        X = rng.random((8, n)) < 0.5
        flips = min_flips_batch(h, c, X, kind)
        for row, x in zip(X, flips):
            if x != _brute_min_flips(h, c, Point.from_array(row), kind):
                return PropertyResult("engine_paths_agree", False, cases, f"{kind}: {h} vs {c}")
    return PropertyResult("engine_paths_agree", True, cases)


def majority_fast_path(rng, scale) -> PropertyResult:
    cases = _cases(30, scale)
    for _ in range(cases):
        n, k = int(rng.integers(1, 4)), int(rng.integers(0, 2))
        h = MajorityEncoded(random_concept(n, rng), k)
        c = MajorityEncoded(random_concept(n, rng), k)
        kind = ("exact_in_ball", "constant_in_ball")[int(rng.integers(2))]
        X = rng.random((4, h.dim)) < 0.5
        flips = min_flips_batch(h, c, X, kind)
        for row, value in zip(X, flips):
            if value != _brute_min_flips(h, c, Point.from_array(row), kind):
                return PropertyResult("majority_fast_path", False, cases, f"{kind}: {h} vs {c}")
    return PropertyResult("majority_fast_path", True, cases)


def witness_validity(rng, scale) -> PropertyResult:
    cases = _cases(100, scale)
    for _ in range(cases):
        n = int(rng.integers(2, 9))
        h, c, x = random_concept(n, rng), random_concept(n, rng), _random_point(n, rng)
        rho = int(rng.integers(0, n + 1))
        for attack in (exists_disagreement_in_ball, exists_label_change_in_ball):
            result = attack(h, c, x, rho)
            if result.feasible != (result.min_flips <= rho):
                return PropertyResult("witness_validity", False, cases, f"{attack.__name__}: {h}, {c}, {x}")
            if result.feasible and bin(result.witness.bits ^ x.bits).count("1") > rho:
                return PropertyResult("witness_validity", False, cases, f"witness outside ball at {x}")
    return PropertyResult("witness_validity", True, cases)


def triangle_inequality(rng, scale) -> PropertyResult:
    cases = _cases(1000, scale)
    for _ in range(cases):
        n = int(rng.integers(2, 11))
        c1, c2, h = (random_concept(n, rng) for _ in range(3))
        D = random_log_lipschitz_table(n, 4.0, rng)
        rho = int(rng.integers(0, 3))
        lhs = exact_in_ball_risk(c1, c2, D, rho).value
        rhs = exact_in_ball_risk(c1, h, D, rho).value + exact_in_ball_risk(c2, h, D, rho).value
        if lhs > rhs + 1e-12:
            return PropertyResult("triangle_inequality", False, cases, f"{c1}, {c2}, {h}, rho={rho}")
    return PropertyResult("triangle_inequality", True, cases)


def risk_monotone_in_rho(rng, scale) -> PropertyResult:
    cases = _cases(50, scale)
    for _ in range(cases):
        n = int(rng.integers(2, 9))
        h, c = random_concept(n, rng), random_concept(n, rng)
        D = random_log_lipschitz_table(n, 3.0, rng)
        for risk in (exact_in_ball_risk, constant_in_ball_risk):
            values = [risk(h, c, D, rho).value for rho in range(n + 1)]
            if any(b < a - 1e-12 for a, b in zip(values, values[1:])):
                return PropertyResult("risk_monotone_in_rho", False, cases, f"{risk.__name__}: {h}, {c}")
        standard = exact_in_ball_risk(h, c, D, 0).value
        if abs(constant_in_ball_risk(h, c, D, 0).value - standard) > 1e-12:
            return PropertyResult("risk_monotone_in_rho", False, cases, f"rho=0 risks differ: {h}, {c}")
    return PropertyResult("risk_monotone_in_rho", True, cases)


def robust_to_zero(rng, scale) -> PropertyResult:
    cases = _cases(1000, scale)
    for _ in range(cases):
        n = int(rng.integers(2, 11))
        h, c = random_concept(n, rng), random_concept(n, rng)
        probs = np.where(rng.random(1 << n) < 0.3, rng.random(1 << n), 0.0)
        probs[int(rng.integers(1 << n))] += 0.1
        D = Table(n, probs / probs.sum())
        rho = int(rng.integers(0, n + 1))
        for kind in ("exact_in_ball", "constant_in_ball"):
            if not robust_to_zero_risk_check(h, c, D, rho, kind):
                return PropertyResult("robust_to_zero", False, cases, f"{kind}: {h}, {c}, rho={rho}")
    return PropertyResult("robust_to_zero", True, cases)


def monte_carlo_consistency(rng, scale) -> PropertyResult:
    runs = _cases(1000, scale)
    n = 8
    h, c = MonotoneConjunction(n, frozenset({0, 1, 2})), MonotoneConjunction(n, frozenset({3, 4}))
    D = Product(tuple(rng.uniform(0.3, 0.7, n)))
    exact = exact_in_ball_risk(h, c, D, 1).value
    misses = 0
    for run in range(runs):
        estimate = exact_in_ball_risk(h, c, D, 1, MonteCarloMode(samples=2000, seed=run))
        misses += abs(estimate.value - exact) > estimate.confidence_radius
    # At least 99% of the runs must land within their Hoeffding radius
    passed = misses <= math.floor(0.01 * runs)
    return PropertyResult("monte_carlo_consistency", passed, runs, None if passed else f"{misses} misses")


def hiding_lower_bound(rng, scale) -> PropertyResult:
    cases = _cases(40, scale)
    checked = 0
    for _ in range(cases):
        n = int(rng.integers(2, 9))
        c1, c2 = _random_conj(n, rng), _random_conj(n, rng)
        eta = float(rng.uniform(0.01, 0.3))
        try:
            D, _ = build_hiding_distribution(c1, c2, eta)
        except TrivialPairError:
            continue
        checked += 1
        relevant = len(c1.relevant_positions() | c2.relevant_positions())
        if exact_in_ball_risk(c1, c2, D, 1).value < (1.0 - eta) ** relevant - 1e-12:
            return PropertyResult("hiding_lower_bound", False, checked, f"{c1} vs {c2}, eta={eta}")
    return PropertyResult("hiding_lower_bound", True, checked)


def log_lipschitz_closed_form(rng, scale) -> PropertyResult:
    cases = _cases(50, scale)
    for _ in range(cases):
        n = int(rng.integers(1, 9))
        D = Product(tuple(rng.uniform(0.05, 0.95, n)))
        scanned = log_lipschitz_constant(Table(n, D.pmf_table()))
        if not math.isclose(log_lipschitz_constant(D), scanned, rel_tol=1e-9):
            return PropertyResult("log_lipschitz_closed_form", False, cases, f"p={D.p}")
    return PropertyResult("log_lipschitz_closed_form", True, cases)


def sampler_matches_pmf(rng, scale) -> PropertyResult:
    cases = _cases(10, scale)
    for index in range(cases):
        n = int(rng.integers(2, 7))
        D = random_log_lipschitz_table(n, 5.0, rng)
        samples = D.sample_matrix(stream_rng(index, 0, 0), 50000)
        # Expected TV of an empirical histogram is about sqrt(2^n / m)
        if total_variation(D, samples) > 2.0 * math.sqrt((1 << n) / 50000):
            return PropertyResult("sampler_matches_pmf", False, cases, f"table over n={n}")
    return PropertyResult("sampler_matches_pmf", True, cases)


def elimination_learner_properties(rng, scale) -> PropertyResult:
    """Consistency, maximality and order independence."""
    cases = _cases(100, scale)
    for _ in range(cases):
        n = int(rng.integers(1, 13))
        target = _random_conj(n, rng)
        S = LabeledSample.draw(Uniform(n), target, int(rng.integers(0, 40)), rng)
        h = learn_monotone_conjunction(S)
        consistent = LabeledSample(S.matrix, S.labels, h).is_realizable()
        if not consistent or not target.vars <= h.vars or learn_monotone_conjunction(S.shuffled(rng)) != h:
            return PropertyResult("elimination_learner", False, cases, f"target {target}")
    return PropertyResult("elimination_learner", True, cases)


def membership_round_trip(rng, scale) -> PropertyResult:
    cases = _cases(100, scale)
    for _ in range(cases):
        n = int(rng.integers(1, 17))
        target = _random_conj(n, rng)
        queries = []

        def oracle(x):
            queries.append(x)
            return evaluate(target, x)

        if exact_learn_membership(oracle, n) != target or len(queries) != n + 1:
            return PropertyResult("membership_round_trip", False, cases, f"target {target}")
    return PropertyResult("membership_round_trip", True, cases)


def sample_size_formulas(rng, scale) -> PropertyResult:
    for l in range(1, 41):
        m = max_agreement_sample_size(l)
        if agreement_probability(l, m) < 0.5 or agreement_probability(l, m + 1) >= 0.5:
            return PropertyResult("sample_size_formulas", False, l, f"l={l}, m={m}")
    return PropertyResult("sample_size_formulas", True, 40)


def encoding_round_trip(rng, scale) -> PropertyResult:
    cases = 0
    for n, k in cartesian(range(1, 6), range(0, 3)):
        for bits in range(1 << n):
            x = Point(n, bits)
            for label in (0, 1):
                cases += 1
                if maj_decode(phi_encode(x, label, k), k, n) != x:
                    return PropertyResult("encoding_round_trip", False, cases, f"x={x}, k={k}")
    return PropertyResult("encoding_round_trip", True, cases)


def perturbation_stability(rng, scale) -> PropertyResult:
    """Every z within k flips of phi_k(x, b) decodes to x (exhaustive at n = 3, k = 1)."""
    n, k = 3, 1
    cases = 0
    for bits in range(1 << n):
        x = Point(n, bits)
        for label in (0, 1):
            for z in enumerate_ball(BallSpec(phi_encode(x, label, k), k)):
                cases += 1
                if maj_decode(z, k, n) != x:
                    return PropertyResult("perturbation_stability", False, cases, f"z={z}")
    randomized = _cases(2000, scale)
    n, k = 8, 3
    for _ in range(randomized):
        x = _random_point(n, rng)
        z = phi_encode(x, int(rng.integers(2)), k)
        flips = rng.choice(z.dim, size=int(rng.integers(0, k + 1)), replace=False).tolist()
        cases += 1
        if maj_decode(flip(z, flips), k, n) != x:
            return PropertyResult("perturbation_stability", False, cases, f"x={x}, flips={flips}")
    return PropertyResult("perturbation_stability", True, cases)


def induced_and_transport(rng, scale) -> PropertyResult:
    cases = _cases(20, scale)
    for _ in range(cases):
        n, k = int(rng.integers(1, 5)), int(rng.integers(0, 3))
        c, h = random_concept(n, rng), random_concept(n, rng)
        D = random_log_lipschitz_table(n, 2.0, rng)
        instance = build_reduction_instance(c, D, k)
        _, masses = instance.induced_distribution.support_matrix()
        if abs(math.fsum(masses) - 1.0) > 1e-12:
            return PropertyResult("induced_and_transport", False, cases, "induced pmf does not sum to 1")
        for bits in range(1 << n):
            x = Point(n, bits)
            z = phi_encode(x, evaluate(c, x), k)
            if instance.induced_distribution.pmf(z) != D.pmf(x):
                return PropertyResult("induced_and_transport", False, cases, f"pmf mismatch at {x}")
        risks = transport_risks(instance, h)
        if abs(risks.standard - risks.exact_in_ball) > 1e-12:
            return PropertyResult("induced_and_transport", False, cases, f"transport failed for {h} vs {c}")
    return PropertyResult("induced_and_transport", True, cases)


def parity_constant_in_ball(rng, scale) -> PropertyResult:
    """Every nonempty parity on 8 bits has constant-in-ball risk 1 against itself, then random tables."""
    cases = 0
    D = Uniform(8)
    for mask in range(1, 1 << 8):
        f = Parity(8, frozenset(i for i in range(8) if mask >> i & 1))
        cases += 1
        if abs(constant_in_ball_risk(f, f, D, 1).value - 1.0) > 1e-12:
            return PropertyResult("parity_constant_in_ball", False, cases, str(f))
    for _ in range(_cases(20, scale)):
        n = int(rng.integers(1, 9))
        index_set = frozenset(np.flatnonzero(rng.random(n) < 0.5).tolist()) or frozenset({0})
        f = Parity(n, index_set)
        cases += 1
        if abs(constant_in_ball_risk(f, f, random_log_lipschitz_table(n, 2.0, rng), 1).value - 1.0) > 1e-12:
            return PropertyResult("parity_constant_in_ball", False, cases, str(f))
    return PropertyResult("parity_constant_in_ball", True, cases)


def log_lipschitz_facts(rng, scale) -> PropertyResult:
    """
    For random alpha-log-Lipschitz tables (alpha cycling through 1, 2, 3):
    every bit takes each value with probability in [1/(1+alpha), alpha/(1+alpha)],
    marginals and conditionals (then marginals) stay alpha-log-Lipschitz, and a
    fixed pattern on S has mass at least (1/(1+alpha))^|S|.
    """
    cases = _cases(100, scale)
    for index in range(cases):
        alpha = float(index % 3 + 1)
        low, high = 1.0 / (1.0 + alpha), alpha / (1.0 + alpha)
        n = int(rng.integers(2, 11))
        D = random_log_lipschitz_table(n, alpha, rng)
        label = f"alpha={alpha:g}, n={n}, table {index}"
        for i in range(n):
            for b in (0, 1):
                mass = pattern_probability(D, {i: b})
                if not low - 1e-12 <= mass <= high + 1e-12:
                    return PropertyResult("log_lipschitz_facts", False, index + 1, f"{label}: Pr[x_{i}={b}]={mass}")

        S = sorted(rng.choice(n, size=int(rng.integers(1, n)), replace=False).tolist())
        if not verify_log_lipschitz(marginal(D, S), alpha):
            return PropertyResult("log_lipschitz_facts", False, index + 1, f"{label}: marginal dropping {S}")
        assignment = {i: int(rng.integers(2)) for i in S}
        conditioned = conditional(D, *fix_bits(assignment))
        if not verify_log_lipschitz(conditioned, alpha):
            return PropertyResult("log_lipschitz_facts", False, index + 1, f"{label}: conditional on {assignment}")
        if conditioned.dim > 1:
            drop = rng.choice(conditioned.dim, size=int(rng.integers(1, conditioned.dim)), replace=False).tolist()
            if not verify_log_lipschitz(marginal(conditioned, drop), alpha):
                return PropertyResult("log_lipschitz_facts", False, index + 1, f"{label}: conditional then marginal")

        if pattern_probability(D, assignment) < low ** len(S) - 1e-12:
            return PropertyResult("log_lipschitz_facts", False, index + 1, f"{label}: {assignment} below the floor")

        # Products with every p_i in [1/(1+alpha), alpha/(1+alpha)] meet the ceiling as well
        P = Product(tuple(rng.uniform(low, high, n)))
        mass = pattern_probability(P, assignment)
        if not verify_log_lipschitz(P, alpha) or not low ** len(S) - 1e-12 <= mass <= high ** len(S) + 1e-12:
            return PropertyResult("log_lipschitz_facts", False, index + 1, f"{label}: product p={P.p}")
    return PropertyResult("log_lipschitz_facts", True, cases)


def truth_table_path(rng, scale) -> PropertyResult:
    """Distance-table answers at large radius equal brute force at the same radius."""
    cases = _cases(20, scale)
    for _ in range(cases):
        n = int(rng.integers(3, 9))
        h = TruthTable.from_array(rng.random(1 << n) < 0.1, n)
        c = TruthTable.from_array(rng.random(1 << n) < 0.1, n)
        x = _random_point(n, rng)
        rho = int(rng.integers(0, n + 1))
        result = exists_disagreement_in_ball(h, c, x, rho)
        expected = _brute_min_flips(h, c, x, "exact_in_ball")
        if result.feasible != (expected <= rho):
            return PropertyResult("truth_table_path", False, cases, f"{h} vs {c} at {x}")
    return PropertyResult("truth_table_path", True, cases)


PROPERTIES: Dict[str, Callable] = {
    "ball_enumeration": ball_enumeration,
    "conj_pair_fast_path": conj_pair_fast_path,
    "satisfy_fast_path": satisfy_fast_path,
    "engine_paths_agree": engine_paths_agree,
    "majority_fast_path": majority_fast_path,
    "truth_table_path": truth_table_path,
    "witness_validity": witness_validity,
    "triangle_inequality": triangle_inequality,
    "risk_monotone_in_rho": risk_monotone_in_rho,
    "robust_to_zero": robust_to_zero,
    "monte_carlo_consistency": monte_carlo_consistency,
    "hiding_lower_bound": hiding_lower_bound,
    "parity_constant_in_ball": parity_constant_in_ball,
    "log_lipschitz_closed_form": log_lipschitz_closed_form,
    "log_lipschitz_facts": log_lipschitz_facts,
    "sampler_matches_pmf": sampler_matches_pmf,
    "elimination_learner": elimination_learner_properties,
    "membership_round_trip": membership_round_trip,
    "sample_size_formulas": sample_size_formulas,
    "encoding_round_trip": encoding_round_trip,
    "perturbation_stability": perturbation_stability,
    "induced_and_transport": induced_and_transport,
}


def run_properties(seed: int = 0, scale: float = 1.0, only: Optional[List[str]] = None) -> List[PropertyResult]:
    """Run the suite (or the named subset) with one generator stream per property."""
    names = list(PROPERTIES) if not only else only
    unknown = [name for name in names if name not in PROPERTIES]
    if unknown:
        raise InvalidParameterError(f"unknown properties: {', '.join(unknown)}. Available: {', '.join(PROPERTIES)}")
    results = []
    for index, name in enumerate(PROPERTIES):
        if name not in names:
            continue
        result = PROPERTIES[name](stream_rng(seed, 3, index), scale)
        if result.passed:
            logger.info(f" → {name}: ok ({result.cases} cases)")
        else:
            logger.error(f" → {name}: FAILED after {result.cases} cases: {result.detail}")
        results.append(result)
    return results
