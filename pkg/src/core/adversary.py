"""
Decide whether a perturbation of at most rho bits produces a disagreement
(exact-in-ball) or a label change (constant-in-ball).

The core primitive is the minimum number of flips, computed for a whole matrix
of query points at once. Paths, tried in order:

    conjunction fast path     closed form for monotone conjunctions
    majority fast path        majority-encoded concepts, weighted on the inner cube
    distance table            breadth-first Hamming distances, dim <= 20
    brute force               canonical ball enumeration up to rho
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, islice
from typing import Literal, Optional, Tuple, Union

import numpy as np
from loguru import logger

from src.config import settings
from src.core.concepts import (
    Concept, MajorityEncoded, MonotoneConjunction, as_conjunction, evaluate, evaluate_matrix,
    truth_table,
)
from src.core.hypercube import Point, ball_size, flip_axis_view, hamming_distance, matrix_to_codes
from src.errors import AdversaryError, DimensionMismatchError, IntractableError, InvalidParameterError

AttackKind = Literal["exact_in_ball", "constant_in_ball"]
ATTACK_KINDS = ("exact_in_ball", "constant_in_ball")
# Widest cube handled by distance tables
TABLE_DIM = 20
_ROW_BUDGET = 1 << 18

Flips = Union[int, float]


@dataclass(frozen=True)
class AttackResult:
    """
    Outcome of one ball query.

    Attributes:
        feasible: Whether some z in the ball satisfies the predicate
        min_flips: Fewest flips reaching such a z, or inf
        witness: The z reached, when feasible
        searched_radius: Radius up to which min_flips is exact; an inf min_flips
            with searched_radius < dim means only that nothing lies that close
    """
    feasible: bool
    min_flips: Flips
    witness: Optional[Point] = None
    searched_radius: int = 0


def min_flips_conj_pair(c1: MonotoneConjunction, c2: MonotoneConjunction, x: Point) -> Flips:
    if c1.dim != c2.dim:
        raise DimensionMismatchError(c1.dim, c2.dim, "concept")
    if x.dim != c1.dim:
        raise DimensionMismatchError(c1.dim, x.dim)
    return min(_orientation_cost(c1, c2, x.bits), _orientation_cost(c2, c1, x.bits))


def _orientation_cost(make_true: MonotoneConjunction, make_false: MonotoneConjunction, bits: int) -> Flips:
    extra = make_false.mask & ~make_true.mask
    if not extra:
        return math.inf
    zeros = bin(make_true.mask & ~bits).count("1")
    return zeros + (0 if extra & ~bits else 1)


def min_flips_conj_pair_batch(c1: MonotoneConjunction, c2: MonotoneConjunction, X: np.ndarray) -> np.ndarray:
    return np.minimum(_orientation_cost_rows(c1, c2, X), _orientation_cost_rows(c2, c1, X))


def _orientation_cost_rows(make_true, make_false, X):
    extra = sorted(make_false.vars - make_true.vars)
    if not extra:
        return np.full(X.shape[0], np.inf)
    zeros = (~X[:, sorted(make_true.vars)]).sum(axis=1)
    has_zero = (~X[:, extra]).any(axis=1)
    return (zeros + np.where(has_zero, 0, 1)).astype(np.float64)


def min_flips_to_satisfy(c: MonotoneConjunction, x: Point) -> int:
    if x.dim != c.dim:
        raise DimensionMismatchError(c.dim, x.dim)
    return bin(c.mask & ~x.bits).count("1")


def min_flips_to_satisfy_batch(c: MonotoneConjunction, X: np.ndarray) -> np.ndarray:
    return (~X[:, sorted(c.vars)]).sum(axis=1).astype(np.float64)


def distance_transform(target: np.ndarray, n: int, max_radius: Optional[int] = None) -> np.ndarray:
    """
    Hamming distance from every cube point to the set `target` (a boolean
    table indexed by code); inf where the set is empty or farther than max_radius.
    """
    distances = np.where(target, 0.0, np.inf)
    frontier = np.asarray(target, dtype=bool)
    limit = n if max_radius is None else max_radius
    for radius in range(1, limit + 1):
        reached = np.zeros_like(frontier)
        for position in range(n):
            reached |= flip_axis_view(frontier, n, position)
        frontier = reached & np.isinf(distances)
        if not frontier.any():
            break
        distances[frontier] = radius
    return distances


@lru_cache(maxsize=32)
def _disagreement_distances(h: Concept, c: Concept) -> np.ndarray:
    logger.debug(f"building disagreement distance table for {h} vs {c}")
    return distance_transform(truth_table(h) != truth_table(c), h.dim)


@lru_cache(maxsize=32)
def _value_distances(h: Concept) -> Tuple[np.ndarray, np.ndarray]:
    """Distances to {h = 0} and to {h = 1}."""
    values = truth_table(h)
    return distance_transform(~values, h.dim), distance_transform(values, h.dim)


def _check_query(h: Concept, c: Concept, dim: int, rho: Optional[int], kind: str):
    if h.dim != c.dim:
        raise DimensionMismatchError(c.dim, h.dim, "hypothesis")
    if dim != c.dim:
        raise DimensionMismatchError(c.dim, dim)
    if rho is not None and not 0 <= rho <= dim:
        raise InvalidParameterError(f"radius must lie in [0, {dim}], got {rho}")
    if kind not in ATTACK_KINDS:
        raise InvalidParameterError(f"unknown attack kind '{kind}'")


def _conjunction_path(h, c, X, kind, want_witness):
    h_conj = as_conjunction(h)
    if h_conj is None:
        return None
    if kind == "exact_in_ball":
        c_conj = as_conjunction(c)
        if c_conj is None:
            return None
        flips = min_flips_conj_pair_batch(h_conj, c_conj, X)
        witnesses = None
        if want_witness:
            witnesses = np.array([_conj_pair_witness(h_conj, c_conj, row) for row in X])
        return flips, witnesses

    labels = evaluate_matrix(c, X)
    h_now = evaluate_matrix(h_conj, X)
    to_true = min_flips_to_satisfy_batch(h_conj, X)
    to_false = np.where(h_now, 1.0 if h_conj.vars else np.inf, 0.0)
    flips = np.where(labels, to_false, to_true)
    witnesses = None
    if want_witness:
        witnesses = X.copy()
        for row, label in enumerate(labels):
            if label and h_now[row] and h_conj.vars:
                witnesses[row, min(h_conj.vars)] = False
            elif not label:
                witnesses[row, sorted(h_conj.vars)] = True
    return flips, witnesses


def _conj_pair_witness(c1, c2, row):
    bits = Point.from_array(row).bits
    first, second = _orientation_cost(c1, c2, bits), _orientation_cost(c2, c1, bits)
    make_true, make_false = (c1, c2) if first <= second else (c2, c1)
    z = row.copy()
    if math.isinf(min(first, second)):
        return z
    z[sorted(make_true.vars)] = True
    extra = sorted(make_false.vars - make_true.vars)
    if z[extra].all():
        z[extra[0]] = False
    return z


def _majority_path(h, c, X, kind, want_witness):
    if not isinstance(h, MajorityEncoded) or h.inner.dim > TABLE_DIM:
        return None
    k, n = h.k, h.inner.dim
    if kind == "exact_in_ball":
        if not isinstance(c, MajorityEncoded) or c.k != k:
            return None
        targets = {None: truth_table(h.inner) != truth_table(c.inner)}
        distances = {None: _disagreement_distances(h.inner, c.inner)}
        row_keys = [None] * X.shape[0]
    else:
        values = truth_table(h.inner)
        targets = {False: values, True: ~values}
        to_zero, to_one = _value_distances(h.inner)
        distances = {False: to_one, True: to_zero}
        row_keys = evaluate_matrix(c, X).tolist()

    width = 2 * k + 1
    ones = X[:, : n * width].reshape(X.shape[0], n, width).sum(axis=2)
    decoded = ones > k
    # Flipping a decoded bit costs the block's majority size minus k
    weights = np.maximum(ones, width - ones) - k
    codes = matrix_to_codes(decoded)

    flips = np.empty(X.shape[0])
    witnesses = X.copy() if want_witness else None
    for row in range(X.shape[0]):
        key = row_keys[row]
        uniform = bool(np.all(weights[row] == weights[row, 0]))
        if uniform and not want_witness:
            flips[row] = weights[row, 0] * distances[key][codes[row]]
            continue
        candidates = np.flatnonzero(targets[key])
        if candidates.size == 0:
            flips[row] = np.inf
            continue
        differing = ((candidates[:, None] ^ codes[row]) >> np.arange(n)) & 1
        costs = differing @ weights[row]
        best = int(np.argmin(costs))
        flips[row] = costs[best]
        if want_witness:
            for i in np.flatnonzero(differing[best]):
                block = witnesses[row, i * width:(i + 1) * width]
                majority = bool(decoded[row, i])
                agreeing = np.flatnonzero(block == majority)[: weights[row, i]]
                block[agreeing] = not majority
    return flips, witnesses


def _table_path(h, c, X, kind, want_witness):
    codes = matrix_to_codes(X)
    if kind == "exact_in_ball":
        distances = _disagreement_distances(h, c)
        flips = distances[codes]
        row_tables = [distances] * X.shape[0]
    else:
        to_zero, to_one = _value_distances(h)
        labels = evaluate_matrix(c, X)
        flips = np.where(labels, to_zero[codes], to_one[codes])
        row_tables = [to_zero if label else to_one for label in labels]
    witnesses = None
    if want_witness:
        witnesses = np.array([
            _descend(table, int(code), X.shape[1]) for table, code in zip(row_tables, codes)
        ])
    return flips, witnesses


def _descend(distances: np.ndarray, code: int, n: int) -> np.ndarray:
    # Walk to the target set, one flip per step
    current = code
    while np.isfinite(distances[current]) and distances[current] > 0:
        for position in range(n):
            neighbour = current ^ (1 << position)
            if distances[neighbour] == distances[current] - 1:
                current = neighbour
                break
    return ((current >> np.arange(n)) & 1).astype(bool)


def _flip_sets_matrix(flip_sets, n):
    masks = np.zeros((len(flip_sets), n), dtype=bool)
    if flip_sets and flip_sets[0]:
        masks[np.arange(len(flip_sets))[:, None], np.array(flip_sets)] = True
    return masks


def _brute_force(h, c, X, rho, kind, want_witness):
    m, n = X.shape
    size = ball_size(n, rho)
    if size > settings.intractable_limit:
        raise IntractableError(size, settings.intractable_limit)
    flips = np.full(m, np.inf)
    witnesses = X.copy() if want_witness else None
    labels = evaluate_matrix(c, X) if kind == "constant_in_ball" else None
    pending = np.arange(m)
    for radius in range(rho + 1):
        flip_sets = combinations(range(n), radius)
        while pending.size:
            chunk = list(islice(flip_sets, max(1, _ROW_BUDGET // pending.size)))
            if not chunk:
                break
            masks = _flip_sets_matrix(chunk, n)
            perturbed = X[pending][:, None, :] ^ masks[None, :, :]
            flat = perturbed.reshape(-1, n)
            h_values = evaluate_matrix(h, flat).reshape(pending.size, len(chunk))
            if labels is None:
                other = evaluate_matrix(c, flat).reshape(pending.size, len(chunk))
            else:
                other = labels[pending][:, None]
            hits = h_values != other
            found = hits.any(axis=1)
            if found.any():
                first = hits.argmax(axis=1)
                flips[pending[found]] = radius
                if want_witness:
                    witnesses[pending[found]] = perturbed[found, first[found]]
                pending = pending[~found]
        if not pending.size:
            break
    return flips, witnesses


def _solve(h, c, X, rho, kind, want_witness=False) -> Tuple[np.ndarray, Optional[np.ndarray], int]:
    n = X.shape[1]
    for name, path in (("conjunction", _conjunction_path), ("majority", _majority_path)):
        result = path(h, c, X, kind, want_witness)
        if result is not None:
            logger.debug(f"{kind}: {name} fast path for {X.shape[0]} points")
            return result[0], result[1], n
    if n <= TABLE_DIM and (rho is None or X.shape[0] * ball_size(n, rho) > (1 << n)):
        logger.debug(f"{kind}: distance table path over dim {n}")
        flips, witnesses = _table_path(h, c, X, kind, want_witness)
        return flips, witnesses, n
    if rho is None:
        raise InvalidParameterError(f"a search radius is required above dim {TABLE_DIM} without a fast path")
    logger.debug(f"{kind}: brute force to radius {rho} for {X.shape[0]} points")
    flips, witnesses = _brute_force(h, c, X, rho, kind, want_witness)
    return flips, witnesses, rho


def min_flips_batch(h: Concept, c: Concept, X: np.ndarray, kind: AttackKind = "exact_in_ball",
                    rho: Optional[int] = None) -> np.ndarray:
    """
    Minimum flips for every row of X.

    Args:
        h: Hypothesis
        c: Target concept
        X: Boolean matrix of query points, one per row
        kind: "exact_in_ball" (h(z) != c(z)) or "constant_in_ball" (h(z) != c(x))
        rho: Search radius; entries larger than rho may be reported as inf.
            Required only when brute force is the only available path.

    Returns:
        np.ndarray: float array, inf where no witness exists within the searched radius
    """
    X = np.atleast_2d(np.asarray(X, dtype=bool))
    _check_query(h, c, X.shape[1], rho, kind)
    return _solve(h, c, X, rho, kind)[0]


def _certify(h, c, x, z, rho, kind):
    if hamming_distance(x, z) > rho:
        raise AdversaryError(f"witness {z} lies outside the radius-{rho} ball around {x}")
    reference = evaluate(c, z) if kind == "exact_in_ball" else evaluate(c, x)
    if evaluate(h, z) == reference:
        raise AdversaryError(f"witness {z} does not satisfy the {kind} predicate")


def _attack(h, c, x, rho, kind) -> AttackResult:
    _check_query(h, c, x.dim, rho, kind)
    flips, witnesses, searched = _solve(h, c, x.to_array()[None, :], rho, kind, want_witness=True)
    min_flips = flips[0]
    feasible = bool(min_flips <= rho)
    if math.isfinite(min_flips):
        min_flips = int(min_flips)
    witness = None
    if feasible:
        witness = Point.from_array(witnesses[0])
        _certify(h, c, x, witness, rho, kind)
    return AttackResult(feasible, min_flips, witness, searched)


def exists_disagreement_in_ball(h: Concept, c: Concept, x: Point, rho: int) -> AttackResult:
    """Is there z within distance rho of x with h(z) != c(z)?"""
    return _attack(h, c, x, rho, "exact_in_ball")


def exists_label_change_in_ball(h: Concept, c: Concept, x: Point, rho: int) -> AttackResult:
    """Is there z within distance rho of x with h(z) != c(x)?"""
    return _attack(h, c, x, rho, "constant_in_ball")
