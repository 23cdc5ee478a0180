"""Tree structures, honest leaf valuation and structure vectors.

Structures partition [0, 1]^d. Randomized structures are drawn from the
covariates and an rng only; greedy structures split on a gradient vector
restricted to a subsample. Leaf values are always computed from a subsample,
with 0/0 defined to be 0.
"""

from __future__ import annotations

import logging
from typing import Any, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from .errors import ConfigurationError, DimensionError
from .models.config import StructureConstraints
from .models.trees import FittedTree, Subsample, TreeStructure, as_points

logger = logging.getLogger(__name__)

# Rejection budget for a randomized split that keeps both children above the leaf floor
MAX_SPLIT_ATTEMPTS = 32

# Relative tolerance under which two greedy split impurities are equal
SPLIT_TIE_RTOL = 1e-10

Layout = Union[None, Tuple[int, float, Any, Any]]


class _NodeTable:
    """Accumulates nodes in pre-order and freezes them into a TreeStructure."""

    def __init__(self, dimension: int) -> None:
        self.dimension = dimension
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.leaf_id: List[int] = []
        self.lowers: List[np.ndarray] = []
        self.uppers: List[np.ndarray] = []
        self.max_depth = 0

    def leaf(self, lower: np.ndarray, upper: np.ndarray, depth: int) -> int:
        node = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_id.append(len(self.lowers))
        self.lowers.append(lower.copy())
        self.uppers.append(upper.copy())
        self.max_depth = max(self.max_depth, depth)
        return node

    def split(self, feature: int, threshold: float) -> int:
        node = len(self.feature)
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_id.append(-1)
        return node

    def freeze(self) -> TreeStructure:
        return TreeStructure(
            dimension=self.dimension,
            feature=np.asarray(self.feature),
            threshold=np.asarray(self.threshold),
            left=np.asarray(self.left),
            right=np.asarray(self.right),
            leaf_id=np.asarray(self.leaf_id),
            leaf_lower=np.vstack(self.lowers),
            leaf_upper=np.vstack(self.uppers),
            depth=self.max_depth,
        )


def _children_bounds(
    lower: np.ndarray, upper: np.ndarray, feature: int, threshold: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    left_upper = upper.copy()
    left_upper[feature] = threshold
    right_lower = lower.copy()
    right_lower[feature] = threshold
    return lower, left_upper, right_lower, upper


def _should_stop(
    lower: np.ndarray, upper: np.ndarray, count: int, depth: int, constraints: StructureConstraints
) -> bool:
    if depth >= constraints.max_depth:
        return True
    if count < 2 * constraints.min_leaf_samples:
        return True
    cap = constraints.max_leaf_diameter
    return cap is not None and float(np.linalg.norm(upper - lower)) <= cap


def _check_build_inputs(X: np.ndarray, constraints: StructureConstraints) -> np.ndarray:
    points = np.atleast_2d(np.asarray(X, dtype=float))
    points = as_points(points, points.shape[1])
    n, d = points.shape
    constraints.check_dimension(d)
    if constraints.min_leaf_samples > n:
        raise ConfigurationError(
            f"min_leaf_samples={constraints.min_leaf_samples} exceeds the sample size n={n}"
        )
    return points


def draw_subsample(n: int, theta: float, rng: np.random.Generator) -> Subsample:
    """Draw round(theta * n) distinct indices, halves rounded up."""
    if not 0 < theta <= 1:
        raise ConfigurationError("theta must lie in (0, 1]")
    size = int(np.floor(theta * n + 0.5))
    if size < 1:
        raise ConfigurationError(f"theta * n = {theta * n:.4g} leaves an empty subsample")
    if size == n:
        return Subsample(indices=np.arange(n), population=n, theta=theta)
    indices = np.sort(rng.choice(n, size=size, replace=False))
    return Subsample(indices=indices, population=n, theta=theta)


def build_randomized_structure(
    X: np.ndarray, constraints: StructureConstraints, rng: np.random.Generator
) -> TreeStructure:
    """
    Completely randomized structure.

    Each split draws a feature uniformly and a threshold uniformly over the
    current cell's extent, resampling up to MAX_SPLIT_ATTEMPTS times until both
    children keep at least `min_leaf_samples` points of X. Responses are never
    read.
    """
    points = _check_build_inputs(X, constraints)
    n, d = points.shape
    k = constraints.min_leaf_samples
    table = _NodeTable(d)

    def grow(lower: np.ndarray, upper: np.ndarray, rows: np.ndarray, depth: int) -> int:
        if _should_stop(lower, upper, rows.size, depth, constraints):
            return table.leaf(lower, upper, depth)

        for _ in range(MAX_SPLIT_ATTEMPTS):
            feature = int(rng.integers(d))
            threshold = float(rng.uniform(lower[feature], upper[feature]))
            if threshold <= lower[feature]:
                continue
            goes_left = points[rows, feature] < threshold
            n_left = int(goes_left.sum())
            if n_left >= k and rows.size - n_left >= k:
                break
        else:
            return table.leaf(lower, upper, depth)

        node = table.split(feature, threshold)
        left_lower, left_upper, right_lower, right_upper = _children_bounds(lower, upper, feature, threshold)
        table.left[node] = grow(left_lower, left_upper, rows[goes_left], depth + 1)
        table.right[node] = grow(right_lower, right_upper, rows[~goes_left], depth + 1)
        return node

    grow(np.zeros(d), np.ones(d), np.arange(n), 0)
    return table.freeze()


def _best_split(
    points: np.ndarray, z: np.ndarray, rows: np.ndarray, k: int
) -> Optional[Tuple[int, float]]:
    """
    Lowest-impurity axis split of `rows`; ties go to the lowest feature, then threshold.

    Impurities within SPLIT_TIE_RTOL * sum(z^2) of the minimum count as ties.
    """
    m = rows.size
    sizes = np.arange(1, m)
    legal_size = (sizes >= k) & (m - sizes >= k)
    if not legal_size.any():
        return None

    values = z[rows]
    candidates: List[Tuple[int, np.ndarray, np.ndarray]] = []
    for feature in range(points.shape[1]):
        order = np.argsort(points[rows, feature], kind="mergesort")
        xs = points[rows, feature][order]
        zs = values[order]
        csum = np.cumsum(zs)
        csq = np.cumsum(zs * zs)

        left_sse = csq[:-1] - csum[:-1] ** 2 / sizes
        right_sum = csum[-1] - csum[:-1]
        right_sse = (csq[-1] - csq[:-1]) - right_sum**2 / (m - sizes)

        legal = legal_size & (xs[:-1] < xs[1:])
        if legal.any():
            candidates.append((feature, xs, np.where(legal, left_sse + right_sse, np.inf)))

    if not candidates:
        return None
    lowest = min(float(impurity.min()) for _, _, impurity in candidates)
    cutoff = lowest + SPLIT_TIE_RTOL * float(np.sum(values * values))
    for feature, xs, impurity in candidates:
        tied = np.flatnonzero(impurity <= cutoff)
        if tied.size:
            pos = int(tied[0])
            threshold = 0.5 * (xs[pos] + xs[pos + 1])
            if threshold <= xs[pos]:
                threshold = float(xs[pos + 1])
            return feature, float(threshold)
    return None


def build_greedy_structure(
    X: np.ndarray,
    z: np.ndarray,
    constraints: StructureConstraints,
    subsample: Subsample,
    rng: Optional[np.random.Generator] = None,
) -> TreeStructure:
    """
    CART structure on the subsample points.

    Each node takes the axis split minimising the summed within-child squared
    deviation of z; nodes with constant z become leaves. `rng` is accepted for
    interface symmetry with the randomized builder; the search is deterministic.
    """
    points = _check_build_inputs(X, constraints)
    n, d = points.shape
    gradients = np.asarray(z, dtype=float)
    if gradients.shape != (n,):
        raise DimensionError(f"z must have length {n}")
    if not np.all(np.isfinite(gradients)):
        raise ConfigurationError("gradients must be finite")
    if subsample.population != n:
        raise DimensionError("subsample was drawn for a different sample size")

    k = constraints.min_leaf_samples
    table = _NodeTable(d)

    def grow(lower: np.ndarray, upper: np.ndarray, rows: np.ndarray, depth: int) -> int:
        if _should_stop(lower, upper, rows.size, depth, constraints) or np.ptp(gradients[rows]) == 0:
            return table.leaf(lower, upper, depth)
        split = _best_split(points, gradients, rows, k)
        if split is None:
            return table.leaf(lower, upper, depth)

        feature, threshold = split
        goes_left = points[rows, feature] < threshold
        node = table.split(feature, threshold)
        left_lower, left_upper, right_lower, right_upper = _children_bounds(lower, upper, feature, threshold)
        table.left[node] = grow(left_lower, left_upper, rows[goes_left], depth + 1)
        table.right[node] = grow(right_lower, right_upper, rows[~goes_left], depth + 1)
        return node

    grow(np.zeros(d), np.ones(d), subsample.indices.copy(), 0)
    return table.freeze()


def explicit_structure(dimension: int, layout: Layout) -> TreeStructure:
    """
    Structure from nested `(feature, threshold, left, right)` tuples; `None` is a leaf.

    >>> explicit_structure(1, (0, 0.5, None, None)).leaf_count
    2
    """
    table = _NodeTable(dimension)

    def grow(lower: np.ndarray, upper: np.ndarray, node_layout: Layout, depth: int) -> int:
        if node_layout is None:
            return table.leaf(lower, upper, depth)
        feature, threshold, left_layout, right_layout = node_layout
        if not 0 <= feature < dimension:
            raise ConfigurationError(f"feature index {feature} out of range")
        if not lower[feature] < threshold < upper[feature]:
            raise ConfigurationError(f"threshold {threshold} outside the cell on feature {feature}")
        node = table.split(int(feature), float(threshold))
        left_lower, left_upper, right_lower, right_upper = _children_bounds(lower, upper, feature, threshold)
        table.left[node] = grow(left_lower, left_upper, left_layout, depth + 1)
        table.right[node] = grow(right_lower, right_upper, right_layout, depth + 1)
        return node

    grow(np.zeros(dimension), np.ones(dimension), layout, 0)
    return table.freeze()


def assign_leaf_values(
    structure: TreeStructure, z: np.ndarray, X: np.ndarray, subsample: Subsample
) -> FittedTree:
    """Leaf value = mean of z over the subsample members in the leaf, 0 for leaves the subsample misses."""
    values = np.asarray(z, dtype=float)
    if values.shape != (subsample.population,):
        raise DimensionError(f"z must have length {subsample.population}")
    members = subsample.indices
    leaves = structure.apply(np.asarray(X, dtype=float)[members])
    m = structure.leaf_count
    counts = np.bincount(leaves, minlength=m)
    sums = np.bincount(leaves, weights=values[members], minlength=m)
    leaf_values = np.divide(sums, counts, out=np.zeros(m), where=counts > 0)
    return FittedTree(structure=structure, subsample=subsample, leaf_values=leaf_values, leaf_counts=counts)


def leaf_of(structure: TreeStructure, x: np.ndarray) -> int:
    return structure.leaf_of(x)


def structure_vectors_at(
    structure: TreeStructure, X: np.ndarray, subsample: Subsample, queries: np.ndarray
) -> np.ndarray:
    """Rows are s_n(q; w) for each query q: uniform weight on subsample members sharing q's leaf."""
    sample_leaves = structure.apply(X)
    in_subsample = subsample.mask()
    counts = np.bincount(sample_leaves[in_subsample], minlength=structure.leaf_count)
    query_leaves = structure.apply(queries)
    denominators = counts[query_leaves]
    weights = np.divide(1.0, denominators, out=np.zeros(query_leaves.shape[0]), where=denominators > 0)
    same_leaf = (query_leaves[:, None] == sample_leaves[None, :]) & in_subsample[None, :]
    return same_leaf * weights[:, None]


def structure_vector(structure: TreeStructure, X: np.ndarray, subsample: Subsample, x: np.ndarray) -> np.ndarray:
    return structure_vectors_at(structure, X, subsample, np.asarray(x, dtype=float)[None, :])[0]


def predict_tree(tree: FittedTree, x: np.ndarray) -> Union[float, np.ndarray]:
    """Leaf value at x; a matrix of points returns one value per row."""
    point = np.asarray(x, dtype=float)
    if point.ndim == 1:
        return float(tree.predict(point[None, :])[0])
    return tree.predict(point)


class ConstraintReport(BaseModel):
    """Per-leaf sample counts and diameters checked against the constraints they were built under."""

    leaf_counts: List[int]
    leaf_diameters: List[float]
    min_leaf_count: int
    max_leaf_diameter: float
    count_violations: List[int] = Field(default_factory=list, description="Leaves below the sample floor.")
    diameter_violations: List[int] = Field(default_factory=list, description="Leaves above the diameter cap.")

    @property
    def satisfied(self) -> bool:
        return not self.count_violations and not self.diameter_violations


def constraint_report(
    structure: TreeStructure, X: np.ndarray, constraints: StructureConstraints
) -> ConstraintReport:
    """
    Count sample points of X per leaf and compare against the floor and the
    diameter cap. Diameter violations are expected when the depth budget ran
    out first; they are reported, not raised.
    """
    counts = np.bincount(structure.apply(X), minlength=structure.leaf_count)
    diameters = structure.leaf_diameters()
    cap = constraints.max_leaf_diameter
    count_violations = np.flatnonzero(counts < constraints.min_leaf_samples).tolist()
    diameter_violations = [] if cap is None else np.flatnonzero(diameters > cap + 1e-12).tolist()
    if diameter_violations:
        logger.info("%d leaves exceed the diameter cap %.4g", len(diameter_violations), cap)
    return ConstraintReport(
        leaf_counts=counts.tolist(),
        leaf_diameters=diameters.tolist(),
        min_leaf_count=int(counts.min()),
        max_leaf_diameter=float(diameters.max()),
        count_violations=count_violations,
        diameter_violations=diameter_violations,
    )
