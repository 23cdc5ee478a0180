from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..errors import ConfigurationError, DimensionError, DomainError


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def as_points(X: np.ndarray, dimension: int) -> np.ndarray:
    """Coerce to an (m, d) float matrix and reject anything outside [0, 1]^d."""
    points = np.atleast_2d(np.asarray(X, dtype=float))
    if points.shape[1] != dimension:
        raise DimensionError(f"expected points with {dimension} coordinates, got {points.shape[1]}")
    if points.size and not (np.all(points >= 0.0) and np.all(points <= 1.0)):
        raise DomainError("points must lie in the unit cube [0, 1]^d")
    return points


@dataclass(frozen=True)
class Cell:
    """Axis-aligned hyper-rectangle [lower, upper) inside the unit cube; closed at 1."""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.lower) != len(self.upper):
            raise DimensionError("cell bounds must have equal length")
        for lo, hi in zip(self.lower, self.upper):
            if not 0.0 <= lo < hi <= 1.0:
                raise ConfigurationError(f"invalid cell side [{lo}, {hi}]")

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.subtract(self.upper, self.lower)))

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    def contains(self, x: np.ndarray) -> bool:
        for value, lo, hi in zip(x, self.lower, self.upper):
            if value < lo:
                return False
            if value >= hi and not (hi == 1.0 and value == 1.0):
                return False
        return True


@dataclass(frozen=True, eq=False)
class Subsample:
    """Sorted sample indices w drawn without replacement from {0..n-1}."""

    indices: np.ndarray
    population: int
    theta: float

    def __post_init__(self) -> None:
        indices = np.asarray(self.indices, dtype=np.int64)
        if indices.size and (np.any(np.diff(indices) <= 0) or indices[0] < 0 or indices[-1] >= self.population):
            raise ConfigurationError("subsample indices must be sorted, unique and inside the population")
        object.__setattr__(self, "indices", _readonly(indices))

    @property
    def size(self) -> int:
        return int(self.indices.size)

    def mask(self) -> np.ndarray:
        mask = np.zeros(self.population, dtype=bool)
        mask[self.indices] = True
        return mask

    @classmethod
    def full(cls, n: int) -> "Subsample":
        return cls(indices=np.arange(n), population=n, theta=1.0)


@dataclass(frozen=True, eq=False)
class TreeStructure:
    """
    Binary partition of [0, 1]^d into leaf cells, structure only.

    Nodes are stored in flat arrays with the root at index 0. Internal nodes
    carry (feature, threshold, left, right); leaves carry feature -1 and a leaf
    id into `leaf_lower`/`leaf_upper`. A point goes left when
    x[feature] < threshold.
    """

    dimension: int
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_id: np.ndarray
    leaf_lower: np.ndarray
    leaf_upper: np.ndarray
    depth: int = field(default=0)

    def __post_init__(self) -> None:
        for name, dtype in (
            ("feature", np.int64),
            ("threshold", float),
            ("left", np.int64),
            ("right", np.int64),
            ("leaf_id", np.int64),
            ("leaf_lower", float),
            ("leaf_upper", float),
        ):
            object.__setattr__(self, name, _readonly(np.array(getattr(self, name), dtype=dtype)))

    @property
    def leaf_count(self) -> int:
        return int(self.leaf_lower.shape[0])

    @property
    def node_count(self) -> int:
        return int(self.feature.shape[0])

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf id of every row of X."""
        points = as_points(X, self.dimension)
        node = np.zeros(points.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            current = node[rows]
            go_right = points[rows, self.feature[current]] >= self.threshold[current]
            node[rows] = np.where(go_right, self.right[current], self.left[current])
            active = self.feature[node] >= 0
        return self.leaf_id[node]

    def leaf_of(self, x: np.ndarray) -> int:
        point = np.asarray(x, dtype=float)
        if point.ndim != 1:
            raise DimensionError("leaf_of expects a single point")
        return int(self.apply(point[None, :])[0])

    def cell(self, leaf: int) -> Cell:
        return Cell(lower=tuple(self.leaf_lower[leaf].tolist()), upper=tuple(self.leaf_upper[leaf].tolist()))

    def cells(self) -> List[Cell]:
        return [self.cell(leaf) for leaf in range(self.leaf_count)]

    def leaf_diameters(self) -> np.ndarray:
        return np.linalg.norm(self.leaf_upper - self.leaf_lower, axis=1)


@dataclass(frozen=True, eq=False)
class FittedTree:
    """A structure plus honest leaf values computed from one subsample."""

    structure: TreeStructure
    subsample: Subsample
    leaf_values: np.ndarray
    leaf_counts: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "leaf_values", _readonly(np.array(self.leaf_values, dtype=float)))
        object.__setattr__(self, "leaf_counts", _readonly(np.array(self.leaf_counts, dtype=np.int64)))
        if self.leaf_values.shape[0] != self.structure.leaf_count:
            raise DimensionError("one leaf value per leaf is required")

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.leaf_values[self.structure.apply(X)]
