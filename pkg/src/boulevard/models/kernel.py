from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field


class KernelMode(str, Enum):
    MONTE_CARLO = "monte_carlo"
    EXHAUSTIVE = "exhaustive"
    ENSEMBLE = "ensemble"


@dataclass(frozen=True, eq=False)
class StructureMatrix:
    """Stacked structure vectors of the full sample; row i is s_n(x_i; w)."""

    entries: np.ndarray

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])


@dataclass(frozen=True, eq=False)
class KernelEstimate:
    """
    Estimate of E_{q,w}[S_n].

    `query_matrix` holds E[s_n(x)] for the query points supplied to the
    estimator (one row per query), and `std_error` the entrywise Monte Carlo
    standard error of `matrix` when the estimate is sampled.
    """

    matrix: np.ndarray
    replications: int
    mode: KernelMode
    asymmetry: float = 0.0
    std_error: Optional[np.ndarray] = None
    query_matrix: Optional[np.ndarray] = None
    query_std_error: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])


@dataclass(frozen=True, eq=False)
class FixedPoint:
    """Solution y* of (I/lambda + K) y* = K Y with its defining-equation residual."""

    y_star: np.ndarray
    lambda_: float
    residual_norm: float


class PropertyCheck(BaseModel):
    name: str
    value: float
    limit: float
    passed: bool


class KernelPropertyReport(BaseModel):
    """Symmetry, nonnegativity, positive semi-definiteness and norm bounds of a kernel."""

    tolerance: float
    max_asymmetry: PropertyCheck
    min_entry: PropertyCheck
    min_eigenvalue: PropertyCheck
    max_column_sum: PropertyCheck
    max_row_sum: PropertyCheck
    spectral_norm: PropertyCheck
    notes: List[str] = Field(default_factory=list)

    @property
    def checks(self) -> List[PropertyCheck]:
        return [
            self.max_asymmetry,
            self.min_entry,
            self.min_eigenvalue,
            self.max_column_sum,
            self.max_row_sum,
            self.spectral_norm,
        ]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)
