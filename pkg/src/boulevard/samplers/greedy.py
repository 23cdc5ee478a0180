from __future__ import annotations

from typing import Optional

import numpy as np

from ..errors import ConfigurationError
from ..models.config import StructureConstraints
from ..models.trees import Subsample, TreeStructure
from ..trees import build_greedy_structure
from .base import StructureSampler


class GreedySampler(StructureSampler):
    """CART structures on the current gradients, searched over the subsample only (BLV)."""

    @property
    def mode_name(self) -> str:
        return "gradient_adaptive"

    @property
    def reads_gradients(self) -> bool:
        return True

    def sample(
        self,
        X: np.ndarray,
        z: Optional[np.ndarray],
        subsample: Subsample,
        constraints: StructureConstraints,
        rng: np.random.Generator,
    ) -> TreeStructure:
        if z is None:
            raise ConfigurationError("greedy structures need a gradient vector")
        return build_greedy_structure(X, z, constraints, subsample, rng)


class FrozenGreedySampler(StructureSampler):
    """
    Structure distribution frozen at a snapshot iteration.

    Greedy structures are always grown on the residual vector captured at the
    snapshot; only the subsample is fresh, so the distribution no longer moves
    with the boosting path.
    """

    def __init__(self, frozen_residuals: np.ndarray) -> None:
        self._frozen = np.array(frozen_residuals, dtype=float)
        self._frozen.setflags(write=False)

    @property
    def frozen_residuals(self) -> np.ndarray:
        return self._frozen

    @property
    def mode_name(self) -> str:
        return "frozen_gradient_adaptive"

    @property
    def reads_gradients(self) -> bool:
        return False

    def sample(
        self,
        X: np.ndarray,
        z: Optional[np.ndarray],
        subsample: Subsample,
        constraints: StructureConstraints,
        rng: np.random.Generator,
    ) -> TreeStructure:
        return build_greedy_structure(X, self._frozen, constraints, subsample, rng)
