from __future__ import annotations

from typing import Optional

import numpy as np

from ..models.config import StructureConstraints
from ..models.trees import Subsample, TreeStructure
from ..trees import build_randomized_structure
from .base import StructureSampler


class RandomizedSampler(StructureSampler):
    """Completely randomized structures (rBLV); gradients and subsample are ignored."""

    @property
    def mode_name(self) -> str:
        return "randomized"

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
        return build_randomized_structure(X, constraints, rng)
