from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from ..models.config import StructureConstraints
from ..models.trees import Subsample, TreeStructure


class StructureSampler(ABC):
    """
    Abstract source of tree structures for one boosting iteration.

    Every structure distribution (completely randomized, gradient-greedy,
    frozen snapshot) implements this interface, so the boosting loop and the
    kernel estimators never branch on the kind of tree they grow.

    Sampler responsibilities:
    1. Draw a TreeStructure given the covariates, the subsample and an rng
    2. Declare whether the draw reads the gradient vector (`reads_gradients`)
    """

    @property
    @abstractmethod
    def mode_name(self) -> str:
        """Identifier used in configs, manifests and model files."""
        ...

    @property
    @abstractmethod
    def reads_gradients(self) -> bool:
        """False when structures are independent of the responses."""
        ...

    @abstractmethod
    def sample(
        self,
        X: np.ndarray,
        z: Optional[np.ndarray],
        subsample: Subsample,
        constraints: StructureConstraints,
        rng: np.random.Generator,
    ) -> TreeStructure:
        ...
