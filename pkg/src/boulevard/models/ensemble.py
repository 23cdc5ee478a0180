from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import ClassVar, Iterator, List, Optional

import numpy as np
from pydantic import Field

from .base import RecordModel
from .config import BoulevardConfig
from .trees import FittedTree, as_points


class IterationTrace(RecordModel):
    """Per-iteration bookkeeping of a boosting run."""

    table_name: ClassVar[str] = "iteration_trace"

    iteration: int = Field(description="1-based tree index b.")
    loss: float = Field(description="Training loss after this iteration.")
    step_norm: float = Field(description="Euclidean norm of the change in fitted values.")
    clipped: int = Field(default=0, description="Number of fitted values truncated before computing residuals.")


class EnsembleKind(str, Enum):
    BOULEVARD = "boulevard"
    RANDOM_FOREST = "rf"
    GRADIENT_BOOSTING = "gbt"
    STOCHASTIC_GRADIENT_BOOSTING = "sgbt"


@dataclass(frozen=True, eq=False)
class SnapshotState:
    """Tail-snapshot bookkeeping: b* and the residual vector the structure distribution is frozen on."""

    loss_threshold: float
    b_star: Optional[int] = None
    frozen_residuals: Optional[np.ndarray] = None

    @property
    def reached(self) -> bool:
        return self.b_star is not None


@dataclass(frozen=True, eq=False)
class TreeEnsemble:
    """Ordered fitted trees over [0, 1]^d."""

    trees: List[FittedTree]
    dimension: int
    trace: List[IterationTrace] = field(default_factory=list)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def tree_outputs(self, X: np.ndarray) -> Iterator[np.ndarray]:
        points = as_points(X, self.dimension)
        for tree in self.trees:
            yield tree.predict(points)

    def staged_predict(self, X: np.ndarray) -> Iterator[np.ndarray]:
        raise NotImplementedError

    def predict(self, X: np.ndarray) -> np.ndarray:
        prediction = None
        for prediction in self.staged_predict(X):
            pass
        if prediction is None:
            return np.zeros(np.atleast_2d(X).shape[0])
        return prediction


@dataclass(frozen=True, eq=False)
class BoulevardModel(TreeEnsemble):
    """
    Boulevard ensemble. The raw prediction is (lambda / B) * sum_b t_b(x);
    the rescaled prediction multiplies it by (1 + lambda) / lambda.
    """

    config: BoulevardConfig = field(default_factory=BoulevardConfig)
    truncation_M: float = 0.0
    fitted: Optional[np.ndarray] = None
    snapshot: Optional[SnapshotState] = None
    kind: EnsembleKind = EnsembleKind.BOULEVARD

    @property
    def lambda_(self) -> float:
        return self.config.lambda_

    @property
    def rescale(self) -> float:
        return (1 + self.config.lambda_) / self.config.lambda_

    def staged_predict(self, X: np.ndarray, rescaled: bool = False) -> Iterator[np.ndarray]:
        factor = self.rescale if rescaled else 1.0
        total = None
        for b, output in enumerate(self.tree_outputs(X), start=1):
            total = output.copy() if total is None else total + output
            yield factor * self.lambda_ * total / b

    def predict(self, X: np.ndarray, rescaled: bool = False) -> np.ndarray:
        points = as_points(X, self.dimension)
        total = np.zeros(points.shape[0])
        for output in self.tree_outputs(points):
            total += output
        raw = self.lambda_ * total / max(self.n_trees, 1)
        return self.rescale * raw if rescaled else raw


@dataclass(frozen=True, eq=False)
class BaselineModel(TreeEnsemble):
    """Random forest (tree average) or additive gradient boosting (learning-rate-weighted sum)."""

    kind: EnsembleKind = EnsembleKind.RANDOM_FOREST
    learning_rate: float = 1.0

    def staged_predict(self, X: np.ndarray) -> Iterator[np.ndarray]:
        total = None
        for b, output in enumerate(self.tree_outputs(X), start=1):
            total = output.copy() if total is None else total + output
            if self.kind is EnsembleKind.RANDOM_FOREST:
                yield total / b
            else:
                yield self.learning_rate * total
