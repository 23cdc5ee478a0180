"""Comparison ensembles: random forest, gradient boosting and stochastic gradient boosting."""

from __future__ import annotations

import logging
from typing import List, Optional

import numpy as np

from .boosting import check_training_data
from .errors import ConfigurationError
from .models.config import StructureConstraints
from .models.ensemble import BaselineModel, EnsembleKind, IterationTrace
from .models.trees import FittedTree, Subsample
from .trees import assign_leaf_values, build_greedy_structure, build_randomized_structure, draw_subsample

logger = logging.getLogger(__name__)


def gbt_fit(
    X: np.ndarray,
    Y: np.ndarray,
    learning_rate: float,
    n_trees: int,
    constraints: StructureConstraints,
    subsample_rate: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
) -> BaselineModel:
    """
    Classic additive boosting f_{b+1} = f_b + learning_rate * t_b on residuals.

    Structures are greedy and leaf values are means over the same points that
    chose the structure. With `subsample_rate` set, each tree sees a fresh
    subsample (SGBT); otherwise every tree uses the full sample (GBT).
    """
    if learning_rate <= 0:
        raise ConfigurationError("learning_rate must be positive")
    if n_trees < 1:
        raise ConfigurationError("n_trees must be >= 1")
    points, responses = check_training_data(X, Y)
    rng = rng if rng is not None else np.random.default_rng()
    n = points.shape[0]

    fitted = np.zeros(n)
    trees: List[FittedTree] = []
    trace: List[IterationTrace] = []
    for b in range(1, n_trees + 1):
        residual = responses - fitted
        subsample = draw_subsample(n, subsample_rate, rng) if subsample_rate is not None else Subsample.full(n)
        structure = build_greedy_structure(points, residual, constraints, subsample, rng)
        tree = assign_leaf_values(structure, residual, points, subsample)
        step = learning_rate * tree.leaf_values[structure.apply(points)]
        fitted = fitted + step
        trees.append(tree)
        trace.append(
            IterationTrace(
                iteration=b,
                loss=0.5 * float(np.mean((responses - fitted) ** 2)),
                step_norm=float(np.linalg.norm(step)),
            )
        )

    kind = EnsembleKind.STOCHASTIC_GRADIENT_BOOSTING if subsample_rate is not None else EnsembleKind.GRADIENT_BOOSTING
    return BaselineModel(
        trees=trees, dimension=points.shape[1], trace=trace, kind=kind, learning_rate=learning_rate
    )


def rf_fit(
    X: np.ndarray,
    Y: np.ndarray,
    n_trees: int,
    constraints: StructureConstraints,
    theta: float,
    rng: Optional[np.random.Generator] = None,
) -> BaselineModel:
    """Average of honest completely randomized trees fitted directly to Y, each on its own subsample."""
    if n_trees < 1:
        raise ConfigurationError("n_trees must be >= 1")
    points, responses = check_training_data(X, Y)
    rng = rng if rng is not None else np.random.default_rng()
    n = points.shape[0]

    total = np.zeros(n)
    trees: List[FittedTree] = []
    trace: List[IterationTrace] = []
    for b in range(1, n_trees + 1):
        subsample = draw_subsample(n, theta, rng)
        structure = build_randomized_structure(points, constraints, rng)
        tree = assign_leaf_values(structure, responses, points, subsample)
        output = tree.leaf_values[structure.apply(points)]
        previous = total / (b - 1) if b > 1 else np.zeros(n)
        total = total + output
        trees.append(tree)
        trace.append(
            IterationTrace(
                iteration=b,
                loss=0.5 * float(np.mean((responses - total / b) ** 2)),
                step_norm=float(np.linalg.norm(total / b - previous)),
            )
        )

    return BaselineModel(trees=trees, dimension=points.shape[1], trace=trace, kind=EnsembleKind.RANDOM_FOREST)
