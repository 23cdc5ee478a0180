"""Fit and evaluate any of the five compared methods from a ModelRecipe."""

from __future__ import annotations

import logging
from typing import Optional, Union

import numpy as np

from ..baselines import gbt_fit, rf_fit
from ..boosting import boulevard_fit
from ..models.data import Method, ModelRecipe
from ..models.ensemble import BaselineModel, BoulevardModel

logger = logging.getLogger(__name__)

FittedModel = Union[BoulevardModel, BaselineModel]


def fit_recipe(recipe: ModelRecipe, X: np.ndarray, Y: np.ndarray, rng: np.random.Generator) -> FittedModel:
    logger.debug("Fitting %s with %d trees on n=%d", recipe.method.value, recipe.n_trees, len(Y))
    if recipe.method in (Method.BLV, Method.RBLV):
        return boulevard_fit(X, Y, recipe.boulevard_config(), rng)
    if recipe.method is Method.RF:
        return rf_fit(X, Y, recipe.n_trees, recipe.constraints(), recipe.theta, rng)
    return gbt_fit(
        X,
        Y,
        recipe.learning_rate,
        recipe.n_trees,
        recipe.constraints(),
        subsample_rate=recipe.theta if recipe.method is Method.SGBT else None,
        rng=rng,
    )


def predict_model(model: FittedModel, X: np.ndarray) -> np.ndarray:
    """Predictions on the response scale: Boulevard models are rescaled by (1 + lambda) / lambda."""
    if isinstance(model, BoulevardModel):
        return model.predict(X, rescaled=True)
    return model.predict(X)


def staged_mse(model: FittedModel, X: np.ndarray, target: np.ndarray, every: Optional[int] = None) -> np.ndarray:
    """Mean squared error against `target` after each tree (or every `every` trees, always ending at B)."""
    target = np.asarray(target, dtype=float)
    if isinstance(model, BoulevardModel):
        stages = model.staged_predict(X, rescaled=True)
    else:
        stages = model.staged_predict(X)
    curve = np.array([np.mean((prediction - target) ** 2) for prediction in stages])
    if every is None or every <= 1:
        return curve
    keep = np.arange(every - 1, curve.shape[0], every)
    if keep.size == 0 or keep[-1] != curve.shape[0] - 1:
        keep = np.append(keep, curve.shape[0] - 1)
    return curve[keep]
