from __future__ import annotations

import numpy as np
import pytest

from boulevard.baselines import gbt_fit, rf_fit
from boulevard.errors import ConfigurationError
from boulevard.models.config import StructureConstraints
from boulevard.models.ensemble import EnsembleKind


def _sample(n: int = 80, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = rng.random((n, 2))
    Y = np.sin(3 * X[:, 0]) + X[:, 1] + rng.normal(scale=0.05, size=n)
    return X, Y


def test_single_gbt_tree_with_unit_rate_predicts_the_mean():
    X, Y = _sample(n=15)
    model = gbt_fit(X, Y, learning_rate=1.0, n_trees=1, constraints=StructureConstraints(min_leaf_samples=15))
    np.testing.assert_allclose(model.predict(np.array([[0.2, 0.9], [0.6, 0.1]])), Y.mean())
    assert model.kind is EnsembleKind.GRADIENT_BOOSTING


def test_full_sample_gbt_training_loss_never_increases():
    X, Y = _sample()
    model = gbt_fit(X, Y, 0.3, 25, StructureConstraints(min_leaf_samples=3), rng=np.random.default_rng(1))
    losses = np.array([entry.loss for entry in model.trace])
    assert np.all(np.diff(losses) <= 1e-12)
    np.testing.assert_allclose(list(model.staged_predict(X))[-1], model.predict(X))


def test_stochastic_gbt_uses_fresh_subsamples():
    X, Y = _sample()
    model = gbt_fit(X, Y, 0.1, 5, StructureConstraints(min_leaf_samples=3), subsample_rate=0.5, rng=np.random.default_rng(2))
    assert model.kind is EnsembleKind.STOCHASTIC_GRADIENT_BOOSTING
    assert all(tree.subsample.size == 40 for tree in model.trees)
    assert len({tuple(tree.subsample.indices) for tree in model.trees}) > 1


def test_gbt_rejects_bad_arguments():
    X, Y = _sample(n=10)
    with pytest.raises(ConfigurationError):
        gbt_fit(X, Y, 0.0, 5, StructureConstraints(min_leaf_samples=2))
    with pytest.raises(ConfigurationError):
        gbt_fit(X, Y, 0.1, 0, StructureConstraints(min_leaf_samples=2))


def test_forest_on_a_constant_response_is_constant():
    X = np.random.default_rng(3).random((40, 3))
    model = rf_fit(X, np.full(40, 2.5), 10, StructureConstraints(min_leaf_samples=4), theta=1.0, rng=np.random.default_rng(4))
    np.testing.assert_allclose(model.predict(np.random.default_rng(5).random((20, 3))), 2.5)
    assert model.kind is EnsembleKind.RANDOM_FOREST


def test_forest_prediction_is_the_tree_average():
    X, Y = _sample()
    model = rf_fit(X, Y, 6, StructureConstraints(min_leaf_samples=5), theta=0.7, rng=np.random.default_rng(6))
    queries = np.random.default_rng(7).random((10, 2))
    average = np.mean([tree.predict(queries) for tree in model.trees], axis=0)
    np.testing.assert_allclose(model.predict(queries), average)


def test_baselines_are_reproducible_from_the_generator():
    X, Y = _sample()
    constraints = StructureConstraints(min_leaf_samples=4)
    a = rf_fit(X, Y, 5, constraints, 0.8, rng=np.random.default_rng(8))
    b = rf_fit(X, Y, 5, constraints, 0.8, rng=np.random.default_rng(8))
    np.testing.assert_array_equal(a.predict(X), b.predict(X))


def test_forest_variance_shrinks_like_one_over_the_tree_count():
    X, Y = _sample(n=60, seed=8)
    constraints = StructureConstraints(min_leaf_samples=3)
    x = np.array([[0.4, 0.6]])

    def spread(n_trees: int) -> float:
        predictions = [
            rf_fit(X, Y, n_trees, constraints, theta=0.5, rng=np.random.default_rng(seed)).predict(x)[0]
            for seed in range(300)
        ]
        return float(np.var(predictions, ddof=1))

    ratio = spread(16) / spread(1)
    assert 1 / 32 <= ratio <= 1 / 8
