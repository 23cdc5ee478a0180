from __future__ import annotations

import numpy as np
import pytest

from boulevard.boosting import (
    boulevard_fit,
    boulevard_predict,
    convergence_trace,
    tail_snapshot_fit,
    truncate,
    truncation_level,
)
from boulevard.errors import ConfigurationError, DimensionError, DomainError
from boulevard.kernel import fixed_point, kernel_from_ensemble
from boulevard.models.config import BoulevardConfig, StructureConstraints, StructureMode
from boulevard.models.ensemble import BoulevardModel
from boulevard.models.trees import Subsample
from boulevard.trees import assign_leaf_values, explicit_structure


def _single_leaf_config(n: int, **overrides) -> BoulevardConfig:
    values = dict(theta=1.0, constraints=StructureConstraints(min_leaf_samples=n))
    values.update(overrides)
    return BoulevardConfig(**values)


def _scalar_recursion(c: float, lam: float, steps: int) -> np.ndarray:
    a = np.empty(steps)
    previous = 0.0
    for b in range(1, steps + 1):
        previous = ((b - 1) / b) * previous + (lam / b) * (c - previous)
        a[b - 1] = previous
    return a


def _sample(n: int = 60, d: int = 2, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    Y = X[:, 0] + 0.5 * X[:, 1] + rng.normal(scale=0.1, size=n)
    return X, Y


def test_constant_response_follows_the_scalar_recursion():
    n, c, lam = 10, 3.0, 0.8
    X = np.random.default_rng(1).random((n, 1))
    model = boulevard_fit(X, np.full(n, c), _single_leaf_config(n, lambda_=lam, n_trees=400))
    expected = _scalar_recursion(c, lam, 400)
    np.testing.assert_allclose(model.fitted, np.full(n, expected[-1]), rtol=1e-12)
    np.testing.assert_allclose(boulevard_predict(model, X, rescaled=False), model.fitted, rtol=1e-12)


def test_constant_response_converges_to_the_shrunk_limit():
    c, lam = 2.0, 0.5
    assert abs(_scalar_recursion(c, lam, 5000)[-1] - lam / (1 + lam) * c) <= 1e-3

    X = np.random.default_rng(2).random((8, 1))
    model = boulevard_fit(X, np.full(8, c), _single_leaf_config(8, lambda_=lam, n_trees=2000))
    assert boulevard_predict(model, np.array([0.5])) == pytest.approx(c, abs=1e-2)


def test_single_tree_with_unit_shrinkage_predicts_the_mean():
    X, Y = _sample(n=12)
    model = boulevard_fit(X, Y, _single_leaf_config(12, n_trees=1, lambda_=0.999999))
    lam = model.lambda_
    assert boulevard_predict(model, np.array([0.3, 0.3]), rescaled=False) == pytest.approx(lam * Y.mean())
    assert boulevard_predict(model, np.array([0.3, 0.3])) == pytest.approx((1 + lam) * Y.mean())


def test_rescaled_prediction_is_raw_times_the_factor():
    X, Y = _sample()
    config = BoulevardConfig(n_trees=30, lambda_=0.6, constraints=StructureConstraints(min_leaf_samples=4))
    model = boulevard_fit(X, Y, config)
    queries = np.random.default_rng(3).random((15, 2))
    raw = boulevard_predict(model, queries, rescaled=False)
    np.testing.assert_allclose(boulevard_predict(model, queries), raw * (1.6 / 0.6))


def test_staged_predictions_end_at_the_final_prediction():
    X, Y = _sample()
    model = boulevard_fit(X, Y, BoulevardConfig(n_trees=15, constraints=StructureConstraints(min_leaf_samples=4)))
    stages = list(model.staged_predict(X))
    assert len(stages) == 15
    np.testing.assert_allclose(stages[-1], model.predict(X))
    np.testing.assert_allclose(model.fitted, model.predict(X), atol=1e-12)


def test_empty_leaf_query_predicts_zero():
    X = np.array([[0.1], [0.2], [0.7], [0.8]])
    structure = explicit_structure(1, (0, 0.5, None, None))
    subsample = Subsample(indices=np.array([2, 3]), population=4, theta=0.5)
    tree = assign_leaf_values(structure, np.array([1.0, 2.0, 3.0, 4.0]), X, subsample)
    model = BoulevardModel(trees=[tree, tree], dimension=1, config=BoulevardConfig(n_trees=2))
    assert boulevard_predict(model, np.array([0.25]), rescaled=False) == 0.0
    assert boulevard_predict(model, np.array([0.25])) == 0.0


def test_same_seed_gives_bitwise_identical_models():
    X, Y = _sample()
    for mode in StructureMode:
        config = BoulevardConfig(
            n_trees=20, seed=7, structure_mode=mode, constraints=StructureConstraints(min_leaf_samples=4)
        )
        a = boulevard_fit(X, Y, config)
        b = boulevard_fit(X, Y, config)
        np.testing.assert_array_equal(a.predict(X), b.predict(X))
        assert [t.loss for t in a.trace] == [t.loss for t in b.trace]


def test_truncation_helpers():
    np.testing.assert_array_equal(truncate(np.array([-5.0, 0.5, 5.0]), 2.0), [-2.0, 0.5, 2.0])
    Y = np.array([1.0, -3.0])
    assert truncation_level(BoulevardConfig(), Y) == 30.0
    assert truncation_level(BoulevardConfig(), np.zeros(2)) == 1.0
    assert truncation_level(BoulevardConfig(truncation_M=4.0), Y) == 4.0
    with pytest.raises(ConfigurationError):
        truncation_level(BoulevardConfig(truncation_M=3.0), Y)


def test_invalid_hyper_parameters_are_rejected():
    with pytest.raises(ValueError):
        BoulevardConfig(lambda_=1.0)
    with pytest.raises(ValueError):
        BoulevardConfig(theta=0.0)
    with pytest.raises(ValueError):
        BoulevardConfig(n_trees=0)
    assert BoulevardConfig.model_validate({"lambda": 0.3}).lambda_ == 0.3


def test_training_data_is_validated():
    X, Y = _sample(n=10)
    with pytest.raises(DimensionError):
        boulevard_fit(X, Y[:-1], BoulevardConfig(n_trees=2, constraints=StructureConstraints(min_leaf_samples=2)))
    with pytest.raises(DomainError):
        boulevard_fit(X + 1.0, Y, BoulevardConfig(n_trees=2, constraints=StructureConstraints(min_leaf_samples=2)))
    bad = Y.copy()
    bad[0] = np.nan
    with pytest.raises(ConfigurationError):
        boulevard_fit(X, bad, BoulevardConfig(n_trees=2, constraints=StructureConstraints(min_leaf_samples=2)))


def test_snapshot_with_a_huge_threshold_freezes_at_the_first_tree():
    X, Y = _sample()
    config = BoulevardConfig(n_trees=10, constraints=StructureConstraints(min_leaf_samples=4))
    model = tail_snapshot_fit(X, Y, config, L_star=1e12)
    assert model.snapshot.b_star == 1
    assert model.snapshot.reached
    assert model.snapshot.frozen_residuals.shape == (60,)
    assert model.config.structure_mode is StructureMode.GRADIENT_ADAPTIVE


def test_snapshot_with_zero_threshold_is_never_taken():
    X, Y = _sample()
    config = BoulevardConfig(n_trees=10, constraints=StructureConstraints(min_leaf_samples=4))
    model = tail_snapshot_fit(X, Y, config, L_star=0.0)
    assert model.snapshot.b_star is None
    assert not model.snapshot.reached
    assert model.n_trees == 10


def test_snapshot_at_a_fixed_iteration():
    X, Y = _sample()
    config = BoulevardConfig(n_trees=10, constraints=StructureConstraints(min_leaf_samples=4))
    model = tail_snapshot_fit(X, Y, config, L_star=0.0, b_star=4)
    assert model.snapshot.b_star == 4
    with pytest.raises(ConfigurationError):
        tail_snapshot_fit(X, Y, config, L_star=0.0, b_star=11)
    with pytest.raises(ConfigurationError):
        tail_snapshot_fit(X, Y, config, L_star=-1.0)


def test_convergence_trace_for_a_constant_signal_decreases():
    n, c, lam = 6, 1.5, 0.8
    X = np.random.default_rng(4).random((n, 1))
    Y = np.full(n, c)
    model = boulevard_fit(X, Y, _single_leaf_config(n, lambda_=lam, n_trees=50))
    target = fixed_point(np.full((n, n), 1 / n), Y, lam)
    np.testing.assert_allclose(target.y_star, lam / (1 + lam) * Y)
    trace = convergence_trace(model, X, target)
    assert trace.shape == (50,)
    assert np.all(np.diff(trace[1:]) < 0)


def test_convergence_trace_of_one_tree_has_one_entry():
    X, Y = _sample(n=20)
    model = boulevard_fit(X, Y, BoulevardConfig(n_trees=1, constraints=StructureConstraints(min_leaf_samples=4)))
    trace = convergence_trace(model, X)
    assert trace.shape == (1,)
    assert trace[0] == pytest.approx(np.linalg.norm(model.fitted))


def test_convergence_trace_rejects_a_mismatched_fixed_point():
    X, Y = _sample(n=20)
    model = boulevard_fit(X, Y, BoulevardConfig(n_trees=2, constraints=StructureConstraints(min_leaf_samples=4)))
    with pytest.raises(DimensionError):
        convergence_trace(model, X, fixed_point(np.eye(3), np.ones(3), 0.5))


@pytest.mark.slow
def test_randomized_run_approaches_its_kernel_fixed_point():
    X, Y = _sample(n=100, seed=5)
    config = BoulevardConfig(n_trees=2000, lambda_=0.8, constraints=StructureConstraints(min_leaf_samples=5))
    model = boulevard_fit(X, Y, config)
    target = fixed_point(kernel_from_ensemble(model, X), Y, 0.8)
    assert np.max(np.abs(model.fitted - target.y_star)) < 0.15


def test_every_stage_follows_the_averaged_update():
    X, Y = _sample(n=40, seed=5)
    lam = 0.7
    config = BoulevardConfig(
        n_trees=25, lambda_=lam, theta=0.6, constraints=StructureConstraints(min_leaf_samples=3), seed=2
    )
    model = boulevard_fit(X, Y, config)
    previous = np.zeros(40)
    for b, (tree, staged) in enumerate(zip(model.trees, model.staged_predict(X)), start=1):
        refit = assign_leaf_values(tree.structure, Y - previous, X, tree.subsample)
        np.testing.assert_allclose(tree.leaf_values, refit.leaf_values, rtol=1e-9, atol=1e-10)
        expected = ((b - 1) / b) * previous + (lam / b) * refit.predict(X)
        np.testing.assert_allclose(staged, expected, rtol=1e-9, atol=1e-10)
        previous = staged
    np.testing.assert_allclose(previous, model.fitted, atol=1e-10)


@pytest.mark.parametrize("mode", [StructureMode.RANDOMIZED, StructureMode.GRADIENT_ADAPTIVE])
def test_default_truncation_never_clips_and_paths_stay_bounded(mode):
    rng = np.random.default_rng(6)
    X = rng.random((80, 2))
    Y = rng.uniform(-1, 1, size=80)
    lam = 0.8
    config = BoulevardConfig(
        n_trees=200, lambda_=lam, structure_mode=mode, constraints=StructureConstraints(min_leaf_samples=2), seed=3
    )
    model = boulevard_fit(X, Y, config)
    assert all(entry.clipped == 0 for entry in model.trace)

    max_abs = float(np.max(np.abs(Y)))
    for staged in model.staged_predict(X):
        assert np.max(np.abs(staged)) <= lam / (1 - lam) * max_abs + 1e-12
        assert np.max(np.abs(staged)) <= lam * (max_abs + model.truncation_M)


def test_snapshot_is_reached_for_a_constant_signal():
    n, c = 60, 1.0
    X = np.random.default_rng(7).random((n, 2))
    config = BoulevardConfig(n_trees=300, constraints=StructureConstraints(min_leaf_samples=5), seed=4)
    model = tail_snapshot_fit(X, np.full(n, c), config, L_star=1e-3)
    assert model.snapshot.b_star is not None
    assert model.trace[model.snapshot.b_star - 1].loss < 1e-3
    assert all(entry.loss >= 1e-3 for entry in model.trace[: model.snapshot.b_star - 1])
