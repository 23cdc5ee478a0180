from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from boulevard.boosting import boulevard_fit
from boulevard.errors import ConfigurationError, DegenerateInputError
from boulevard.inference import (
    NOISE_VARIANCE_FLOOR,
    empirical_influence,
    empirical_influences,
    interval_coverage,
    interval_half_width,
    ks_normality,
    noise_variance_estimate,
    replicate_predictions,
    reproduction_interval,
    reproduction_intervals,
)
from boulevard.models.config import BoulevardConfig, StructureConstraints
from boulevard.models.data import FunctionId, GeneratorSpec, Method, ModelRecipe
from boulevard.models.ensemble import BoulevardModel
from boulevard.models.inference import ReproductionInterval
from boulevard.models.trees import Subsample
from boulevard.trees import assign_leaf_values, explicit_structure, structure_vector

X4 = np.array([[0.1], [0.2], [0.7], [0.8]])


def _model(trees, lam: float = 0.5) -> BoulevardModel:
    return BoulevardModel(trees=trees, dimension=1, config=BoulevardConfig(lambda_=lam, n_trees=len(trees)))


def test_half_width_matches_the_hand_computation():
    assert interval_half_width(0.5, 0.1, 1.0, 0.95) == pytest.approx(1.959964 * 1.414214 * 3 * 0.05, abs=1e-5)
    assert interval_half_width(0.5, 0.1, 1.0) == pytest.approx(0.4158, abs=1e-4)


def test_half_width_increases_with_noise_and_influence():
    widths_sigma = [interval_half_width(0.8, 0.2, s) for s in (0.1, 0.5, 1.0, 2.0)]
    widths_norm = [interval_half_width(0.8, k, 1.0) for k in (0.01, 0.1, 0.3, 1.0)]
    assert np.all(np.diff(widths_sigma) > 0)
    assert np.all(np.diff(widths_norm) > 0)
    with pytest.raises(ConfigurationError):
        interval_half_width(0.8, 0.2, 1.0, level=1.0)


def test_single_leaf_influence_is_uniform():
    n = 10
    rng = np.random.default_rng(0)
    X = rng.random((n, 2))
    Y = rng.normal(size=n)
    config = BoulevardConfig(n_trees=5, theta=1.0, constraints=StructureConstraints(min_leaf_samples=n))
    model = boulevard_fit(X, Y, config)
    influence = empirical_influence(model, X, np.array([0.4, 0.6]))
    np.testing.assert_allclose(influence.k_hat, np.full(n, 1 / n))
    assert influence.norm2 == pytest.approx(1 / np.sqrt(n))


def test_influence_in_an_always_empty_leaf_is_zero():
    structure = explicit_structure(1, (0, 0.5, None, None))
    subsample = Subsample(indices=np.array([2, 3]), population=4, theta=0.5)
    tree = assign_leaf_values(structure, np.ones(4), X4, subsample)
    influence = empirical_influence(_model([tree, tree]), X4, np.array([0.3]))
    np.testing.assert_array_equal(influence.k_hat, np.zeros(4))
    assert influence.norm2 == 0.0


def test_influence_is_the_average_of_two_structure_vectors():
    first = explicit_structure(1, (0, 0.5, None, None))
    second = explicit_structure(1, None)
    w1 = Subsample(indices=np.array([0, 1, 2]), population=4, theta=0.75)
    w2 = Subsample.full(4)
    trees = [
        assign_leaf_values(first, np.zeros(4), X4, w1),
        assign_leaf_values(second, np.zeros(4), X4, w2),
    ]
    x = np.array([0.15])
    expected = 0.5 * (structure_vector(first, X4, w1, x) + structure_vector(second, X4, w2, x))
    np.testing.assert_allclose(empirical_influence(_model(trees), X4, x).k_hat, expected)
    np.testing.assert_allclose(expected, [0.375, 0.375, 0.125, 0.125])


def test_influence_at_a_training_point_stays_in_its_leaves():
    rng = np.random.default_rng(1)
    X = rng.random((50, 2))
    Y = X[:, 0] + rng.normal(scale=0.1, size=50)
    model = boulevard_fit(X, Y, BoulevardConfig(n_trees=8, constraints=StructureConstraints(min_leaf_samples=5)))
    i = 7
    influence = empirical_influences(model, X, X[i : i + 1])[0]
    shares_a_leaf = np.zeros(50, dtype=bool)
    for tree in model.trees:
        leaves = tree.structure.apply(X)
        shares_a_leaf |= leaves == leaves[i]
    assert np.all(influence.k_hat[~shares_a_leaf] == 0.0)


def test_noise_variance_is_clamped_when_y_is_reproduced():
    lam, c = 0.5, 2.0
    tree = assign_leaf_values(explicit_structure(1, None), np.full(4, c / (1 + lam)), X4, Subsample.full(4))
    model = _model([tree], lam=lam)
    Y = np.full(4, c)
    assert noise_variance_estimate(model, X4, Y) == NOISE_VARIANCE_FLOOR

    interval = reproduction_interval(model, X4, Y, np.array([0.5]))
    assert interval.degenerate
    assert interval.center == pytest.approx(c)
    assert interval.half_width == pytest.approx(0.0, abs=1e-5)


def test_noise_variance_of_pure_uniform_noise():
    rng = np.random.default_rng(2)
    X = rng.random((2000, 1))
    Y = rng.uniform(-1, 1, size=2000)
    tree = assign_leaf_values(explicit_structure(1, None), np.zeros(2000), X, Subsample.full(2000))
    sigma2 = noise_variance_estimate(_model([tree]), X, Y)
    assert sigma2 == pytest.approx(1 / 3, rel=0.15)


def test_intervals_are_centered_on_rescaled_predictions():
    rng = np.random.default_rng(3)
    X = rng.random((80, 2))
    Y = X[:, 0] + rng.normal(scale=0.2, size=80)
    model = boulevard_fit(X, Y, BoulevardConfig(n_trees=20, constraints=StructureConstraints(min_leaf_samples=5)))
    queries = rng.random((4, 2))
    intervals = reproduction_intervals(model, X, Y, queries, level=0.9)
    np.testing.assert_allclose([iv.center for iv in intervals], model.predict(queries, rescaled=True))
    for interval in intervals:
        assert interval.level == 0.9
        assert interval.half_width > 0
        assert not interval.degenerate
        assert interval.lower < interval.center < interval.upper


def test_interval_model_validation_and_coverage():
    interval = ReproductionInterval(center=0.0, half_width=1.0, sigma_hat=1.0)
    assert interval.covers(1.0) and not interval.covers(1.01)
    assert interval_coverage(interval, [-0.5, 0.2, 2.0]) == pytest.approx(2 / 3)
    with pytest.raises(ConfigurationError):
        interval_coverage(interval, [])
    with pytest.raises(ValueError):
        ReproductionInterval(center=0.0, half_width=-1.0, sigma_hat=1.0)


def test_ks_accepts_seeded_normal_draws():
    result = ks_normality(np.random.default_rng(0).normal(size=1000))
    assert result.p_value > 0.01
    assert result.n == 1000


def test_ks_rejects_uniform_draws():
    assert ks_normality(np.random.default_rng(1).random(5000)).p_value < 0.001


def test_ks_statistic_of_normal_quantiles_is_small():
    n = 100
    quantiles = stats.norm.ppf(np.arange(1, n + 1) / (n + 1))
    assert ks_normality(quantiles).statistic <= 0.05


def test_ks_input_checks():
    with pytest.raises(ConfigurationError):
        ks_normality(np.arange(19.0))
    with pytest.raises(DegenerateInputError):
        ks_normality(np.full(30, 4.2))
    with pytest.raises(DegenerateInputError):
        ks_normality(np.full(50, 0.1 + 1e6))


def test_replicate_predictions_are_reproducible():
    recipe = ModelRecipe(method=Method.RBLV, n_trees=5, min_leaf_samples=5)
    spec = GeneratorSpec(function_id=FunctionId.MEAN5, n=60, d=5, error_law="uniform(1)", seed=0)
    points = np.full((2, 5), 0.5)
    serial = replicate_predictions(recipe, spec, points, replicates=3, seed=9, n_jobs=1)
    parallel = replicate_predictions(recipe, spec, points, replicates=3, seed=9, n_jobs=2)
    assert serial.shape == (3, 2)
    np.testing.assert_array_equal(serial, parallel)
    assert not np.allclose(serial[0], serial[1])


@pytest.mark.slow
def test_noise_variance_estimate_quadruples_with_twice_the_error_amplitude():
    rng = np.random.default_rng(11)
    n = 2000
    X = rng.random((n, 3))
    config = BoulevardConfig(n_trees=100, lambda_=0.5, constraints=StructureConstraints(min_leaf_samples=20), seed=5)
    estimates = []
    for scale in (1.0, 2.0):
        Y = 1.0 + rng.uniform(-scale, scale, size=n)
        estimates.append(noise_variance_estimate(boulevard_fit(X, Y, config), X, Y))
    assert 3.0 <= estimates[1] / estimates[0] <= 5.0
