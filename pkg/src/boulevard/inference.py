"""Reproduction intervals and normality diagnostics for Boulevard predictions.

A Boulevard prediction at x is asymptotically normal around
lambda/(1+lambda) f(x) with standard deviation ||r_n|| sigma_eps, where
r_n = k_n^T (I/lambda + K_n)^{-1}. The interval here bounds ||r_n|| by
lambda ||k_n||, estimates k_n from the fitted ensemble and sigma_eps from the
training residuals, and widens by sqrt(2) because it targets a refit on an
independent sample. Intervals are reported on the rescaled scale.
"""

from __future__ import annotations

import logging
from typing import List, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from .bench.generators import generate
from .bench.recipes import fit_recipe, predict_model
from .errors import ConfigurationError, DegenerateInputError
from .models.data import GeneratorSpec, ModelRecipe
from .models.ensemble import BoulevardModel
from .models.inference import EmpiricalInfluence, KSResult, ReproductionInterval
from .models.trees import as_points
from .seeding import derive_seed, derived_rng
from .trees import structure_vectors_at

logger = logging.getLogger(__name__)

NOISE_VARIANCE_FLOOR = 1e-12
MIN_KS_SAMPLES = 20


def empirical_influences(model: BoulevardModel, X: np.ndarray, queries: np.ndarray) -> List[EmpiricalInfluence]:
    """k_hat(x) = (1/B) sum_b s_n(x; tree_b, w_b) for every query row."""
    points = as_points(X, model.dimension)
    query_points = as_points(np.atleast_2d(queries), model.dimension)
    total = np.zeros((query_points.shape[0], points.shape[0]))
    for tree in model.trees:
        total += structure_vectors_at(tree.structure, points, tree.subsample, query_points)
    k_hat = total / max(model.n_trees, 1)
    return [EmpiricalInfluence(k_hat=row, norm2=float(np.linalg.norm(row))) for row in k_hat]


def empirical_influence(model: BoulevardModel, X: np.ndarray, x: np.ndarray) -> EmpiricalInfluence:
    return empirical_influences(model, X, np.atleast_2d(x))[0]


def noise_variance_estimate(model: BoulevardModel, X: np.ndarray, Y: np.ndarray) -> float:
    residual = np.asarray(Y, dtype=float) - model.predict(X, rescaled=True)
    return max(float(np.mean(residual**2)), NOISE_VARIANCE_FLOOR)


def interval_half_width(lambda_: float, influence_norm: float, sigma: float, level: float = 0.95) -> float:
    """z_{(1+level)/2} * sqrt(2) * ((1+lambda)/lambda) * lambda * ||k_hat|| * sigma."""
    if not 0 < level < 1:
        raise ConfigurationError("level must lie in (0, 1)")
    sd_raw = lambda_ * influence_norm * sigma
    sd_rescaled = (1 + lambda_) / lambda_ * sd_raw
    return float(stats.norm.ppf((1 + level) / 2) * np.sqrt(2.0) * sd_rescaled)


def reproduction_intervals(
    model: BoulevardModel,
    X: np.ndarray,
    Y: np.ndarray,
    queries: np.ndarray,
    level: float = 0.95,
) -> List[ReproductionInterval]:
    sigma2 = noise_variance_estimate(model, X, Y)
    sigma = float(np.sqrt(sigma2))
    logger.info("Reproduction intervals use sigma_hat=%.6g (level=%.3g)", sigma, level)
    centers = model.predict(np.atleast_2d(queries), rescaled=True)
    intervals: List[ReproductionInterval] = []
    for center, influence in zip(centers, empirical_influences(model, X, queries)):
        degenerate = influence.norm2 == 0.0 or sigma2 <= NOISE_VARIANCE_FLOOR
        if degenerate:
            logger.warning(
                "Degenerate reproduction interval at center %.6g (||k_hat||=%.3g, sigma_hat^2=%.3g)",
                center,
                influence.norm2,
                sigma2,
            )
        intervals.append(
            ReproductionInterval(
                center=float(center),
                half_width=interval_half_width(model.lambda_, influence.norm2, sigma, level),
                level=level,
                sigma_hat=sigma,
                influence_norm=influence.norm2,
                degenerate=degenerate,
            )
        )
    return intervals


def reproduction_interval(
    model: BoulevardModel, X: np.ndarray, Y: np.ndarray, x: np.ndarray, level: float = 0.95
) -> ReproductionInterval:
    """Interval around the rescaled prediction at x expected to contain a refit on a fresh sample."""
    return reproduction_intervals(model, X, Y, np.atleast_2d(x), level)[0]


def ks_normality(samples: Sequence[float]) -> KSResult:
    """
    One-sample Kolmogorov-Smirnov test against a normal with the samples' own
    mean and standard deviation; the p-value uses the asymptotic Kolmogorov
    distribution.
    """
    values = np.asarray(samples, dtype=float)
    if values.ndim != 1 or values.shape[0] < MIN_KS_SAMPLES:
        raise ConfigurationError(f"ks_normality needs at least {MIN_KS_SAMPLES} samples")
    mean = float(np.mean(values))
    sd = float(np.std(values, ddof=1))
    if np.ptp(values) == 0 or sd <= 1e-12 * max(1.0, abs(mean)):
        raise DegenerateInputError("samples are constant; no normal fit exists")
    result = stats.kstest(values, "norm", args=(mean, sd), method="asymp")
    return KSResult(statistic=float(result.statistic), p_value=float(result.pvalue), n=values.shape[0], mean=mean, sd=sd)


def interval_coverage(interval: ReproductionInterval, predictions: Sequence[float]) -> float:
    values = np.asarray(predictions, dtype=float)
    if values.size == 0:
        raise ConfigurationError("no predictions to cover")
    return float(np.mean((values >= interval.lower) & (values <= interval.upper)))


def _replicate(recipe: ModelRecipe, spec: GeneratorSpec, points: np.ndarray, seed: int, replicate: int) -> np.ndarray:
    data_seed = derive_seed(seed, 2 * replicate)
    data = generate(spec.model_copy(update={"seed": data_seed}))
    model = fit_recipe(recipe, data.X, data.Y, derived_rng(seed, 2 * replicate + 1))
    return predict_model(model, points)


def replicate_predictions(
    recipe: ModelRecipe,
    spec: GeneratorSpec,
    points: np.ndarray,
    replicates: int,
    seed: int,
    n_jobs: int = 1,
) -> np.ndarray:
    """
    Refit on `replicates` independent samples and predict at `points`.

    Replicate r draws its data from counter 2r and its fit from counter 2r+1 of
    the master seed. Returns a (replicates, len(points)) array of predictions
    on the response scale.
    """
    if replicates < 1:
        raise ConfigurationError("replicates must be >= 1")
    query_points = np.atleast_2d(np.asarray(points, dtype=float))
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_replicate)(recipe, spec, query_points, seed, r) for r in range(replicates)
    )
    return np.vstack(rows)
