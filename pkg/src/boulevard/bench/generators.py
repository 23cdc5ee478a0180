"""Synthetic regression problems and the fixed evaluation points used by the experiments."""

from __future__ import annotations

from typing import Callable, Dict

import numpy as np

from ..models.data import Dataset, FunctionId, GeneratorSpec

Signal = Callable[[np.ndarray], np.ndarray]


def f1(X: np.ndarray) -> np.ndarray:
    return X[:, 0] + 3 * X[:, 1] + X[:, 2] * X[:, 3]


def f2(X: np.ndarray) -> np.ndarray:
    return (
        X[:, 0]
        + 3 * X[:, 1]
        + (1 - X[:, 2]) ** 2
        + X[:, 3] * X[:, 4]
        + (1 - X[:, 5]) ** 6
        + X[:, 6]
    )


def mean5(X: np.ndarray) -> np.ndarray:
    return X[:, 0] + 3 * X[:, 1] + X[:, 2] ** 2 + 2 * X[:, 3] * X[:, 4]


SIGNALS: Dict[FunctionId, Signal] = {
    FunctionId.F1: f1,
    FunctionId.F2: f2,
    FunctionId.MEAN5: mean5,
}

# Kernel-ridge comparison points.
KRR_TEST_POINTS = np.array(
    [
        [0.1, 0.1, 0.1, 0.1, 0.1],
        [0.6, 0.9, 0.8, 0.9, 0.7],
        [0.1, 0.1, 0.9, 0.9, 0.9],
        [0.9, 0.1, 0.1, 0.1, 0.9],
    ]
)

# Limiting-distribution, reproduction-interval and variance-scaling points.
INFERENCE_TEST_POINTS = np.array(
    [
        [0.5, 0.5, 0.5, 0.5, 0.5],
        [0.2, 0.2, 0.2, 0.2, 0.2],
        [0.1, 0.9, 0.1, 0.9, 0.1],
        [0.1, 0.1, 0.9, 0.9, 0.9],
        [0.9, 0.1, 0.1, 0.1, 0.9],
        [0.5, 0.1, 0.9, 0.1, 0.5],
        [0.3, 0.2, 0.7, 0.8, 0.6],
        [0.4, 0.2, 0.3, 0.6, 0.7],
        [0.2, 0.7, 0.8, 0.3, 0.5],
        [0.3, 0.6, 0.4, 0.9, 0.5],
    ]
)


def signal(function_id: FunctionId, X: np.ndarray) -> np.ndarray:
    return SIGNALS[FunctionId(function_id)](np.atleast_2d(np.asarray(X, dtype=float)))


def generate(spec: GeneratorSpec) -> Dataset:
    """
    Draw X ~ Unif[0,1]^d and Y = f(X) + e with the configured error law.

    The noiseless signal is returned alongside Y so test error can be measured
    against it. Covariates are drawn before the noise, so two specs that differ
    only in their error law share X.
    """
    rng = np.random.default_rng(spec.seed)
    X = rng.random((spec.n, spec.d))
    clean = signal(spec.function_id, X)
    Y = clean + spec.error_law.sample(spec.n, rng)
    return Dataset(
        X=X,
        Y=Y,
        signal=clean,
        columns=tuple(f"x{j + 1}" for j in range(spec.d)),
    )
