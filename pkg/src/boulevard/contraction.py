"""Simulation lab for stochastic contractions.

Paths are generated in closed form: with P_t = prod_{s<=t} lambda_s,

    Z_t = (P_t / P_{t0}) * (Z_{t0} + sum_{t0<s<=t} (P_{t0} / P_s) e_s),

which equals the recursion Z_t = lambda_t Z_{t-1} + e_t step by step.
"""

from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from .errors import BoundInapplicableError, ConfigurationError
from .models.contraction import ContractionSpec, EscapeResult
from .seeding import derived_rng

logger = logging.getLogger(__name__)


def uniform_ball(count: int, dimension: int, radii: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """`count` points uniform on balls of the given radii in R^dimension."""
    direction = rng.standard_normal((count, dimension))
    norms = np.linalg.norm(direction, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    scale = rng.random(count) ** (1.0 / dimension)
    return direction / norms * (np.asarray(radii, dtype=float) * scale)[:, None]


def _path_from(spec: ContractionSpec, rng: np.random.Generator, t0: int, z_start: np.ndarray) -> np.ndarray:
    steps = np.arange(t0 + 1, spec.horizon + 1)
    path = np.empty((steps.shape[0] + 1, spec.dimension))
    path[0] = z_start
    if steps.size == 0:
        return path
    log_p = np.cumsum(np.log(spec.lambdas(steps)))
    noise = uniform_ball(steps.shape[0], spec.dimension, spec.noise_bounds(steps), rng)
    accumulated = z_start + np.cumsum(noise * np.exp(-log_p)[:, None], axis=0)
    path[1:] = np.exp(log_p)[:, None] * accumulated
    return path


def simulate_contraction(spec: ContractionSpec, rng: np.random.Generator) -> np.ndarray:
    """Full path Z_0, ..., Z_T as a (T + 1, d) array."""
    return _path_from(spec, rng, 0, spec.initial())


def _path_norms(spec: ContractionSpec, seed: int, trial: int) -> np.ndarray:
    return np.linalg.norm(simulate_contraction(spec, derived_rng(seed, trial)), axis=1)


def simulate_paths(spec: ContractionSpec, trials: int, seed: int, n_jobs: int = 1) -> np.ndarray:
    """Norms ||Z_t|| of `trials` independent paths, shape (trials, T + 1); path i uses counter i."""
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    rows = Parallel(n_jobs=n_jobs)(delayed(_path_norms)(spec, seed, i) for i in range(trials))
    return np.vstack(rows)


def kolmogorov_bound(
    Z_T_norm: float,
    delta: float,
    tail_noise_second_moments: float,
    sup_future_noise: float,
    dimension: int,
) -> float:
    """
    Lower bound on the probability that every later iterate stays within
    ||Z_T|| + delta of the origin:

        1 - 4 sqrt(d) sum_{t>T} E||e_t||^2 / min(delta^2, beta^2),
        beta = ||Z_T|| + delta - sqrt(d) sup_{t>T} |e_t|,

    clamped to [0, 1].
    """
    if delta <= 0:
        raise ConfigurationError("delta must be positive")
    if dimension < 1:
        raise ConfigurationError("dimension must be >= 1")
    root_d = math.sqrt(dimension)
    beta = Z_T_norm + delta - root_d * sup_future_noise
    if beta <= 0:
        raise BoundInapplicableError(f"beta={beta:.6g} is not positive; future noise can jump past the band")
    bound = 1.0 - 4.0 * root_d * tail_noise_second_moments / min(delta**2, beta**2)
    return float(min(max(bound, 0.0), 1.0))


def _stays(spec: ContractionSpec, t0: int, radius: float, seed: int, trial: int) -> bool:
    start = np.zeros(spec.dimension)
    start[0] = radius
    path = _path_from(spec, derived_rng(seed, trial), t0, start)
    return bool(np.all(np.linalg.norm(path[1:], axis=1) <= 2 * radius))


def escape_experiment(
    spec: ContractionSpec,
    radius: float,
    trials: int,
    seed: int,
    t0: int = 10,
    n_jobs: int = 1,
) -> EscapeResult:
    """
    Start `trials` paths on the sphere of radius r at time t0 and count those
    that never leave B(0, 2r) up to the horizon.

    The analytic bound uses ||Z_t0|| = r, delta = r and the finite-horizon tail
    sum; when it is inapplicable it is reported as 0.
    """
    if radius <= 0:
        raise ConfigurationError("radius must be positive")
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    if not 0 <= t0 < spec.horizon:
        raise ConfigurationError(f"t0 must lie in [0, {spec.horizon})")

    flags = Parallel(n_jobs=n_jobs)(delayed(_stays)(spec, t0, radius, seed, i) for i in range(trials))
    fraction = float(np.mean(flags))
    standard_error = math.sqrt(fraction * (1 - fraction) / trials)

    future = np.arange(t0 + 1, spec.horizon + 1)
    applicable = True
    try:
        bound = kolmogorov_bound(
            radius,
            radius,
            float(np.sum(spec.noise_second_moments(future))),
            float(spec.noise_bounds(future[:1])[0]),
            spec.dimension,
        )
    except BoundInapplicableError as exc:
        logger.warning("Escape bound inapplicable at t0=%d, r=%.3g: %s", t0, radius, exc)
        bound, applicable = 0.0, False

    logger.info("Escape t0=%d r=%.3g: stayed %.4f (bound %.4f, se %.4f)", t0, radius, fraction, bound, standard_error)
    return EscapeResult(
        t0=t0,
        radius=radius,
        trials=trials,
        fraction=fraction,
        bound=bound,
        standard_error=standard_error,
        bound_applicable=applicable,
    )


def median_final_norm(spec: ContractionSpec, trials: int, seed: int, n_jobs: int = 1) -> float:
    norms = simulate_paths(spec, trials, seed, n_jobs)
    return float(np.median(norms[:, -1]))


def contracting_fraction(norms: np.ndarray, fraction_of_horizon: Optional[float] = 0.1) -> float:
    """Share of paths with ||Z_T|| < ||Z_{floor(T * fraction)}||."""
    horizon = norms.shape[1] - 1
    earlier = max(int(horizon * fraction_of_horizon), 1)
    return float(np.mean(norms[:, -1] < norms[:, earlier]))
