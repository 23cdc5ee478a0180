"""Boulevard boosting: the averaged, shrunk, subsampled and truncated boosting loop.

    f_b(x) = ((b - 1) / b) f_{b-1}(x) + (lambda / b) t_b(x),
    t_b fitted to z = Y - Gamma_M(Y_hat_{b-1}) with honest leaf values,

so the ensemble is lambda times the average of its trees. The raw limit
targets lambda / (1 + lambda) times the signal; predictions are rescaled by
(1 + lambda) / lambda to recover it.
"""

from __future__ import annotations

import logging
from typing import List, Optional, Tuple, Union

import numpy as np

from .errors import ConfigurationError, DimensionError
from .models.config import BoulevardConfig, StructureMode
from .models.ensemble import BoulevardModel, IterationTrace, SnapshotState
from .models.kernel import FixedPoint
from .models.trees import FittedTree, as_points
from .samplers import get_sampler
from .samplers.base import StructureSampler
from .samplers.greedy import FrozenGreedySampler
from .trees import assign_leaf_values, draw_subsample

logger = logging.getLogger(__name__)


def check_training_data(X: np.ndarray, Y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Validate covariates in [0, 1]^d and finite responses of matching length."""
    points = np.atleast_2d(np.asarray(X, dtype=float))
    points = as_points(points, points.shape[1])
    responses = np.asarray(Y, dtype=float)
    if responses.ndim != 1 or responses.shape[0] != points.shape[0]:
        raise DimensionError(f"Y must be a vector of length {points.shape[0]}")
    if not np.all(np.isfinite(responses)):
        raise ConfigurationError("Y must be finite")
    if points.shape[0] == 0:
        raise ConfigurationError("training data is empty")
    return points, responses


def truncate(values: np.ndarray, M: float) -> np.ndarray:
    """Gamma_M(x) = sign(x) * min(|x|, M)."""
    return np.clip(values, -M, M)


def truncation_level(config: BoulevardConfig, Y: np.ndarray) -> float:
    max_abs = float(np.max(np.abs(Y)))
    if config.truncation_M is None:
        level = 10.0 * max_abs if max_abs > 0 else 1.0
        logger.debug("truncation_M defaulted to %.6g (10 * max|y|)", level)
        return level
    if config.truncation_M <= max_abs:
        raise ConfigurationError(f"truncation_M={config.truncation_M} must exceed max|y|={max_abs:.6g}")
    return float(config.truncation_M)


def _run_boulevard(
    points: np.ndarray,
    responses: np.ndarray,
    config: BoulevardConfig,
    rng: np.random.Generator,
    sampler: StructureSampler,
    loss_threshold: Optional[float] = None,
    b_star: Optional[int] = None,
) -> BoulevardModel:
    n = points.shape[0]
    M = truncation_level(config, responses)
    lam = config.lambda_
    scaled_target = lam / (1 + lam) * responses
    snapshot_enabled = loss_threshold is not None or b_star is not None

    fitted = np.zeros(n)
    trees: List[FittedTree] = []
    trace: List[IterationTrace] = []
    frozen: Optional[np.ndarray] = None
    snapshot_at = b_star

    for b in range(1, config.n_trees + 1):
        clipped = int(np.count_nonzero(np.abs(fitted) > M))
        if clipped:
            logger.warning("Truncation clipped %d fitted values at iteration %d (M=%.6g)", clipped, b, M)
        z = responses - truncate(fitted, M)

        subsample = draw_subsample(n, config.theta, rng)
        structure = sampler.sample(points, z, subsample, config.constraints, rng)
        tree = assign_leaf_values(structure, z, points, subsample)
        output = tree.leaf_values[structure.apply(points)]

        updated = ((b - 1) / b) * fitted + (lam / b) * output
        loss = 0.5 * float(np.mean((scaled_target - updated) ** 2))
        trace.append(
            IterationTrace(
                iteration=b,
                loss=loss,
                step_norm=float(np.linalg.norm(updated - fitted)),
                clipped=clipped,
            )
        )
        trees.append(tree)
        fitted = updated

        if snapshot_enabled and frozen is None:
            if (snapshot_at is not None and b == snapshot_at) or (
                snapshot_at is None and loss_threshold is not None and loss < loss_threshold
            ):
                snapshot_at = b
                frozen = z.copy()
                sampler = FrozenGreedySampler(frozen)
                logger.info("Tail snapshot taken at b*=%d (L=%.6g)", b, loss)

    snapshot = None
    if snapshot_enabled:
        snapshot = SnapshotState(
            loss_threshold=float(loss_threshold) if loss_threshold is not None else float("nan"),
            b_star=snapshot_at if frozen is not None else None,
            frozen_residuals=frozen,
        )
        if frozen is None:
            logger.warning(
                "Tail snapshot threshold %.6g never reached within %d trees", loss_threshold, config.n_trees
            )

    return BoulevardModel(
        trees=trees,
        dimension=points.shape[1],
        trace=trace,
        config=config,
        truncation_M=M,
        fitted=fitted,
        snapshot=snapshot,
    )


def _rng_for(config: BoulevardConfig, rng: Optional[np.random.Generator]) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(config.seed)


def boulevard_fit(
    X: np.ndarray,
    Y: np.ndarray,
    config: BoulevardConfig,
    rng: Optional[np.random.Generator] = None,
) -> BoulevardModel:
    """
    Fit a Boulevard ensemble.

    Structures come from the sampler registered for `config.structure_mode`:
    completely randomized (rBLV) or greedy on the current residuals over the
    subsample (BLV). Leaf values are always honest means over the subsample.
    Without an explicit rng the run is seeded from `config.seed`.
    """
    points, responses = check_training_data(X, Y)
    sampler = get_sampler(config.structure_mode)
    return _run_boulevard(points, responses, config, _rng_for(config, rng), sampler)


def tail_snapshot_fit(
    X: np.ndarray,
    Y: np.ndarray,
    config: BoulevardConfig,
    L_star: float,
    rng: Optional[np.random.Generator] = None,
    b_star: Optional[int] = None,
) -> BoulevardModel:
    """
    Adaptive Boulevard that freezes its structure distribution.

    After each iteration the loss (1/2n) sum (lambda/(1+lambda) y_i - f_b(x_i))^2
    is compared with `L_star`; the first iteration below it becomes b*, and from
    then on every structure is grown greedily on the residual vector of
    iteration b* with a fresh subsample. `b_star` pre-specifies the snapshot
    iteration instead. When the threshold is never reached the model carries an
    unset b* and a warning is logged.
    """
    if L_star < 0:
        raise ConfigurationError("L_star must be nonnegative")
    if b_star is not None and not 1 <= b_star <= config.n_trees:
        raise ConfigurationError(f"b_star must lie in [1, {config.n_trees}]")
    points, responses = check_training_data(X, Y)
    adaptive = config.model_copy(update={"structure_mode": StructureMode.GRADIENT_ADAPTIVE})
    sampler = get_sampler(StructureMode.GRADIENT_ADAPTIVE)
    return _run_boulevard(
        points,
        responses,
        adaptive,
        _rng_for(config, rng),
        sampler,
        loss_threshold=L_star,
        b_star=b_star,
    )


def boulevard_predict(model: BoulevardModel, x: np.ndarray, rescaled: bool = True) -> Union[float, np.ndarray]:
    """Raw (lambda/B) sum_b t_b(x), or that times (1+lambda)/lambda; a matrix of points gives one value per row."""
    point = np.asarray(x, dtype=float)
    if point.ndim == 1:
        return float(model.predict(point[None, :], rescaled=rescaled)[0])
    return model.predict(point, rescaled=rescaled)


def convergence_trace(
    model: BoulevardModel,
    X: np.ndarray,
    fixed_point: Optional[FixedPoint] = None,
    ord: Union[int, float] = 2,
) -> np.ndarray:
    """
    Distance of the fitted values after each iteration to the fixed point y*,
    or the step size ||Y_hat_b - Y_hat_{b-1}|| when no fixed point is given
    (Y_hat_0 = 0).
    """
    trace = np.empty(model.n_trees)
    previous = None
    for b, fitted in enumerate(model.staged_predict(X)):
        if fixed_point is not None:
            if fixed_point.y_star.shape != fitted.shape:
                raise DimensionError("fixed point and training sample sizes differ")
            trace[b] = np.linalg.norm(fitted - fixed_point.y_star, ord=ord)
        else:
            step = fitted if previous is None else fitted - previous
            trace[b] = np.linalg.norm(step, ord=ord)
        previous = fitted
    return trace
