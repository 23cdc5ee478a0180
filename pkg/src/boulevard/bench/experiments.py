"""Experiment protocols.

Each protocol takes resolved parameters and an ExperimentContext and returns
tidy MetricRows (experiment, replicate, method, index, metric, value).
Parameters come from PRESETS (desk scale) or FULL_PRESETS (full scale),
overridden per run.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from ..boosting import boulevard_fit, convergence_trace
from ..contraction import contracting_fraction, escape_experiment, simulate_paths
from ..errors import BudgetExceededError, ConfigurationError, DegenerateInputError
from ..inference import ks_normality, replicate_predictions, reproduction_intervals
from ..kernel import (
    MAX_DIRECT_SOLVE,
    KernelRidgeSolver,
    SubsampledStructureDraw,
    estimate_kernel_mc,
    kernel_from_ensemble,
)
from ..models.contraction import ContractionSpec
from ..models.data import ErrorKind, ErrorLaw, FunctionId, GeneratorSpec, Method, ModelRecipe
from ..models.records import MetricRow
from ..samplers.randomized import RandomizedSampler
from ..seeding import derive_seed, derived_rng
from .cv import kfold_cv
from .data import load_csv
from .generators import INFERENCE_TEST_POINTS, KRR_TEST_POINTS, generate, signal
from .recipes import fit_recipe, staged_mse

logger = logging.getLogger(__name__)

LIMITING_LAWS = ["normal(1)", "uniform(1)", "rademacher", "mixed"]
VARIANCE_LAWS = ["none", "uniform(1)", "uniform(2)", "uniform(4)"]
ALL_METHODS = [m.value for m in Method]

PRESETS: Dict[str, Dict[str, Any]] = {
    "mse-curves": {
        "function": "f1",
        "n": 2000,
        "d": 10,
        "error_law": "uniform(1)",
        "n_test": 1000,
        "theta": 0.3,
        "n_trees": 300,
        "leaf_size": 20,
        "depth": 10,
        "lambda": 0.8,
        "learning_rate": 0.1,
        "methods": ALL_METHODS,
        "every": 10,
        "data": None,
        "target": None,
        "folds": 5,
    },
    "krr-compare": {
        "n": 200,
        "d": 5,
        "error_law": "uniform(1)",
        "theta": 0.8,
        "n_trees": 100,
        "leaf_size": 5,
        "depth": 10,
        "lambda": 0.8,
        "repetitions": 20,
        "kernel": "ensemble",
        "replications": 100,
        "every": 10,
    },
    "limiting-dist": {
        "n": 1000,
        "d": 5,
        "error_laws": LIMITING_LAWS,
        "theta": 0.8,
        "n_trees": 500,
        "leaf_size": 10,
        "depth": 10,
        "lambda": 0.5,
        "replicates": 200,
        "mode": "rblv",
    },
    "reproduction-intervals": {
        "n": 1000,
        "d": 5,
        "error_law": "uniform(1)",
        "theta": 0.8,
        "n_trees": 500,
        "leaf_size": 10,
        "depth": 10,
        "lambda": 0.5,
        "refits": 50,
        "level": 0.95,
        "mode": "rblv",
    },
    "variance-scaling": {
        "n": 1000,
        "d": 5,
        "error_laws": VARIANCE_LAWS,
        "theta": 0.8,
        "n_trees": 300,
        "leaf_size": 20,
        "depth": 10,
        "lambda": 0.5,
        "replicates": 50,
        "mode": "rblv",
    },
    "contraction-lab": {
        "dimension": 1,
        "lambda": 0.5,
        "noise_scale": 1.0,
        "horizon": 100_000,
        "paths": 100,
        "radius": 0.05,
        "t0_grid": [10, 100, 1000, 10000],
        "noise_grid": [0.5, 1.0, 2.0],
        "trials": 200,
    },
}

FULL_PRESETS: Dict[str, Dict[str, Any]] = {
    "mse-curves": {"n": 5000, "n_trees": 1000, "every": 20},
    "krr-compare": {"n_trees": 2000, "replications": 2000},
    "limiting-dist": {"n_trees": 2000, "replicates": 1000},
    "reproduction-intervals": {"n_trees": 2000, "refits": 100},
    "variance-scaling": {"n": 5000, "n_trees": 3000, "replicates": 200},
    "contraction-lab": {"paths": 1000, "trials": 1000},
}

# Real-data settings; the CSV itself is user supplied.
DATA_PRESETS: Dict[str, Dict[str, Any]] = {
    "boston": {"theta": 0.8, "n_trees": 1000, "leaf_size": 5, "lambda": 0.8},
    "ccpp": {"theta": 0.5, "n_trees": 1000, "leaf_size": 50, "lambda": 0.8},
    "casp": {"theta": 0.5, "n_trees": 1000, "leaf_size": 50, "lambda": 0.8},
    "airfoil": {"theta": 0.8, "n_trees": 1000, "leaf_size": 40, "lambda": 0.8},
}


@dataclass
class ExperimentContext:
    """What a protocol needs besides its parameters."""

    name: str
    seed: int
    n_jobs: int = 1
    warn: Callable[[str, Dict[str, Any]], None] = field(default=lambda message, details: None)

    def row(self, replicate: int, method: str, index: int, metric: str, value: float) -> MetricRow:
        return MetricRow(
            experiment=self.name, replicate=replicate, method=method, index=index, metric=metric, value=float(value)
        )


def resolve_params(experiment: str, overrides: Dict[str, Any], full: bool = False) -> Dict[str, Any]:
    if experiment not in PRESETS:
        raise ConfigurationError(f"no preset for experiment '{experiment}'")
    params = dict(PRESETS[experiment])
    if full:
        params.update(FULL_PRESETS.get(experiment, {}))
    preset = overrides.get("preset")
    if preset is not None:
        if preset not in DATA_PRESETS:
            raise ConfigurationError(f"unknown data preset '{preset}'. Available: {sorted(DATA_PRESETS)}")
        params.update(DATA_PRESETS[preset])
    unknown = sorted(set(overrides) - set(params) - {"preset"})
    if unknown:
        raise ConfigurationError(f"unknown parameters for {experiment}: {unknown}")
    params.update({k: v for k, v in overrides.items() if v is not None})
    params["preset"] = preset
    return params


def recipe_from(params: Dict[str, Any], method: str) -> ModelRecipe:
    return ModelRecipe(
        method=Method(method),
        n_trees=params["n_trees"],
        lambda_=params["lambda"],
        theta=params["theta"],
        learning_rate=params.get("learning_rate", 0.1),
        min_leaf_samples=params["leaf_size"],
        max_depth=params["depth"],
    )


def _boulevard_recipe(params: Dict[str, Any]) -> ModelRecipe:
    mode = params.get("mode", "rblv")
    if mode not in (Method.BLV.value, Method.RBLV.value):
        raise ConfigurationError(f"mode must be blv or rblv for this protocol, got '{mode}'")
    return recipe_from(params, mode)


def _generator(params: Dict[str, Any], function: str = "mean5", error_law: Optional[str] = None) -> GeneratorSpec:
    return GeneratorSpec(
        function_id=FunctionId(params.get("function", function)),
        n=params["n"],
        d=params["d"],
        error_law=ErrorLaw.parse(error_law if error_law is not None else params["error_law"]),
    )


def run_mse_curves(params: Dict[str, Any], ctx: ExperimentContext) -> List[MetricRow]:
    """
    Staged train/test MSE of each method. Synthetic data are measured on a
    fresh test set against the noiseless signal; a CSV given in `data` is
    cross-validated instead.
    """
    rows: List[MetricRow] = []
    every = params["every"]

    def emit(replicate: int, method: str, metric: str, curve: np.ndarray) -> None:
        steps = _curve_steps(params["n_trees"], every, curve.shape[0])
        rows.extend(ctx.row(replicate, method, int(b), metric, v) for b, v in zip(steps, curve))

    if params.get("data"):
        dataset = load_csv(params["data"], params.get("target"))
        for method in params["methods"]:
            result = kfold_cv(
                dataset,
                params["folds"],
                recipe_from(params, method),
                ctx.seed,
                every=every,
                n_jobs=ctx.n_jobs,
                normalize=True,
            )
            for fold, curves in enumerate(result.folds):
                emit(fold, method, "train_mse", curves.train)
                emit(fold, method, "test_mse", curves.test)
            emit(-1, method, "mean_test_mse", result.mean_test)
        return rows

    spec = _generator(params, function="f1")
    train = generate(spec.model_copy(update={"seed": derive_seed(ctx.seed, 0)}))
    test = generate(spec.model_copy(update={"seed": derive_seed(ctx.seed, 1), "n": params["n_test"]}))
    for i, method in enumerate(params["methods"]):
        model = fit_recipe(recipe_from(params, method), train.X, train.Y, derived_rng(ctx.seed, 2 + i))
        emit(0, method, "train_mse", staged_mse(model, train.X, train.Y, every))
        emit(0, method, "test_mse", staged_mse(model, test.X, test.signal, every))
    return rows


def _curve_steps(n_trees: int, every: Optional[int], length: int) -> np.ndarray:
    if every is None or every <= 1:
        return np.arange(1, length + 1)
    steps = np.arange(every, n_trees + 1, every)
    if steps.size == 0 or steps[-1] != n_trees:
        steps = np.append(steps, n_trees)
    return steps[:length]


def run_krr_compare(params: Dict[str, Any], ctx: ExperimentContext) -> List[MetricRow]:
    """
    Completely randomized Boulevard against the kernel ridge form it converges
    to, at the four comparison points. The kernel is taken from the ensemble's
    own trees (`kernel="ensemble"`) or estimated independently by Monte Carlo
    with the same structure sampler (`kernel="mc"`).
    """
    if params["n"] > MAX_DIRECT_SOLVE:
        raise BudgetExceededError("kernel comparison needs a direct solve", count=params["n"], cap=MAX_DIRECT_SOLVE)
    if params["kernel"] not in ("ensemble", "mc"):
        raise ConfigurationError("kernel must be 'ensemble' or 'mc'")
    recipe = recipe_from(params, "rblv")
    spec = _generator(params)
    lam = params["lambda"]
    truth = signal(FunctionId.MEAN5, KRR_TEST_POINTS)
    rows: List[MetricRow] = []

    for rep in range(params["repetitions"]):
        data = generate(spec.model_copy(update={"seed": derive_seed(ctx.seed, 3 * rep)}))
        config = recipe.boulevard_config()
        model = boulevard_fit(data.X, data.Y, config, derived_rng(ctx.seed, 3 * rep + 1))

        if params["kernel"] == "ensemble":
            estimate = kernel_from_ensemble(model, data.X, KRR_TEST_POINTS)
        else:
            draw = SubsampledStructureDraw(RandomizedSampler(), data.X, config.constraints, config.theta)
            estimate = estimate_kernel_mc(
                data.X,
                draw,
                params["replications"],
                derive_seed(ctx.seed, 3 * rep + 2),
                queries=KRR_TEST_POINTS,
                n_jobs=ctx.n_jobs,
            )

        solver = KernelRidgeSolver(estimate, lam)
        dual = solver.dual_coefficients(data.Y)
        krr = estimate.query_matrix @ dual
        krr_se = np.sqrt((estimate.query_std_error**2) @ (dual**2))
        raw = model.predict(KRR_TEST_POINTS, rescaled=False)
        for j in range(KRR_TEST_POINTS.shape[0]):
            rows.append(ctx.row(rep, "blv", j, "prediction", raw[j]))
            rows.append(ctx.row(rep, "krr", j, "prediction", krr[j]))
            rows.append(ctx.row(rep, "krr", j, "std_error", krr_se[j]))
            rows.append(ctx.row(rep, "truth", j, "scaled_signal", lam / (1 + lam) * truth[j]))

        fixed = solver.fixed_point(data.Y)
        distances = convergence_trace(model, data.X, fixed, ord=np.inf)
        for b in _curve_steps(model.n_trees, params["every"], model.n_trees):
            rows.append(ctx.row(rep, "blv", int(b), "distance_to_fixed_point", distances[b - 1]))
        if rep == 0:
            for b, staged in enumerate(model.staged_predict(KRR_TEST_POINTS), start=1):
                if b % params["every"] == 0 or b == model.n_trees:
                    for j, value in enumerate(staged):
                        rows.append(ctx.row(rep, f"blv_point{j}", b, "interim_prediction", value))
    return rows


def run_limiting_dist(params: Dict[str, Any], ctx: ExperimentContext) -> List[MetricRow]:
    """Replicated Boulevard fits per error law; predictions at the ten points plus a KS test per point."""
    recipe = _boulevard_recipe(params)
    rows: List[MetricRow] = []
    for law_index, law_text in enumerate(params["error_laws"]):
        law = ErrorLaw.parse(law_text)
        spec = _generator(params, error_law=law_text)
        predictions = replicate_predictions(
            recipe,
            spec,
            INFERENCE_TEST_POINTS,
            params["replicates"],
            derive_seed(ctx.seed, law_index),
            n_jobs=ctx.n_jobs,
        )
        label = str(law)
        for r, row in enumerate(predictions):
            rows.extend(ctx.row(r, label, j, "prediction", v) for j, v in enumerate(row))

        if law.kind is ErrorKind.NONE:
            ctx.warn("No noise: KS test skipped", {"error_law": label})
            rows.extend(ctx.row(-1, label, j, "ks_skipped", 1.0) for j in range(predictions.shape[1]))
            continue
        for j in range(predictions.shape[1]):
            try:
                result = ks_normality(predictions[:, j])
            except DegenerateInputError as exc:
                ctx.warn(f"KS test degenerate at point {j}", {"error_law": label, "reason": str(exc)})
                rows.append(ctx.row(-1, label, j, "ks_skipped", 1.0))
                continue
            rows.append(ctx.row(-1, label, j, "ks_statistic", result.statistic))
            rows.append(ctx.row(-1, label, j, "ks_pvalue", result.p_value))
    return rows


def run_reproduction_intervals(params: Dict[str, Any], ctx: ExperimentContext) -> List[MetricRow]:
    """Intervals from one fit, then the share of independent refits landing inside each."""
    recipe = _boulevard_recipe(params)
    mode = recipe.method.value
    spec = _generator(params)
    data = generate(spec.model_copy(update={"seed": derive_seed(ctx.seed, 0)}))
    model = boulevard_fit(data.X, data.Y, recipe.boulevard_config(), derived_rng(ctx.seed, 1))
    intervals = reproduction_intervals(model, data.X, data.Y, INFERENCE_TEST_POINTS, params["level"])
    refits = replicate_predictions(
        recipe, spec, INFERENCE_TEST_POINTS, params["refits"], derive_seed(ctx.seed, 2), n_jobs=ctx.n_jobs
    )

    rows: List[MetricRow] = []
    truth = signal(FunctionId.MEAN5, INFERENCE_TEST_POINTS)
    for j, interval in enumerate(intervals):
        if interval.degenerate:
            ctx.warn(f"Degenerate reproduction interval at point {j}", {"point": j})
        inside = (refits[:, j] >= interval.lower) & (refits[:, j] <= interval.upper)
        rows.extend(
            [
                ctx.row(0, mode, j, "center", interval.center),
                ctx.row(0, mode, j, "half_width", interval.half_width),
                ctx.row(0, mode, j, "lower", interval.lower),
                ctx.row(0, mode, j, "upper", interval.upper),
                ctx.row(0, mode, j, "sigma_hat", interval.sigma_hat),
                ctx.row(0, mode, j, "coverage", float(np.mean(inside))),
                ctx.row(0, "truth", j, "signal", truth[j]),
            ]
        )
    for r, row in enumerate(refits):
        rows.extend(ctx.row(r + 1, "refit", j, "prediction", v) for j, v in enumerate(row))
    return rows


def run_variance_scaling(params: Dict[str, Any], ctx: ExperimentContext) -> List[MetricRow]:
    """
    Prediction standard deviation per point for increasing error amplitude.

    Every law reuses the same replicate seeds, so the runs share covariates and
    tree randomness and differ only in the noise.
    """
    recipe = _boulevard_recipe(params)
    rows: List[MetricRow] = []
    sds: Dict[str, np.ndarray] = {}
    for law_text in params["error_laws"]:
        label = str(ErrorLaw.parse(law_text))
        predictions = replicate_predictions(
            recipe,
            _generator(params, error_law=law_text),
            INFERENCE_TEST_POINTS,
            params["replicates"],
            ctx.seed,
            n_jobs=ctx.n_jobs,
        )
        sds[label] = predictions.std(axis=0, ddof=1)
        rows.extend(ctx.row(-1, label, j, "prediction_sd", v) for j, v in enumerate(sds[label]))

    labels = list(sds)
    for previous, current in zip(labels, labels[1:]):
        ratio = np.divide(sds[current], sds[previous], out=np.full_like(sds[current], np.nan), where=sds[previous] > 0)
        rows.extend(ctx.row(-1, f"{current}/{previous}", j, "sd_ratio", v) for j, v in enumerate(ratio))
    return rows


def run_contraction_lab(params: Dict[str, Any], ctx: ExperimentContext) -> List[MetricRow]:
    """Convergence statistics of default paths and an escape grid over (t0, noise scale)."""
    spec = ContractionSpec(
        dimension=params["dimension"],
        lambda_=params["lambda"],
        noise_scale=params["noise_scale"],
        horizon=params["horizon"],
    )
    norms = simulate_paths(spec, params["paths"], derive_seed(ctx.seed, 0), n_jobs=ctx.n_jobs)
    rows = [
        ctx.row(0, "paths", spec.horizon, "median_final_norm", float(np.median(norms[:, -1]))),
        ctx.row(0, "paths", spec.horizon, "contracting_fraction", contracting_fraction(norms)),
    ]
    for c_index, scale in enumerate(params["noise_grid"]):
        grid_spec = spec.model_copy(update={"noise_scale": float(scale)})
        for t_index, t0 in enumerate(params["t0_grid"]):
            result = escape_experiment(
                grid_spec,
                params["radius"],
                params["trials"],
                derive_seed(ctx.seed, 1 + c_index * len(params["t0_grid"]) + t_index),
                t0=int(t0),
                n_jobs=ctx.n_jobs,
            )
            method = f"c={float(scale):g}"
            rows.append(ctx.row(c_index, method, int(t0), "stay_fraction", result.fraction))
            rows.append(ctx.row(c_index, method, int(t0), "bound", result.bound))
            rows.append(ctx.row(c_index, method, int(t0), "standard_error", result.standard_error))
            if not result.consistent:
                ctx.warn("Escape fraction below the analytic bound", result.model_dump())
    return rows


Protocol = Callable[[Dict[str, Any], ExperimentContext], List[MetricRow]]

EXPERIMENTS: Dict[str, Protocol] = {
    "mse-curves": run_mse_curves,
    "krr-compare": run_krr_compare,
    "limiting-dist": run_limiting_dist,
    "reproduction-intervals": run_reproduction_intervals,
    "variance-scaling": run_variance_scaling,
    "contraction-lab": run_contraction_lab,
}
