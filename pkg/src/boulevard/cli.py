"""Command-line entry point: `boulevard <subcommand> [flags]`."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from .bench.data import load_csv, save_csv
from .bench.generators import generate
from .bench.recipes import fit_recipe, predict_model
from .bench.runner import DEFAULT_OUT_DIR, create_runner, lambda_sweep
from .errors import ConfigurationError, DatasetError, ExperimentError
from .kernel import SubsampledStructureDraw, estimate_kernel_mc, verify_kernel_properties
from .models.data import ErrorLaw, FunctionId, GeneratorSpec, Method, ModelRecipe, Scaling
from .models.records import ExperimentConfig
from .samplers import get_sampler
from .serialization import dump_model, load_model

logger = logging.getLogger(__name__)

MODEL_FILE = "model.txt"
SCALING_FILE = "scaling.json"


def _out_dir(args: argparse.Namespace) -> Path:
    target = Path(args.out or os.getenv("BOULEVARD_OUT_DIR", DEFAULT_OUT_DIR))
    target.mkdir(parents=True, exist_ok=True)
    return target


def _recipe(args: argparse.Namespace) -> ModelRecipe:
    return ModelRecipe(
        method=Method(args.mode),
        n_trees=args.trees,
        lambda_=args.lambda_,
        theta=args.theta,
        learning_rate=args.learning_rate,
        min_leaf_samples=args.leaf_size,
        max_depth=args.depth,
    )


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="Master seed.")
    parser.add_argument("--out", default=None, help="Output directory (default $BOULEVARD_OUT_DIR or ./runs).")
    parser.add_argument("--n-jobs", dest="n_jobs", type=int, default=1, help="Parallel workers.")


def _add_model_flags(parser: argparse.ArgumentParser, defaults: bool = True) -> None:
    """Hyper-parameter flags; with defaults=False unset flags stay None so presets apply."""
    parser.add_argument("--lambda", dest="lambda_", type=float, default=0.8 if defaults else None)
    parser.add_argument("--theta", type=float, default=0.8 if defaults else None)
    parser.add_argument("--trees", type=int, default=100 if defaults else None)
    parser.add_argument("--leaf-size", dest="leaf_size", type=int, default=5 if defaults else None)
    parser.add_argument("--depth", type=int, default=10 if defaults else None)


def _add_data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="CSV file with a header row.")
    parser.add_argument("--target", default=None, help="Target column (default: last column).")
    parser.add_argument("--normalize", action="store_true", help="Min-max scale covariates to [0, 1].")


def cmd_generate(args: argparse.Namespace) -> int:
    spec = GeneratorSpec(
        function_id=FunctionId(args.function),
        n=args.n,
        d=args.d,
        error_law=ErrorLaw.parse(args.error),
        seed=args.seed,
    )
    dataset = generate(spec)
    path = save_csv(dataset, _out_dir(args) / f"{spec.function_id.value}_n{spec.n}_seed{spec.seed}.csv")
    print(path)
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    dataset = load_csv(args.data, args.target, normalize=args.normalize)
    model = fit_recipe(_recipe(args), dataset.X, dataset.Y, np.random.default_rng(args.seed))
    out = _out_dir(args)
    dump_model(model, out / MODEL_FILE)
    pd.DataFrame([entry.serialize_row() for entry in model.trace]).to_csv(
        out / "trace.csv", index=False, lineterminator="\n"
    )
    if dataset.scaling is not None:
        scaling = {"minimum": dataset.scaling.minimum.tolist(), "maximum": dataset.scaling.maximum.tolist()}
        (out / SCALING_FILE).write_text(json.dumps(scaling), encoding="utf-8")
    print(out / MODEL_FILE)
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    model_path = Path(args.model)
    model = load_model(model_path)
    frame = pd.read_csv(args.data)
    if frame.shape[1] > model.dimension:
        drop = args.target if args.target is not None else frame.columns[-1]
        frame = frame.drop(columns=[drop])
    if frame.shape[1] != model.dimension:
        raise DatasetError(f"expected {model.dimension} covariate columns, found {frame.shape[1]}", line=1)
    X = frame.to_numpy(dtype=float)
    scaling_path = model_path.parent / SCALING_FILE
    if scaling_path.exists():
        stored = json.loads(scaling_path.read_text(encoding="utf-8"))
        X = Scaling(minimum=np.array(stored["minimum"]), maximum=np.array(stored["maximum"])).apply(X)
    predictions = pd.DataFrame({"prediction": predict_model(model, X)})
    target = Path(args.output) if args.output else _out_dir(args) / "predictions.csv"
    predictions.to_csv(target, index=False, lineterminator="\n")
    print(target)
    return 0


def cmd_kernel(args: argparse.Namespace) -> int:
    dataset = load_csv(args.data, args.target, normalize=args.normalize)
    recipe = _recipe(args)
    config = recipe.boulevard_config(seed=args.seed)
    draw = SubsampledStructureDraw(
        get_sampler(config.structure_mode),
        dataset.X,
        config.constraints,
        config.theta,
        z=dataset.Y if recipe.method is Method.BLV else None,
    )
    estimate = estimate_kernel_mc(dataset.X, draw, args.replications, args.seed, n_jobs=args.n_jobs)
    report = verify_kernel_properties(estimate, tol=args.tolerance)

    n = estimate.n
    rows, cols = np.indices((n, n))
    frame = pd.DataFrame(
        {
            "row": rows.ravel(),
            "col": cols.ravel(),
            "value": estimate.matrix.ravel(),
            "std_error": estimate.std_error.ravel(),
        }
    )
    out = _out_dir(args)
    frame.to_csv(out / "kernel.csv", index=False, lineterminator="\n")
    (out / "kernel_report.json").write_text(report.model_dump_json(indent=2), encoding="utf-8")
    print(f"kernel {n}x{n}, properties {'passed' if report.passed else 'FAILED'}")
    return 0 if report.passed else 1


def _experiment_params(args: argparse.Namespace) -> Dict[str, Any]:
    params: Dict[str, Any] = {}
    for item in args.param or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigurationError(f"--param expects key=value, got '{item}'")
        try:
            params[key] = json.loads(value)
        except json.JSONDecodeError:
            params[key] = value
    flags = {
        "lambda": args.lambda_,
        "theta": args.theta,
        "n_trees": args.trees,
        "leaf_size": args.leaf_size,
        "depth": args.depth,
        "data": getattr(args, "data", None),
        "preset": getattr(args, "preset", None),
    }
    params.update({k: v for k, v in flags.items() if v is not None})
    return params


def cmd_experiment(args: argparse.Namespace) -> int:
    params = _experiment_params(args)
    if args.mode:
        if args.name == "mse-curves":
            params["methods"] = list(args.mode)
        elif len(args.mode) > 1:
            raise ConfigurationError(f"{args.name} fits a single mode, got {args.mode}")
        else:
            params["mode"] = args.mode[0]
    config = ExperimentConfig(
        experiment=args.name, seed=args.seed, full=args.full, n_jobs=args.n_jobs, params=params
    )
    record = create_runner(args.out).run(config)
    print(json.dumps({"run_id": record.run_id, "outputs": record.outputs}))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = ExperimentConfig(
        experiment="mse-curves", seed=args.seed, full=args.full, n_jobs=args.n_jobs, params=_experiment_params(args)
    )
    config = config.model_copy(update={"params": {k: v for k, v in config.params.items() if k != "lambda"}})
    methods = args.mode or [Method.BLV.value, Method.RBLV.value]
    records = lambda_sweep(config, args.lambdas, runner=create_runner(args.out), methods=methods)
    print(json.dumps({f"{k:g}": r.outputs for k, r in records.items()}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boulevard", description="Boulevard boosting toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="Write a synthetic dataset as CSV.")
    _add_common(p)
    p.add_argument("--function", choices=[f.value for f in FunctionId], default="mean5")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--error", default="uniform(1)", help="uniform(a), normal(s), rademacher, mixed or none.")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("fit", help="Fit a model on a CSV and write it with its trace.")
    _add_common(p)
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--mode", choices=[m.value for m in Method], default="rblv")
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=0.1)
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("predict", help="Predict a CSV with a stored model.")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--target", default=None, help="Column to drop when the file also holds responses.")
    p.add_argument("--output", default=None, help="Prediction file (default <out>/predictions.csv).")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("kernel", help="Monte Carlo estimate of E[S_n] with a property report.")
    _add_common(p)
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--mode", choices=[Method.BLV.value, Method.RBLV.value], default="rblv")
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=0.1)
    p.add_argument("--replications", type=int, default=1000)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.set_defaults(handler=cmd_kernel)

    for name, handler, help_text in (
        ("experiment", cmd_experiment, "Run a named experiment protocol."),
        ("sweep", cmd_sweep, "Run mse-curves for BLV and rBLV over several lambdas."),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        _add_model_flags(p, defaults=False)
        if name == "experiment":
            p.add_argument("name", help="mse-curves, krr-compare, limiting-dist, reproduction-intervals, "
                           "variance-scaling or contraction-lab")
        else:
            p.add_argument("--lambdas", type=float, nargs="+", default=[0.2, 0.5, 0.8])
        p.add_argument(
            "--mode",
            action="append",
            choices=[m.value for m in Method],
            help="Method to run; repeat for several (mse-curves and sweep).",
        )
        p.add_argument("--full", action="store_true", help="Full-scale sizes instead of desk-scale defaults.")
        p.add_argument("--data", default=None, help="Real-data CSV for mse-curves (cross-validated).")
        p.add_argument("--preset", default=None, help="Real-data preset: boston, ccpp, casp or airfoil.")
        p.add_argument("--param", action="append", help="Extra preset override key=value (JSON values).")
        p.set_defaults(handler=handler)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except (ConfigurationError, DatasetError, ExperimentError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
