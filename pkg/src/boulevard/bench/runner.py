"""Experiment runner, lambda sweeps and manifest reruns.

Creates the shared run store and ledger from the environment:

  BOULEVARD_OUT_DIR       output directory for CSVs and manifests (default `runs`)
  BOULEVARD_LEDGER_PATH   JSONL ledger file (default `logs/boulevard_ledger.log`)
"""

from __future__ import annotations

import json
import logging
import os
import time
import uuid
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from .. import __version__
from ..errors import ConfigurationError, ExperimentError
from ..logging.run_ledger import RunLedger
from ..models.records import ExperimentConfig, MetricRow, RunRecord
from ..store.base import RunStore
from ..store.files import FileRunStore
from .experiments import EXPERIMENTS, ExperimentContext, resolve_params

logger = logging.getLogger(__name__)

DEFAULT_OUT_DIR = "runs"
DEFAULT_LEDGER_PATH = "logs/boulevard_ledger.log"


def _create_run_store(out_dir: Optional[Union[str, Path]] = None) -> FileRunStore:
    return FileRunStore(out_dir or os.getenv("BOULEVARD_OUT_DIR", DEFAULT_OUT_DIR))


def create_runner(out_dir: Optional[Union[str, Path]] = None) -> "ExperimentRunner":
    store = _create_run_store(out_dir)
    ledger = RunLedger(store=store, file_path=Path(os.getenv("BOULEVARD_LEDGER_PATH", DEFAULT_LEDGER_PATH)))
    return ExperimentRunner(store=store, ledger=ledger)


class ExperimentRunner:
    """
    Runs named experiment protocols and persists their rows and manifest.

    Every run is reproducible from its manifest: the manifest stores the
    resolved parameters (preset merged with overrides), the seed and the
    flags that selected the preset.
    """

    def __init__(self, store: RunStore, ledger: Optional[RunLedger] = None) -> None:
        self._store = store
        self._ledger = ledger

    @property
    def store(self) -> RunStore:
        return self._store

    def run(self, config: ExperimentConfig, label: Optional[str] = None) -> RunRecord:
        if config.experiment not in EXPERIMENTS:
            raise ExperimentError(
                f"Unknown experiment: {config.experiment}. Available: {sorted(EXPERIMENTS)}"
            )
        params = resolve_params(config.experiment, config.params, full=config.full)
        name = label or config.experiment
        run_id = f"{name}-{uuid.uuid4().hex[:12]}"
        resolved = ExperimentConfig(
            experiment=config.experiment, seed=config.seed, full=config.full, n_jobs=config.n_jobs, params=params
        )

        def warn(message: str, details: Dict[str, Any]) -> None:
            if self._ledger is not None:
                self._ledger.log_warning(message, details, run_id=run_id)
            else:
                logger.warning(message)

        ctx = ExperimentContext(name=name, seed=config.seed, n_jobs=config.n_jobs, warn=warn)
        logger.info(f"Experiment {name} started (seed={config.seed}, full={config.full})")
        started = time.perf_counter()
        try:
            rows = EXPERIMENTS[config.experiment](params, ctx)
        except Exception as exc:
            if self._ledger is not None:
                self._ledger.log_error(f"Experiment {name} failed: {exc}", {"params": params}, run_id=run_id)
            raise
        elapsed = time.perf_counter() - started

        record = RunRecord(
            run_id=run_id,
            experiment=name,
            seed=config.seed,
            config=resolved.model_dump(mode="json"),
            row_count=len(rows),
            wall_time=elapsed,
            version=__version__,
        )
        stored = self._store.save_run(record, rows)
        if self._ledger is not None:
            self._ledger.log_run(
                run_id,
                f"Experiment {name} finished",
                {"rows": len(rows), "wall_time": round(elapsed, 3), "outputs": stored.outputs},
            )
        logger.info(f"Experiment {name} finished in {elapsed:.1f}s with {len(rows)} rows")
        return stored

    def rows(self, record: RunRecord) -> List[MetricRow]:
        return self._store.get_rows(record.run_id)


def run_experiment(
    name: str,
    config: Optional[ExperimentConfig] = None,
    runner: Optional[ExperimentRunner] = None,
) -> RunRecord:
    """Run one named protocol; the default runner writes under BOULEVARD_OUT_DIR."""
    config = config if config is not None else ExperimentConfig(experiment=name)
    if config.experiment != name:
        config = config.model_copy(update={"experiment": name})
    return (runner or create_runner()).run(config)


def lambda_sweep(
    config: ExperimentConfig,
    lambdas: Sequence[float],
    runner: Optional[ExperimentRunner] = None,
    methods: Sequence[str] = ("blv", "rblv"),
) -> Dict[float, RunRecord]:
    """
    The mse-curves protocol for BLV and rBLV once per lambda. Each run is
    stored under `sweep-lambda<value>`.
    """
    if not lambdas:
        raise ConfigurationError("at least one lambda is required")
    for value in lambdas:
        if not 0 < value < 1:
            raise ConfigurationError(f"lambda={value} must lie in (0, 1)")
    runner = runner or create_runner()
    records: Dict[float, RunRecord] = {}
    for value in lambdas:
        params = dict(config.params)
        params.update({"lambda": float(value), "methods": list(methods)})
        sweep_config = config.model_copy(update={"experiment": "mse-curves", "params": params})
        records[float(value)] = runner.run(sweep_config, label=f"sweep-lambda{float(value):g}")
    return records


def load_manifest(path: Union[str, Path]) -> Tuple[RunRecord, ExperimentConfig]:
    source = Path(path)
    try:
        record = RunRecord.model_validate(json.loads(source.read_text(encoding="utf-8")))
    except (OSError, ValueError) as exc:
        raise ExperimentError(f"cannot read manifest {source}: {exc}") from exc
    return record, ExperimentConfig.model_validate(record.config)


def rerun_manifest(path: Union[str, Path], out_dir: Optional[Union[str, Path]] = None) -> RunRecord:
    """Re-execute a stored run; the rerun's CSV matches the original byte for byte."""
    record, config = load_manifest(path)
    target = Path(out_dir) if out_dir is not None else Path(path).parent
    runner = ExperimentRunner(store=FileRunStore(target))
    return runner.run(config, label=record.experiment)
