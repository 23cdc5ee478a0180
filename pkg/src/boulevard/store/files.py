from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

import pandas as pd

from ..models.records import LedgerEntry, MetricRow, RunRecord
from .base import RunStore

logger = logging.getLogger(__name__)

METRIC_COLUMNS = list(MetricRow.model_fields)


def rows_to_frame(rows: List[MetricRow]) -> pd.DataFrame:
    return pd.DataFrame([row.serialize_row() for row in rows], columns=METRIC_COLUMNS)


def frame_to_rows(frame: pd.DataFrame) -> List[MetricRow]:
    return [MetricRow(**record) for record in frame.to_dict(orient="records")]


def manifest_path(out_dir: Union[str, Path], experiment: str) -> Path:
    return Path(out_dir) / f"{experiment}.manifest.json"


class FileRunStore(RunStore):
    """
    Directory-backed store: `<experiment>.csv` holds the tidy rows and
    `<experiment>.manifest.json` the RunRecord. A rerun of the same experiment
    into the same directory replaces both files.

    Floats are written with pandas' default repr formatting, which round-trips
    exactly, so identical runs give byte-identical CSVs.
    """

    def __init__(self, out_dir: Union[str, Path]) -> None:
        self._out_dir = Path(out_dir)
        self._out_dir.mkdir(parents=True, exist_ok=True)
        self._ledger: List[LedgerEntry] = []

    @property
    def out_dir(self) -> Path:
        return self._out_dir

    def csv_path(self, experiment: str) -> Path:
        return self._out_dir / f"{experiment}.csv"

    def save_run(self, record: RunRecord, rows: List[MetricRow]) -> RunRecord:
        csv_file = self.csv_path(record.experiment)
        manifest_file = manifest_path(self._out_dir, record.experiment)
        rows_to_frame(rows).to_csv(csv_file, index=False, encoding="utf-8", lineterminator="\n")
        stored = record.model_copy(
            update={"outputs": [csv_file.name, manifest_file.name], "row_count": len(rows)}
        )
        manifest_file.write_text(stored.model_dump_json(indent=2), encoding="utf-8")
        logger.info(f"Run {stored.run_id}: {len(rows)} rows written to {csv_file}")
        return stored

    def _manifests(self) -> Dict[str, RunRecord]:
        found: Dict[str, RunRecord] = {}
        for path in sorted(self._out_dir.glob("*.manifest.json")):
            try:
                record = RunRecord.model_validate(json.loads(path.read_text(encoding="utf-8")))
            except (OSError, ValueError):
                logger.warning(f"Skipping unreadable manifest {path}")
                continue
            found[record.run_id] = record
        return found

    def get_run(self, run_id: str) -> Optional[RunRecord]:
        return self._manifests().get(run_id)

    def get_rows(self, run_id: str) -> List[MetricRow]:
        record = self.get_run(run_id)
        if record is None:
            return []
        return frame_to_rows(pd.read_csv(self.csv_path(record.experiment), float_precision="round_trip"))

    def list_runs(self) -> Iterable[RunRecord]:
        return list(self._manifests().values())

    def add_ledger_entry(self, entry: LedgerEntry) -> LedgerEntry:
        self._ledger.append(entry)
        return entry

    def get_ledger_entries(self, run_id: Optional[str] = None) -> List[LedgerEntry]:
        if run_id is None:
            return list(self._ledger)
        return [e for e in self._ledger if e.run_id == run_id]
