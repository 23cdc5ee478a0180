from __future__ import annotations

from typing import Dict, Iterable, List, Optional

from ..models.records import LedgerEntry, MetricRow, RunRecord
from .base import RunStore


class InMemoryRunStore(RunStore):
    """
    In-memory store used for tests and interactive sessions.
    Nothing survives the process.
    """

    def __init__(self) -> None:
        self._runs: Dict[str, RunRecord] = {}
        self._rows: Dict[str, List[MetricRow]] = {}
        self._ledger: List[LedgerEntry] = []

    def save_run(self, record: RunRecord, rows: List[MetricRow]) -> RunRecord:
        self._runs[record.run_id] = record
        self._rows[record.run_id] = list(rows)
        return record

    def get_run(self, run_id: str) -> Optional[RunRecord]:
        return self._runs.get(run_id)

    def get_rows(self, run_id: str) -> List[MetricRow]:
        return list(self._rows.get(run_id, []))

    def list_runs(self) -> Iterable[RunRecord]:
        return list(self._runs.values())

    def add_ledger_entry(self, entry: LedgerEntry) -> LedgerEntry:
        self._ledger.append(entry)
        return entry

    def get_ledger_entries(self, run_id: Optional[str] = None) -> List[LedgerEntry]:
        if run_id is None:
            return list(self._ledger)
        return [e for e in self._ledger if e.run_id == run_id]
