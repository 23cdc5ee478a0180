from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Iterable, List, Optional

from ..models.records import LedgerEntry, MetricRow, RunRecord


class RunStore(ABC):
    """
    Storage-agnostic interface for experiment results.

    A run is its manifest (`RunRecord`) plus the tidy metric rows it produced;
    ledger entries are kept alongside.
    """

    @abstractmethod
    def save_run(self, record: RunRecord, rows: List[MetricRow]) -> RunRecord: ...

    @abstractmethod
    def get_run(self, run_id: str) -> Optional[RunRecord]: ...

    @abstractmethod
    def get_rows(self, run_id: str) -> List[MetricRow]: ...

    @abstractmethod
    def list_runs(self) -> Iterable[RunRecord]: ...

    @abstractmethod
    def add_ledger_entry(self, entry: LedgerEntry) -> LedgerEntry: ...

    @abstractmethod
    def get_ledger_entries(self, run_id: Optional[str] = None) -> List[LedgerEntry]: ...
