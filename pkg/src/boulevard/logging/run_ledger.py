from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Optional

from ..models.records import LedgerEntry, LedgerEventType
from ..store.base import RunStore

logger = logging.getLogger(__name__)


class RunLedger:
    """
    Structured run ledger that writes to a file and the run store.

    File logging is append-only, line-delimited JSON for easier ingestion
    by log aggregators. Store logging uses the `LedgerEntry` model and the
    configured `RunStore`.
    """

    def __init__(self, store: RunStore, file_path: Optional[Path] = None) -> None:
        self._store = store
        self._file_path = Path(file_path) if file_path is not None else None
        if self._file_path is not None:
            self._file_path.parent.mkdir(parents=True, exist_ok=True)

    @property
    def store(self) -> RunStore:
        return self._store

    def log_run(self, run_id: str, message: str, details: dict[str, Any]) -> LedgerEntry:
        return self._log(LedgerEventType.RUN, run_id, message, details)

    def log_metric(self, run_id: str, message: str, details: dict[str, Any]) -> LedgerEntry:
        return self._log(LedgerEventType.METRIC, run_id, message, details)

    def log_warning(self, message: str, details: dict[str, Any], run_id: Optional[str] = None) -> LedgerEntry:
        logger.warning(message)
        return self._log(LedgerEventType.WARNING, run_id, message, details)

    def log_error(self, message: str, details: dict[str, Any], run_id: Optional[str] = None) -> LedgerEntry:
        logger.error(message)
        return self._log(LedgerEventType.ERROR, run_id, message, details)

    def _log(
        self,
        event_type: LedgerEventType,
        run_id: Optional[str],
        message: str,
        details: dict[str, Any],
    ) -> LedgerEntry:
        entry = LedgerEntry(event_type=event_type, run_id=run_id, message=message, details=details)
        self._store.add_ledger_entry(entry)
        if self._file_path is None:
            return entry
        # File failures never abort a run.
        try:
            line = json.dumps(entry.serialize_row(), default=str)
            with self._file_path.open("a", encoding="utf-8") as f:
                f.write(line + "\n")
        except OSError:
            logger.debug("Ledger file %s not writable", self._file_path)
        return entry
