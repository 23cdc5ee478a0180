from __future__ import annotations

from datetime import datetime, timezone
from enum import Enum
from typing import Any, ClassVar, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator

from ..errors import ConfigurationError
from .base import RecordModel


class MetricRow(RecordModel):
    """One row of the tidy long-format experiment output."""

    table_name: ClassVar[str] = "metrics"

    experiment: str = Field(description="Experiment name, e.g. krr-compare.")
    replicate: int = Field(description="Replicate, fold or seed counter; 0 when the run has a single replicate.")
    method: str = Field(description="Method or series label, e.g. rblv, krr, bound.")
    index: int = Field(description="Iteration number or test-point index, depending on the metric.")
    metric: str = Field(description="Metric name, e.g. test_mse, prediction, coverage.")
    value: float


class ExperimentConfig(BaseModel):
    """Everything needed to rerun an experiment bit-exactly."""

    experiment: str
    seed: int = 0
    full: bool = Field(default=False, description="Use the full-scale sizes instead of desk-scale defaults.")
    n_jobs: int = 1
    params: Dict[str, Any] = Field(default_factory=dict, description="Overrides of the experiment preset.")

    @field_validator("n_jobs")
    @classmethod
    def _check_jobs(cls, value: int) -> int:
        if value == 0:
            raise ConfigurationError("n_jobs must be nonzero")
        return value


class RunRecord(RecordModel):
    """Manifest of one experiment run."""

    table_name: ClassVar[str] = "runs"

    run_id: str
    experiment: str
    seed: int
    config: Dict[str, Any] = Field(description="Resolved experiment configuration including preset values.")
    outputs: List[str] = Field(default_factory=list, description="Files written by the run.")
    row_count: int = 0
    wall_time: float = Field(default=0.0, description="Seconds spent running the protocol.")
    version: Optional[str] = None
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))


class LedgerEventType(str, Enum):
    RUN = "run"
    METRIC = "metric"
    WARNING = "warning"
    ERROR = "error"


class LedgerEntry(RecordModel):
    """
    Structured ledger entry kept by the run store and mirrored to a JSONL file.
    """

    table_name: ClassVar[str] = "run_ledger"

    event_type: LedgerEventType
    run_id: Optional[str] = Field(
        default=None,
        description="Run the entry belongs to, for tracing one experiment across components.",
    )
    message: str
    details: Dict[str, Any] = Field(default_factory=dict)
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
