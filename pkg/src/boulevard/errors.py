from __future__ import annotations

from typing import Optional


class ConfigurationError(ValueError):
    """Invalid or infeasible configuration (constraints, rates, thresholds)."""


class DomainError(ValueError):
    """A query point lies outside the unit cube [0, 1]^d."""


class DimensionError(ValueError):
    """Array shapes do not agree."""


class BudgetExceededError(ValueError):
    """An exact computation would exceed its enumeration or solve budget."""

    def __init__(self, message: str, count: int, cap: int) -> None:
        super().__init__(f"{message} (count={count}, cap={cap})")
        self.count = count
        self.cap = cap


class DegenerateInputError(ValueError):
    """Input carries no information for the requested statistic."""


class BoundInapplicableError(ValueError):
    """A probability bound's precondition does not hold."""


class DatasetError(ValueError):
    """Malformed or empty tabular input."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        text = f"{message} (line {line})" if line is not None else message
        super().__init__(text)
        self.line = line


class ExperimentError(RuntimeError):
    """Unknown experiment or a run that cannot complete."""
