from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, Field, field_validator

from ..errors import ConfigurationError


@dataclass(frozen=True, eq=False)
class EmpiricalInfluence:
    """Ensemble-averaged structure vector k_hat at one query point and its Euclidean norm."""

    k_hat: np.ndarray
    norm2: float


class ReproductionInterval(BaseModel):
    """
    Interval on the rescaled scale where a refit on an independent sample of
    the same size is expected to land.
    """

    center: float = Field(description="Rescaled prediction at the query point.")
    half_width: float
    level: float = 0.95
    sigma_hat: float = Field(description="Estimated noise standard deviation.")
    influence_norm: float = 0.0
    degenerate: bool = Field(default=False, description="Zero influence or clamped noise; width carries no information.")

    @field_validator("level")
    @classmethod
    def _check_level(cls, value: float) -> float:
        if not 0 < value < 1:
            raise ConfigurationError("level must lie in (0, 1)")
        return value

    @field_validator("half_width")
    @classmethod
    def _check_width(cls, value: float) -> float:
        if value < 0:
            raise ConfigurationError("half_width must be nonnegative")
        return value

    @property
    def lower(self) -> float:
        return self.center - self.half_width

    @property
    def upper(self) -> float:
        return self.center + self.half_width

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper


class KSResult(BaseModel):
    statistic: float
    p_value: float
    n: int
    mean: float
    sd: float
