from __future__ import annotations

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..errors import ConfigurationError


class ContractionSpec(BaseModel):
    """
    Stochastic contraction Z_t = lambda_t Z_{t-1} + e_t.

    lambda_t = (t - 1 + lambda) / t and e_t is uniform on the ball of radius
    c / t**p. With p > 1/2 the noise scales are square-summable, and
    sum(1 - lambda_t) = (1 - lambda) * sum(1/t) diverges, so the process
    converges to 0.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    dimension: int = 1
    lambda_: float = Field(default=0.5, alias="lambda", description="lambda in lambda_t = (t - 1 + lambda) / t.")
    noise_scale: float = Field(default=1.0, description="c in the deviation bound c / t**p.")
    noise_decay: float = Field(default=1.0, description="p in the deviation bound c / t**p.")
    horizon: int = Field(default=100_000, description="T_max.")
    z0: Optional[List[float]] = Field(default=None, description="Initial vector; None means all ones.")

    @field_validator("lambda_")
    @classmethod
    def _check_lambda(cls, value: float) -> float:
        if not 0 < value <= 1:
            raise ConfigurationError("lambda must lie in (0, 1]")
        return value

    @field_validator("noise_scale")
    @classmethod
    def _check_scale(cls, value: float) -> float:
        if value < 0:
            raise ConfigurationError("noise_scale must be nonnegative")
        return value

    @field_validator("noise_decay")
    @classmethod
    def _check_decay(cls, value: float) -> float:
        if value <= 0.5:
            raise ConfigurationError("noise_decay must exceed 1/2 for square-summable noise")
        return value

    @field_validator("horizon")
    @classmethod
    def _check_horizon(cls, value: int) -> int:
        if value < 1:
            raise ConfigurationError("horizon must be >= 1")
        return value

    @model_validator(mode="after")
    def _check_start(self) -> "ContractionSpec":
        if self.dimension < 1:
            raise ConfigurationError("dimension must be >= 1")
        if self.z0 is not None and len(self.z0) != self.dimension:
            raise ConfigurationError(f"z0 has {len(self.z0)} entries, expected {self.dimension}")
        return self

    def initial(self) -> np.ndarray:
        if self.z0 is None:
            return np.ones(self.dimension)
        return np.asarray(self.z0, dtype=float)

    def lambdas(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return (t - 1 + self.lambda_) / t

    def noise_bounds(self, t: np.ndarray) -> np.ndarray:
        return self.noise_scale / np.asarray(t, dtype=float) ** self.noise_decay

    def noise_second_moments(self, t: np.ndarray) -> np.ndarray:
        """E||e_t||^2 for e_t uniform on the ball of radius r_t in R^d: r_t^2 d / (d + 2)."""
        d = self.dimension
        return self.noise_bounds(t) ** 2 * d / (d + 2)


class EscapeResult(BaseModel):
    """Fraction of paths started at radius r at time t0 that stay in B(0, 2r) up to the horizon."""

    t0: int
    radius: float
    trials: int
    fraction: float
    bound: float = Field(description="Kolmogorov-inequality lower bound; 0 when the bound is inapplicable.")
    standard_error: float
    bound_applicable: bool = True

    @property
    def consistent(self) -> bool:
        return self.fraction >= self.bound - 3 * self.standard_error
