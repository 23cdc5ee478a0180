from __future__ import annotations

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..errors import ConfigurationError


class StructureMode(str, Enum):
    RANDOMIZED = "randomized"
    GRADIENT_ADAPTIVE = "gradient_adaptive"


class StructureConstraints(BaseModel):
    """
    Leaf-size floor, diameter cap and depth budget applied by every tree builder.

    The diameter cap is checked against sqrt(d) only when a builder knows d.
    """

    model_config = ConfigDict(frozen=True)

    max_leaf_diameter: Optional[float] = Field(
        default=None,
        description="Stop splitting a cell once its diagonal length is at most this value; None disables the rule.",
    )
    min_leaf_samples: int = Field(default=5, description="Minimum number of sample points in every leaf (k).")
    max_depth: int = Field(default=10, description="Maximum number of splits on any root-to-leaf path.")

    @field_validator("min_leaf_samples")
    @classmethod
    def _check_floor(cls, value: int) -> int:
        if value < 1:
            raise ConfigurationError("min_leaf_samples must be >= 1")
        return value

    @field_validator("max_depth")
    @classmethod
    def _check_depth(cls, value: int) -> int:
        if value < 0:
            raise ConfigurationError("max_depth must be >= 0")
        return value

    @field_validator("max_leaf_diameter")
    @classmethod
    def _check_diameter(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and value <= 0:
            raise ConfigurationError("max_leaf_diameter must be positive")
        return value

    def check_dimension(self, dimension: int) -> None:
        if self.max_leaf_diameter is not None and self.max_leaf_diameter > dimension**0.5:
            raise ConfigurationError(
                f"max_leaf_diameter={self.max_leaf_diameter} exceeds sqrt(d)={dimension ** 0.5:.6g}"
            )


class BoulevardConfig(BaseModel):
    """Hyper-parameters of a Boulevard run."""

    model_config = ConfigDict(frozen=True, populate_by_name=True, use_enum_values=False)

    lambda_: float = Field(default=0.8, alias="lambda", description="Shrinkage in (0, 1).")
    theta: float = Field(default=0.8, description="Subsample rate in (0, 1].")
    n_trees: int = Field(default=100, description="Ensemble size B.")
    truncation_M: Optional[float] = Field(
        default=None,
        description="Truncation level of the fitted values; None means 10 * max|y| at fit time.",
    )
    structure_mode: StructureMode = StructureMode.RANDOMIZED
    constraints: StructureConstraints = Field(default_factory=StructureConstraints)
    seed: int = 0

    @field_validator("lambda_")
    @classmethod
    def _check_lambda(cls, value: float) -> float:
        if not 0 < value < 1:
            raise ConfigurationError("lambda must lie in (0, 1)")
        return value

    @field_validator("theta")
    @classmethod
    def _check_theta(cls, value: float) -> float:
        if not 0 < value <= 1:
            raise ConfigurationError("theta must lie in (0, 1]")
        return value

    @field_validator("n_trees")
    @classmethod
    def _check_trees(cls, value: int) -> int:
        if value < 1:
            raise ConfigurationError("n_trees must be >= 1")
        return value

    @field_validator("truncation_M")
    @classmethod
    def _check_truncation(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and value <= 0:
            raise ConfigurationError("truncation_M must be positive")
        return value

    @property
    def rescale(self) -> float:
        return (1 + self.lambda_) / self.lambda_
