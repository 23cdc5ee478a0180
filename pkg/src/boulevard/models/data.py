from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..errors import ConfigurationError
from .config import BoulevardConfig, StructureConstraints, StructureMode


class FunctionId(str, Enum):
    F1 = "f1"
    F2 = "f2"
    MEAN5 = "mean5"


FUNCTION_ARITY = {FunctionId.F1: 4, FunctionId.F2: 7, FunctionId.MEAN5: 5}


class ErrorKind(str, Enum):
    UNIFORM = "uniform"
    RADEMACHER = "rademacher"
    NORMAL = "normal"
    MIXED = "mixed"
    NONE = "none"


_LAW_PATTERN = re.compile(r"^\s*([a-z_0-9]+)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


class ErrorLaw(BaseModel):
    """
    Additive noise distribution.

    uniform(a) is Unif[-a, a], normal(s) is N(0, s^2), rademacher is +-1 with
    equal chance, mixed is -1 or Unif[0, 2] with equal chance, none is zero.
    """

    model_config = ConfigDict(frozen=True)

    kind: ErrorKind = ErrorKind.UNIFORM
    scale: float = Field(default=1.0, description="Half-width for uniform, standard deviation for normal.")

    @field_validator("scale")
    @classmethod
    def _check_scale(cls, value: float) -> float:
        if value < 0:
            raise ConfigurationError("error scale must be nonnegative")
        return value

    @classmethod
    def parse(cls, text: str) -> "ErrorLaw":
        match = _LAW_PATTERN.match(text.lower())
        if match is None:
            raise ConfigurationError(f"cannot parse error law '{text}'")
        name, argument = match.group(1), match.group(2)
        if name == "mixed_neg1_unif02":
            name = "mixed"
        try:
            kind = ErrorKind(name)
        except ValueError as exc:
            raise ConfigurationError(f"unknown error law '{name}'") from exc
        scale = float(argument) if argument else 1.0
        return cls(kind=kind, scale=scale)

    def __str__(self) -> str:
        if self.kind in (ErrorKind.UNIFORM, ErrorKind.NORMAL):
            return f"{self.kind.value}({self.scale:g})"
        return self.kind.value

    @property
    def std(self) -> float:
        if self.kind is ErrorKind.UNIFORM:
            return self.scale / np.sqrt(3.0)
        if self.kind is ErrorKind.NORMAL:
            return self.scale
        if self.kind is ErrorKind.RADEMACHER:
            return 1.0
        if self.kind is ErrorKind.MIXED:
            # E[e^2] = 0.5 * 1 + 0.5 * 4/3
            return float(np.sqrt(7.0 / 6.0))
        return 0.0

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind is ErrorKind.UNIFORM:
            return rng.uniform(-self.scale, self.scale, size=n)
        if self.kind is ErrorKind.NORMAL:
            return rng.normal(0.0, self.scale, size=n)
        if self.kind is ErrorKind.RADEMACHER:
            return rng.choice(np.array([-1.0, 1.0]), size=n)
        if self.kind is ErrorKind.MIXED:
            heads = rng.random(n) < 0.5
            return np.where(heads, -1.0, rng.uniform(0.0, 2.0, size=n))
        return np.zeros(n)


class GeneratorSpec(BaseModel):
    """Synthetic regression problem: covariates i.i.d. Unif[0,1]^d, a known signal and additive noise."""

    model_config = ConfigDict(frozen=True)

    function_id: FunctionId = FunctionId.MEAN5
    n: int = Field(default=1000, description="Number of rows.")
    d: int = Field(default=5, description="Covariate dimension; must cover the signal's arity.")
    error_law: ErrorLaw = Field(default_factory=ErrorLaw)
    seed: int = 0

    @field_validator("error_law", mode="before")
    @classmethod
    def _parse_law(cls, value):
        if isinstance(value, str):
            return ErrorLaw.parse(value)
        return value

    @field_validator("n")
    @classmethod
    def _check_rows(cls, value: int) -> int:
        if value < 1:
            raise ConfigurationError("n must be >= 1")
        return value

    @model_validator(mode="after")
    def _check_arity(self) -> "GeneratorSpec":
        arity = FUNCTION_ARITY[self.function_id]
        if self.d < arity:
            raise ConfigurationError(f"{self.function_id.value} needs d >= {arity}, got d={self.d}")
        return self


class Method(str, Enum):
    BLV = "blv"
    RBLV = "rblv"
    GBT = "gbt"
    SGBT = "sgbt"
    RF = "rf"


class ModelRecipe(BaseModel):
    """A fitting method together with every hyper-parameter it needs."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    method: Method = Method.RBLV
    n_trees: int = 100
    lambda_: float = Field(default=0.8, alias="lambda")
    theta: float = 0.8
    learning_rate: float = Field(default=0.1, description="Step size of gbt and sgbt.")
    min_leaf_samples: int = 5
    max_depth: int = 10
    max_leaf_diameter: Optional[float] = None

    def constraints(self) -> StructureConstraints:
        return StructureConstraints(
            min_leaf_samples=self.min_leaf_samples,
            max_depth=self.max_depth,
            max_leaf_diameter=self.max_leaf_diameter,
        )

    def boulevard_config(self, seed: int = 0) -> BoulevardConfig:
        if self.method not in (Method.BLV, Method.RBLV):
            raise ConfigurationError(f"{self.method.value} is not a Boulevard method")
        mode = StructureMode.GRADIENT_ADAPTIVE if self.method is Method.BLV else StructureMode.RANDOMIZED
        return BoulevardConfig(
            lambda_=self.lambda_,
            theta=self.theta,
            n_trees=self.n_trees,
            structure_mode=mode,
            constraints=self.constraints(),
            seed=seed,
        )


@dataclass(frozen=True, eq=False)
class Scaling:
    """Per-column min-max scaling recorded on a training set."""

    minimum: np.ndarray
    maximum: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        span = self.maximum - self.minimum
        span = np.where(span > 0, span, 1.0)
        return np.clip((np.asarray(X, dtype=float) - self.minimum) / span, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    signal: Optional[np.ndarray] = None
    columns: Tuple[str, ...] = ()
    target: str = "y"
    scaling: Optional[Scaling] = None

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    @property
    def d(self) -> int:
        return int(self.X.shape[1])

    def subset(self, rows: np.ndarray) -> "Dataset":
        return Dataset(
            X=self.X[rows],
            Y=self.Y[rows],
            signal=None if self.signal is None else self.signal[rows],
            columns=self.columns,
            target=self.target,
            scaling=self.scaling,
        )
