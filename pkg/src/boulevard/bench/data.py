"""CSV ingestion and emission for regression datasets."""

from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from ..errors import DatasetError
from ..models.data import Dataset, Scaling

logger = logging.getLogger(__name__)

_PARSER_LINE = re.compile(r"line (\d+)")


def fit_scaling(X: np.ndarray) -> Scaling:
    points = np.asarray(X, dtype=float)
    return Scaling(minimum=points.min(axis=0), maximum=points.max(axis=0))


def apply_scaling(dataset: Dataset, scaling: Scaling) -> Dataset:
    """Min-max scale covariates with a scaling recorded elsewhere (e.g. on a training fold)."""
    return Dataset(
        X=scaling.apply(dataset.X),
        Y=dataset.Y,
        signal=dataset.signal,
        columns=dataset.columns,
        target=dataset.target,
        scaling=scaling,
    )


def load_csv(path: Union[str, Path], target_column: Optional[str] = None, normalize: bool = False) -> Dataset:
    """
    Read a header-first numeric CSV. The target defaults to the last column.

    Malformed rows and non-numeric cells raise DatasetError carrying the
    1-based file line number. With `normalize`, covariates are min-max scaled
    to [0, 1] and the scaling is kept on the dataset.
    """
    source = Path(path)
    if not source.exists():
        raise DatasetError(f"{source} does not exist")
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as exc:
        raise DatasetError(f"{source} is empty", line=1) from exc
    except pd.errors.ParserError as exc:
        match = _PARSER_LINE.search(str(exc))
        raise DatasetError(f"malformed row in {source}: {exc}", line=int(match.group(1)) if match else None) from exc

    if frame.empty:
        raise DatasetError(f"{source} has a header but no rows", line=2)
    target = target_column if target_column is not None else frame.columns[-1]
    if target not in frame.columns:
        raise DatasetError(f"target column '{target}' not in {list(frame.columns)}", line=1)

    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna()
    if bad.to_numpy().any():
        row, col = np.argwhere(bad.to_numpy())[0]
        column = frame.columns[col]
        kind = "non-numeric target" if column == target else "non-numeric value"
        raise DatasetError(f"{kind} '{frame.iat[row, col]}' in column '{column}'", line=int(row) + 2)

    covariates = [c for c in frame.columns if c != target]
    X = frame[covariates].astype(float).to_numpy()
    Y = frame[target].astype(float).to_numpy()
    dataset = Dataset(X=X, Y=Y, columns=tuple(covariates), target=target)
    logger.info("Loaded %d rows x %d covariates from %s", X.shape[0], X.shape[1], source)
    if normalize:
        return apply_scaling(dataset, fit_scaling(X))
    return dataset


def save_csv(dataset: Dataset, path: Union[str, Path]) -> Path:
    """Write covariates then target with round-trip float formatting."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    columns = dataset.columns or tuple(f"x{j + 1}" for j in range(dataset.d))
    frame = pd.DataFrame(dataset.X, columns=list(columns))
    frame[dataset.target] = dataset.Y
    frame.to_csv(target, index=False, encoding="utf-8", lineterminator="\n")
    return target
