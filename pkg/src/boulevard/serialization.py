"""Flat text model format.

One header block followed by one record per tree:

    # boulevard-model v1
    kind boulevard
    dimension 5
    config {...json...}
    truncation_M 12.3
    snapshot 17 0.01              (b* or '-', loss threshold)
    frozen 0.1 0.2 ...            (snapshot residuals, optional)
    fitted 0.1 0.2 ...            (final training fit, optional)
    trace 1 0.5 3.2 0             (iteration loss step_norm clipped)
    tree 0 3                      (index depth)
    subsample 200 0.8 0 3 4 ...   (population theta indices)
    node -1 0.0 -1 -1 0           (feature threshold left right leaf_id)
    leaf 0 1.25 7 0.0 0.0 0.5 1.0 (leaf_id value count lower... upper...)
    end

Floats are written with repr, which round-trips bit-exactly.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from .errors import DatasetError
from .models.config import BoulevardConfig
from .models.ensemble import BaselineModel, BoulevardModel, EnsembleKind, IterationTrace, SnapshotState
from .models.trees import FittedTree, Subsample, TreeStructure

logger = logging.getLogger(__name__)

HEADER = "# boulevard-model v1"

Model = Union[BoulevardModel, BaselineModel]


def _floats(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def _ints(values) -> str:
    return " ".join(str(int(v)) for v in values)


def dumps_model(model: Model) -> str:
    lines: List[str] = [HEADER, f"kind {model.kind.value}", f"dimension {model.dimension}"]
    if isinstance(model, BoulevardModel):
        lines.append(f"config {model.config.model_dump_json(by_alias=True)}")
        lines.append(f"truncation_M {model.truncation_M!r}")
        if model.snapshot is not None:
            b_star = "-" if model.snapshot.b_star is None else str(model.snapshot.b_star)
            lines.append(f"snapshot {b_star} {model.snapshot.loss_threshold!r}")
            if model.snapshot.frozen_residuals is not None:
                lines.append(f"frozen {_floats(model.snapshot.frozen_residuals)}")
        if model.fitted is not None:
            lines.append(f"fitted {_floats(model.fitted)}")
    else:
        lines.append(f"learning_rate {model.learning_rate!r}")

    for entry in model.trace:
        lines.append(f"trace {entry.iteration} {entry.loss!r} {entry.step_norm!r} {entry.clipped}")

    for index, tree in enumerate(model.trees):
        structure = tree.structure
        lines.append(f"tree {index} {structure.depth}")
        lines.append(
            f"subsample {tree.subsample.population} {tree.subsample.theta!r} {_ints(tree.subsample.indices)}".rstrip()
        )
        for node in range(structure.node_count):
            lines.append(
                f"node {structure.feature[node]} {float(structure.threshold[node])!r} "
                f"{structure.left[node]} {structure.right[node]} {structure.leaf_id[node]}"
            )
        for leaf in range(structure.leaf_count):
            lines.append(
                f"leaf {leaf} {float(tree.leaf_values[leaf])!r} {int(tree.leaf_counts[leaf])} "
                f"{_floats(structure.leaf_lower[leaf])} {_floats(structure.leaf_upper[leaf])}"
            )
        lines.append("end")
    return "\n".join(lines) + "\n"


def dump_model(model: Model, path: Union[str, Path]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(dumps_model(model), encoding="utf-8")
    logger.info("Model with %d trees written to %s", model.n_trees, target)
    return target


class _TreeRecord:
    def __init__(self, depth: int = 0) -> None:
        self.depth = depth
        self.subsample: Optional[Subsample] = None
        self.nodes: List[List[str]] = []
        self.leaves: List[List[str]] = []

    def build(self, dimension: int) -> FittedTree:
        order = sorted(self.leaves, key=lambda fields: int(fields[0]))
        structure = TreeStructure(
            dimension=dimension,
            feature=np.array([int(f[0]) for f in self.nodes]),
            threshold=np.array([float(f[1]) for f in self.nodes]),
            left=np.array([int(f[2]) for f in self.nodes]),
            right=np.array([int(f[3]) for f in self.nodes]),
            leaf_id=np.array([int(f[4]) for f in self.nodes]),
            leaf_lower=np.array([[float(v) for v in f[3 : 3 + dimension]] for f in order]),
            leaf_upper=np.array([[float(v) for v in f[3 + dimension : 3 + 2 * dimension]] for f in order]),
            depth=self.depth,
        )
        return FittedTree(
            structure=structure,
            subsample=self.subsample,
            leaf_values=np.array([float(f[1]) for f in order]),
            leaf_counts=np.array([int(f[2]) for f in order]),
        )


def loads_model(text: str) -> Model:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise DatasetError("not a boulevard model file", line=1)

    header: Dict[str, str] = {}
    trace: List[IterationTrace] = []
    trees: List[FittedTree] = []
    current: Optional[_TreeRecord] = None
    dimension = 0

    for number, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        tag, _, rest = line.partition(" ")
        fields = rest.split()
        try:
            if tag == "tree":
                current = _TreeRecord(depth=int(fields[1]) if len(fields) > 1 else 0)
            elif tag == "subsample":
                current.subsample = Subsample(
                    indices=np.array([int(v) for v in fields[2:]], dtype=np.int64),
                    population=int(fields[0]),
                    theta=float(fields[1]),
                )
            elif tag == "node":
                current.nodes.append(fields)
            elif tag == "leaf":
                current.leaves.append(fields)
            elif tag == "end":
                trees.append(current.build(dimension))
                current = None
            elif tag == "trace":
                trace.append(
                    IterationTrace(
                        iteration=int(fields[0]), loss=float(fields[1]), step_norm=float(fields[2]), clipped=int(fields[3])
                    )
                )
            elif tag == "dimension":
                dimension = int(fields[0])
            else:
                header[tag] = rest
        except (AttributeError, IndexError, ValueError) as exc:
            raise DatasetError(f"malformed model record '{tag}': {exc}", line=number) from exc

    try:
        kind = EnsembleKind(header.get("kind", ""))
    except ValueError as exc:
        raise DatasetError(f"unknown model kind '{header.get('kind', '')}'", line=2) from exc
    if current is not None:
        raise DatasetError("tree record is missing its 'end' line", line=len(lines))
    if kind is not EnsembleKind.BOULEVARD:
        return BaselineModel(
            trees=trees,
            dimension=dimension,
            trace=trace,
            kind=kind,
            learning_rate=float(header.get("learning_rate", "1.0")),
        )

    snapshot = None
    if "snapshot" in header:
        b_star_text, threshold_text = header["snapshot"].split()
        frozen = np.array([float(v) for v in header["frozen"].split()]) if "frozen" in header else None
        snapshot = SnapshotState(
            loss_threshold=float(threshold_text),
            b_star=None if b_star_text == "-" else int(b_star_text),
            frozen_residuals=frozen,
        )
    fitted = np.array([float(v) for v in header["fitted"].split()]) if "fitted" in header else None
    return BoulevardModel(
        trees=trees,
        dimension=dimension,
        trace=trace,
        config=BoulevardConfig.model_validate_json(header["config"]),
        truncation_M=float(header["truncation_M"]),
        fitted=fitted,
        snapshot=snapshot,
    )


def load_model(path: Union[str, Path]) -> Model:
    return loads_model(Path(path).read_text(encoding="utf-8"))
