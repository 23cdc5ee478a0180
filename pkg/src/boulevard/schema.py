from __future__ import annotations

import argparse
import json
from typing import Any, Dict, List, Type

from .models.base import RecordModel
from .models.ensemble import IterationTrace
from .models.records import LedgerEntry, MetricRow, RunRecord

MODEL_REGISTRY: List[Type[RecordModel]] = [
    MetricRow,
    RunRecord,
    IterationTrace,
    LedgerEntry,
]


def generate_logical_schema() -> Dict[str, Any]:
    """
    Column schema of every record the bench writes, derived from the model
    fields. This is the single source of truth for downstream readers.
    """
    return {model.table_name: model.column_schema() for model in MODEL_REGISTRY}


def render_markdown(schema: Dict[str, Any]) -> str:
    lines: List[str] = []
    for table_name, spec in schema.items():
        lines.append(f"## {table_name}")
        lines.append("")
        lines.append("| column | type | required | description |")
        lines.append("|---|---|---|---|")
        for column, meta in spec["columns"].items():
            required = "yes" if column in spec["required"] else "no"
            lines.append(f"| {column} | {meta['type']} | {required} | {meta['description'] or ''} |")
        lines.append("")
    return "\n".join(lines)


def render_json(schema: Dict[str, Any]) -> str:
    return json.dumps(schema, indent=2, default=str)


def main(argv: List[str] = None) -> None:
    parser = argparse.ArgumentParser(description="Describe the tables written by the Boulevard bench.")
    parser.add_argument(
        "--format",
        choices=["markdown", "json"],
        default="markdown",
        help="Output format.",
    )
    args = parser.parse_args(argv)

    schema = generate_logical_schema()
    if args.format == "markdown":
        print(render_markdown(schema))
    else:
        print(render_json(schema))


if __name__ == "__main__":
    main()
