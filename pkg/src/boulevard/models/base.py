from __future__ import annotations

from typing import Any, ClassVar, Dict, List, Mapping

from pydantic import BaseModel


class RecordModel(BaseModel):
    """
    Base Pydantic model for everything the bench persists as a table or a
    manifest.

    It knows how to:
    - Serialize itself into a flat, JSON-compatible row
    - Describe its own column schema from the field metadata

    The schema description is rendered offline by `boulevard.schema`; nothing
    at run time depends on it.
    """

    # Logical table name; subclasses should override
    table_name: ClassVar[str]

    def serialize_row(self) -> Dict[str, Any]:
        """Single place that controls how a record becomes a CSV/JSON row."""
        return self.model_dump(mode="json", by_alias=True)

    @classmethod
    def column_schema(cls) -> Dict[str, Any]:
        """Return a backend-agnostic column description derived from model fields."""
        fields: Mapping[str, Any] = cls.model_fields

        columns: Dict[str, Any] = {}
        required: List[str] = []

        for name, field in fields.items():
            column = field.alias or name
            columns[column] = {
                "type": cls._map_type(field.annotation),
                "nullable": not field.is_required(),
                "description": field.description,
            }
            if field.is_required():
                required.append(column)

        return {
            "table_name": cls.table_name,
            "columns": columns,
            "required": required,
        }

    @staticmethod
    def _map_type(annotation: Any) -> str:
        """Map a Python / Pydantic annotation to a generic logical type."""
        origin: Any = getattr(annotation, "__origin__", None)
        if origin is list or origin is tuple or origin is set:
            return "array"
        if origin is dict:
            return "object"

        if annotation in (int,):
            return "integer"
        if annotation in (float,):
            return "number"
        if annotation in (bool,):
            return "boolean"
        if annotation in (str,):
            return "string"

        name = getattr(annotation, "__name__", None)
        if name is None:
            # Optional[...] and unions render as their first concrete member
            args = getattr(annotation, "__args__", ())
            concrete = [a for a in args if a is not type(None)]
            return RecordModel._map_type(concrete[0]) if concrete else "object"
        return name.lower()
