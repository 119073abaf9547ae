"""JSON schemas for CLI payloads and reports.

Every file here references the shared ``$defs`` of ``common.json``; they
are merged in at load time.
"""

from __future__ import annotations

import functools
import json
from importlib import resources

import jsonschema

from ..errors import SchemaError


@functools.lru_cache(maxsize=None)
def _common():
    return json.loads(resources.files(__package__).joinpath("common.json").read_text())


@functools.lru_cache(maxsize=None)
def load(name: str) -> dict:
    """Schema ``name`` (e.g. 'input_system' or 'report_state') with shared defs."""
    schema = json.loads(resources.files(__package__).joinpath(f"{name}.json").read_text())
    schema = dict(schema)
    schema["$defs"] = dict(_common()["$defs"])
    return schema


def names():
    return sorted(
        p.name[:-5]
        for p in resources.files(__package__).iterdir()
        if p.name.endswith(".json") and p.name != "common.json"
    )


def _validate(name: str, data) -> None:
    try:
        jsonschema.validate(data, load(name))
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise SchemaError(f"{name}: {exc.message} at /{path}") from exc


def validate_input(kind: str, data) -> None:
    _validate(f"input_{kind}", data)


def validate_report(kind: str, data) -> None:
    _validate(f"report_{kind}", data)
