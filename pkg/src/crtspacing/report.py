"""JSON report envelope shared by every CLI command."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import jsonschema
import numpy as np

FORMAT_VERSION = 1

ENVELOPE_SCHEMA = {
    "type": "object",
    "required": ["format_version", "command", "inputs", "seed", "results", "elapsed_ms"],
    "additionalProperties": False,
    "properties": {
        "format_version": {"const": FORMAT_VERSION},
        "command": {"type": "string"},
        "inputs": {"type": "object"},
        "seed": {"type": ["integer", "null"], "minimum": 0, "maximum": 2**64 - 1},
        "results": {"type": ["object", "array"]},
        "elapsed_ms": {"type": "integer", "minimum": 0},
    },
}


def jsonable(obj: Any) -> Any:
    """Plain JSON types; fractions become "p/q" strings, non-finite floats strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, Fraction):
        return str(obj)
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj):
        return jsonable(dataclasses.asdict(obj))
    if obj is None or isinstance(obj, str):
        return obj
    # sympy numbers and anything else with an exact string form
    return str(obj)


@dataclass
class ReportEnvelope:
    command: str
    inputs: dict
    results: Any
    seed: int | None = None
    elapsed_ms: int = 0
    format_version: int = FORMAT_VERSION

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version, "command": self.command,
            "inputs": jsonable(self.inputs), "seed": self.seed,
            "results": jsonable(self.results), "elapsed_ms": int(self.elapsed_ms),
        }

    def to_json(self, timing: bool = True) -> str:
        d = self.to_dict()
        if not timing:
            d["elapsed_ms"] = 0
        jsonschema.validate(d, ENVELOPE_SCHEMA)
        return json.dumps(d, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ReportEnvelope":
        d = json.loads(text)
        jsonschema.validate(d, ENVELOPE_SCHEMA)
        return cls(d["command"], d["inputs"], d["results"], d["seed"], d["elapsed_ms"],
                   d["format_version"])
