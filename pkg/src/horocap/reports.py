"""Report persistence: deterministic CSV/JSON writers and the run manifest.

Floats serialize with 17 significant digits in scientific notation,
locale-independent, so identical runs produce byte-identical CSV bodies.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "fmt_float",
    "format_cell",
    "write_csv",
    "write_json",
    "RunManifest",
    "config_hash",
]


def fmt_float(x: float) -> str:
    """17-significant-digit scientific notation (round-trip exact)."""
    return "%.16e" % float(x)


def format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _jsonable(value):
    if isinstance(value, float):
        return float(fmt_float(value))
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "tolist"):
        return _jsonable(value.tolist())
    return value


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8", newline="\n")


def config_hash(config_dict: dict) -> str:
    """SHA-256 of the canonical JSON serialization of the configuration."""
    blob = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    """One status per configured surface plus run provenance."""

    config_hash: str
    tool_version: str
    statuses: dict = field(default_factory=dict)  # label -> status string
    wall_time_s: float = 0.0

    def record(self, label: str, status: str) -> None:
        self.statuses[label] = status

    @property
    def ok(self) -> bool:
        return not any(s in ("FAIL", "ERROR") for s in self.statuses.values())

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "tool_version": self.tool_version,
            "statuses": dict(sorted(self.statuses.items())),
            "wall_time_s": self.wall_time_s,
        }
