"""
Canonical JSON summaries of runs.

Keys are sorted and floats use the shortest round-trip representation, so
two runs of the same configuration produce byte-identical files. Non-finite
floats become ``null``.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .. import __version__
from ..constants import OUTPUT


def _plain(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, float | np.floating):
        x = float(value)
        return x if math.isfinite(x) else None
    return value


def canonical_json(tree: Any) -> str:
    return json.dumps(
        _plain(tree), sort_keys=True, separators=(",", ":"), allow_nan=False, ensure_ascii=True
    )


def config_digest(config: Mapping[str, Any]) -> str:
    """sha256 of the canonical form of a scenario document."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


@dataclass
class RunSummary:
    command: str
    scenario: str
    config: Mapping[str, Any]
    results: dict[str, Any] = field(default_factory=dict)
    exit_code: int = 0

    @property
    def digest(self) -> str:
        return config_digest(self.config)

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "scenario": self.scenario,
            "config_digest": self.digest,
            "version": __version__,
            "exit_code": self.exit_code,
            **self.results,
        }

    def write(self, directory: str | Path, name: str = OUTPUT.SUMMARY_FILE) -> Path:
        out = Path(directory) / name
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(canonical_json(self.to_dict()) + "\n", encoding=OUTPUT.DEFAULT_ENCODING)
        return out


def read_summary(path: str | Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text(encoding=OUTPUT.DEFAULT_ENCODING))
