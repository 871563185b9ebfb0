"""Canonical JSON reading and writing.

Result files are compared byte-for-byte across reruns, so writers go through
one canonical encoder: sorted keys, two-space indent, trailing newline.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import IoError


def canonical_dumps(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_json(path, payload):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(canonical_dumps(payload), encoding="utf-8")
    except OSError as exc:
        raise IoError(str(exc), path=str(path)) from exc


def read_json(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(str(exc), path=str(path)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise IoError(f"not valid JSON: {exc}", path=str(path)) from exc
