"""Flat ``key=value`` configuration files.

Blank lines and lines starting with ``#`` are ignored. Values stay strings;
callers convert them.
"""

from __future__ import annotations

from pathlib import Path

from .errors import FormatError


def parse_kv(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"expected key=value, got {raw!r}", line=lineno)
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise FormatError("empty key", line=lineno)
        if key in out:
            raise FormatError(f"duplicate key {key!r}", line=lineno)
        out[key] = value.strip()
    return out


def read_kv(path) -> dict:
    return parse_kv(Path(path).read_text(encoding="utf-8"))


def format_kv(items: dict) -> str:
    return "".join(f"{k}={v}\n" for k, v in items.items())


def write_kv(items: dict, path) -> None:
    Path(path).write_text(format_kv(items), encoding="utf-8")


def parse_bool(value: str) -> bool:
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")
