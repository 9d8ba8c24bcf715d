"""Flat ``key = value`` text files used for persisted models.

Lines starting with ``#`` are comments. Keys are unique; order is preserved
on both read and write so dumps stay byte-stable.
"""

from __future__ import annotations

from typing import Dict, Iterable, Sequence, Tuple

import numpy as np

from .errors import ParseError


def fmt_float(v) -> str:
    return f"{float(v):.12g}"


def fmt_floats(values: Iterable[float]) -> str:
    return " ".join(fmt_float(v) for v in values)


def parse_floats(text: str) -> np.ndarray:
    text = text.strip()
    if not text:
        return np.zeros(0)
    return np.array([float(v) for v in text.split()])


def dumps(items: Sequence[Tuple[str, str]]) -> str:
    seen = set()
    out = []
    for key, value in items:
        if key in seen:
            raise ValueError(f"duplicate key {key!r}")
        if "=" in key or "\n" in key or "\n" in str(value):
            raise ValueError(f"key/value for {key!r} cannot be written on one line")
        seen.add(key)
        out.append(f"{key} = {value}\n")
    return "".join(out)


def loads(text: str, path=None) -> Dict[str, str]:
    data: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", line=lineno, path=path)
        key, value = line.split("=", 1)
        key = key.strip()
        if key in data:
            raise ParseError(f"duplicate key {key!r}", line=lineno, path=path)
        data[key] = value.strip()
    return data


def require(data: Dict[str, str], key: str, path=None) -> str:
    try:
        return data[key]
    except KeyError:
        raise ParseError(f"missing key {key!r}", path=path) from None
