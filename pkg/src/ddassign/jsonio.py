"""JSON helpers: matrices as row-major nested lists, complex as {"re", "im"}."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError


def encode_scalar(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def encode_matrix(M) -> list:
    A = np.asarray(M)
    if np.iscomplexobj(A) and np.any(A.imag != 0):
        return [[encode_scalar(v) for v in row] for row in A]
    return np.real(A).astype(float).tolist()


def encode_complex_list(values) -> list:
    return [encode_scalar(v) for v in values]


def parse_complex(text) -> complex:
    """Parse ``"a"``, ``"a+bi"``, ``"bi"``, a number, or ``{"re", "im"}``."""
    if isinstance(text, dict):
        try:
            z = complex(float(text["re"]), float(text.get("im", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad complex object {text!r}") from exc
    elif isinstance(text, (int, float)) and not isinstance(text, bool):
        z = complex(text)
    elif isinstance(text, str):
        s = text.strip().replace(" ", "").replace("i", "j")
        try:
            z = complex(s)
        except ValueError as exc:
            raise ParseError(f"bad complex literal {text!r}") from exc
    else:
        raise ParseError(f"bad complex value {text!r}")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ParseError(f"non-finite complex value {text!r}")
    return z


def parse_matrix(obj, name: str, shape: tuple[int, int] | None = None,
                 allow_complex: bool = False) -> np.ndarray:
    """Validate a nested list and convert it to an array.

    Errors name the field and, for bad entries, the (row, col) coordinate.
    """
    if not isinstance(obj, list) or not all(isinstance(r, list) for r in obj):
        raise ParseError(f"field {name!r} must be a list of rows", field=name)
    rows = len(obj)
    cols = len(obj[0]) if rows else 0
    for i, row in enumerate(obj):
        if len(row) != cols:
            raise ParseError(f"field {name!r}: row {i} has {len(row)} entries, expected {cols}",
                             field=name)
    if shape is not None and (rows, cols) != tuple(shape):
        raise ParseError(f"field {name!r} has shape {(rows, cols)}, expected {tuple(shape)}",
                         field=name)
    dtype = complex if allow_complex else float
    out = np.zeros((rows, cols), dtype=dtype)
    for i, row in enumerate(obj):
        for j, v in enumerate(row):
            if isinstance(v, bool) or v is None:
                raise ParseError(f"field {name!r}: entry ({i}, {j}) is not a number",
                                 field=name, coord=(i, j))
            if isinstance(v, dict) or isinstance(v, str):
                if not allow_complex:
                    raise ParseError(f"field {name!r}: entry ({i}, {j}) must be real",
                                     field=name, coord=(i, j))
                try:
                    val = parse_complex(v)
                except ParseError as exc:
                    raise ParseError(f"field {name!r}: entry ({i}, {j}): {exc}",
                                     field=name, coord=(i, j)) from exc
            elif isinstance(v, (int, float)):
                val = v
            else:
                raise ParseError(f"field {name!r}: entry ({i}, {j}) is not a number",
                                 field=name, coord=(i, j))
            if not np.isfinite(val):
                raise ParseError(f"field {name!r}: entry ({i}, {j}) is not finite",
                                 field=name, coord=(i, j))
            out[i, j] = val
    if allow_complex and np.all(out.imag == 0):
        out = out.real.copy()
    return out


def read_json(path) -> dict:
    p = Path(path)
    text = p.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{p}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                         line=exc.lineno) from exc


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n")
