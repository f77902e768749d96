"""Readers for the counts CSV and constraint JSON input formats.

Counts: UTF-8 CSV with header ``species,count``, one row per species,
nonnegative integer counts, no duplicate labels.

Constraint: JSON object ``{"coefficients": {label: number, ...}, "target":
number}``. Species missing from ``coefficients`` get coefficient 0.
"""

from __future__ import annotations

import csv
import json
import math
import re
from pathlib import Path

from .errors import ParseError
from .simplex import MomentConstraint

_INT = re.compile(r"[0-9]+")


def _fields_with_columns(line: str):
    fields = next(csv.reader([line]))
    cols, pos = [], 0
    for field in fields:
        at = line.find(field, pos)
        at = pos if at < 0 else at
        cols.append(at + 1)
        pos = at + len(field)
    return fields, cols


def read_counts(path) -> tuple[list[str], list[int]]:
    """Parse a counts CSV into ``(labels, counts)``.

    Raises
    ------
    ParseError
        With the offending line and column.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(path, 1, 1, f"not valid UTF-8 ({exc.reason})") from None
    lines = text.splitlines()
    header_at = None
    labels, counts, seen = [], [], {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        fields, cols = _fields_with_columns(line)
        if header_at is None:
            if [f.strip() for f in fields] != ["species", "count"]:
                raise ParseError(path, lineno, 1, "expected header 'species,count'")
            header_at = lineno
            continue
        if len(fields) != 2:
            raise ParseError(path, lineno, 1,
                             f"row {lineno}: expected 2 fields, found {len(fields)}")
        label, value = fields[0].strip(), fields[1].strip()
        if not label:
            raise ParseError(path, lineno, cols[0], f"row {lineno}: empty species label")
        if not _INT.fullmatch(value):
            raise ParseError(
                path, lineno, cols[1],
                f"row {lineno}: count {fields[1].strip()!r} is not a nonnegative integer",
            )
        if label in seen:
            raise ParseError(
                path, lineno, cols[0],
                f"row {lineno}: duplicate species {label!r} (first on line {seen[label]})",
            )
        seen[label] = lineno
        labels.append(label)
        counts.append(int(value))
    if header_at is None:
        raise ParseError(path, 1, 1, "empty file; expected header 'species,count'")
    return labels, counts


def _reject_constant(name):
    raise ValueError(f"non-finite number {name} is not allowed")


def _number(path, value, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ParseError(path, 1, 1, f"{what} must be a finite number, got {value!r}")
    return float(value)


def read_constraint(path) -> tuple[dict, float]:
    """Parse a constraint JSON file into ``(coefficients_by_label, target)``."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"), parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, exc.colno, exc.msg) from None
    except ValueError as exc:
        raise ParseError(path, 1, 1, str(exc)) from None
    if not isinstance(doc, dict):
        raise ParseError(path, 1, 1, "constraint must be a JSON object")
    extra = set(doc) - {"coefficients", "target"}
    if extra:
        raise ParseError(path, 1, 1, f"unknown keys: {', '.join(sorted(extra))}")
    if "coefficients" not in doc or "target" not in doc:
        raise ParseError(path, 1, 1, "constraint needs 'coefficients' and 'target'")
    coefs = doc["coefficients"]
    if not isinstance(coefs, dict):
        raise ParseError(path, 1, 1, "'coefficients' must be an object mapping species to numbers")
    coefs = {str(k): _number(path, v, f"coefficient for {k!r}") for k, v in coefs.items()}
    return coefs, _number(path, doc["target"], "target")


def constraint_for(labels, coefficients: dict, target: float, path="<constraint>") -> MomentConstraint:
    """Align labelled coefficients to species order; unknown labels are an error."""
    unknown = [k for k in coefficients if k not in set(labels)]
    if unknown:
        raise ParseError(path, 1, 1, f"unknown species in constraint: {', '.join(unknown)}")
    return MomentConstraint([coefficients.get(lab, 0.0) for lab in labels], target)
