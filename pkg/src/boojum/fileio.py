"""Observation files, state files and CSV output."""

import csv
import datetime
import io
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from .core import Hyperparameters, ObservationSet, validate_simplex
from .errors import ParseError

STATE_KEYS = ("dimension", "nu", "chi")


def open_text(path, mode="r"):
    if path in (None, "-"):
        return sys.stdin if "r" in mode else sys.stdout
    return open(path, mode, encoding="utf-8", newline="" if "w" in mode else None)


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


@dataclass
class Row:
    line: int
    values: list = field(default_factory=list)


def iter_rows(text_or_file):
    """Yield numeric rows with 1-based line numbers from CSV or JSON text.

    JSON input is an array of arrays. CSV may start with a header row, which
    is detected by its first cell not parsing as a number. Blank lines and
    lines starting with ``#`` are skipped.
    """
    if hasattr(text_or_file, "read"):
        text = text_or_file.read()
    else:
        text = text_or_file
    stripped = text.lstrip()
    if stripped.startswith("["):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
        if not isinstance(data, list):
            raise ParseError("JSON observations must be an array of arrays")
        for i, row in enumerate(data, 1):
            if not isinstance(row, list) or not all(isinstance(v, (int, float)) for v in row):
                raise ParseError(f"JSON element {i}: expected an array of numbers")
            yield Row(i, [float(v) for v in row])
        return
    reader = csv.reader(io.StringIO(text))
    first = True
    for row in reader:
        line = reader.line_num
        cells = [c.strip() for c in row]
        if not cells or all(c == "" for c in cells) or cells[0].startswith("#"):
            continue
        if first:
            first = False
            if not _is_number(cells[0]):
                continue
        try:
            yield Row(line, [float(c) for c in cells])
        except ValueError as exc:
            raise ParseError(f"line {line}: non-numeric value in {row!r}") from exc


def read_observations(path) -> ObservationSet:
    """Parse and validate a whole observation file; errors name the offending line."""
    with _maybe_open(path) as fh:
        rows = list(iter_rows(fh))
    if not rows:
        raise ParseError(f"{path}: no observations")
    dim = len(rows[0].values)
    clean = []
    for r in rows:
        if len(r.values) != dim:
            raise ParseError(f"line {r.line}: expected {dim} columns, got {len(r.values)}")
        clean.append(validate_simplex(r.values, dim, label=f"line {r.line}"))
    return ObservationSet(np.array(clean))


class _maybe_open:
    def __init__(self, path):
        self.path = path
        self.fh = None

    def __enter__(self):
        if self.path in (None, "-"):
            return sys.stdin
        self.fh = open(self.path, encoding="utf-8")
        return self.fh

    def __exit__(self, *exc):
        if self.fh is not None:
            self.fh.close()


def state_to_dict(hyper: Hyperparameters, n_updates=0, created=None) -> dict:
    # Python floats serialize with the shortest repr that round-trips exactly
    return {
        "dimension": hyper.dimension,
        "nu": hyper.nu,
        "chi": [float(c) for c in hyper.chi],
        "meta": {
            "created": created or datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "n_updates": int(n_updates),
        },
    }


def state_from_dict(data) -> tuple:
    """Return ``(hyper, meta)`` from a parsed state object."""
    if not isinstance(data, dict) or any(k not in data for k in STATE_KEYS):
        raise ParseError(f"state must be an object with keys {', '.join(STATE_KEYS)}")
    try:
        dim = int(data["dimension"])
        nu = float(data["nu"])
        chi = [float(c) for c in data["chi"]]
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed state: {exc}") from exc
    if len(chi) != dim:
        raise ParseError(f"state chi has {len(chi)} components but dimension is {dim}")
    meta = data.get("meta") or {}
    return Hyperparameters(nu=nu, chi=np.array(chi)), meta


def read_state(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return state_from_dict(data)


def write_state(path, hyper, n_updates=0, created=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(state_to_dict(hyper, n_updates, created), fh, indent=2)
        fh.write("\n")


def write_matrix_csv(path, row_axis, col_axis, values, row_name="alpha_1", col_name="alpha_2"):
    """A 2-D grid as CSV: header row of column coordinates, first column of row coordinates."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"{row_name}\\{col_name}"] + [repr(float(c)) for c in col_axis])
        for r, vals in zip(row_axis, values):
            w.writerow([repr(float(r))] + [repr(float(v)) for v in vals])


def write_table_csv(fh, header, rows):
    w = csv.writer(fh)
    w.writerow(header)
    for row in rows:
        w.writerow(row)
