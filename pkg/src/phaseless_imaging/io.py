"""Plain-text formats for matrices, intensity datasets and illumination plans.

* matrix:       ``row,col,re,im``
* intensities:  ``illumination_id,receiver,beta``
* plan:         ``illumination_id,index,re,im``

Floats are written with ``repr`` so that a write/read round trip is exact.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, ParseError
from .forward import IntensityRecord
from .phase_recovery import IntensityOracle

MATRIX_HEADER = ["row", "col", "re", "im"]
INTENSITY_HEADER = ["illumination_id", "receiver", "beta"]
PLAN_HEADER = ["illumination_id", "index", "re", "im"]


def _write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _read_rows(path, header, types):
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path} is empty", line=1)
    if rows[0] != header:
        raise ParseError(f"expected header {','.join(header)}", line=1)
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(types):
            raise ParseError(f"expected {len(types)} fields, got {len(row)}", line=lineno)
        try:
            out.append(tuple(t(v) for t, v in zip(types, row)))
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
    return out


def export_matrix(a, path):
    a = np.asarray(a, dtype=complex)
    rows = (
        (r, c, repr(float(a[r, c].real)), repr(float(a[r, c].imag)))
        for r in range(a.shape[0])
        for c in range(a.shape[1])
    )
    return _write_rows(path, MATRIX_HEADER, rows)


def import_matrix(path) -> np.ndarray:
    rows = _read_rows(path, MATRIX_HEADER, (int, int, float, float))
    if not rows:
        raise ParseError(f"{path} holds no entries", line=2)
    nr = max(r for r, *_ in rows) + 1
    nc = max(c for _, c, *_ in rows) + 1
    if len(rows) != nr * nc:
        raise ConsistencyError(f"{path}: {len(rows)} entries for a {nr}x{nc} matrix")
    a = np.zeros((nr, nc), complex)
    for r, c, re, im in rows:
        a[r, c] = complex(re, im)
    return a


def export_plan(vectors, path):
    rows = (
        (i, j, repr(float(v.real)), repr(float(v.imag)))
        for i, f in enumerate(vectors)
        for j, v in enumerate(np.asarray(f, dtype=complex))
    )
    return _write_rows(path, PLAN_HEADER, rows)


def export_intensities(records, path):
    rows = (
        (i, k, repr(float(b)))
        for i, rec in enumerate(records)
        for k, b in enumerate(rec.intensities)
    )
    return _write_rows(path, INTENSITY_HEADER, rows)


def _group(rows, path):
    groups = defaultdict(dict)
    for ident, pos, *vals in rows:
        if pos in groups[ident]:
            raise ConsistencyError(f"{path}: duplicate entry ({ident}, {pos})")
        groups[ident][pos] = vals[0] if len(vals) == 1 else complex(*vals)
    out = {}
    for ident, entries in groups.items():
        if sorted(entries) != list(range(len(entries))):
            raise ConsistencyError(f"{path}: illumination {ident} has gaps in its indices")
        out[ident] = np.array([entries[i] for i in range(len(entries))])
    return out


class FileOracle(IntensityOracle):
    """Replays recorded intensities; queries are matched against the plan vectors.

    Serial by declaration.
    """

    def __init__(self, plan: dict, data: dict):
        super().__init__(None, serial=True)
        self.plan = plan
        self.data = data

    def _query(self, f, index):
        for ident, vec in self.plan.items():
            if vec.shape == f.shape and np.allclose(vec, f, rtol=1e-12, atol=0):
                return IntensityRecord(vec, self.data[ident])
        raise ConsistencyError("illumination not present in the recorded plan")


def import_intensities(path, plan_path) -> FileOracle:
    data = _group(_read_rows(path, INTENSITY_HEADER, (int, int, float)), path)
    plan = _group(_read_rows(plan_path, PLAN_HEADER, (int, int, float, float)), plan_path)
    if not data:
        raise ParseError(f"{path} holds no intensities", line=2)
    if set(data) != set(plan):
        raise ConsistencyError("intensity file and plan list different illuminations")
    sizes = {len(v) for v in data.values()} | {len(v) for v in plan.values()}
    if len(sizes) != 1:
        raise ConsistencyError("receiver count and illumination length disagree")
    if any(np.any(b < 0) for b in data.values()):
        raise ConsistencyError("negative intensity in data")
    return FileOracle(dict(sorted(plan.items())), data)
