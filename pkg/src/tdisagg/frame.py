"""Long-format input table: one row per high-frequency observation.

Columns are ``index`` (low-frequency group key), ``grain`` (sub-period within
the group, starting at 1), ``y`` (the group's low-frequency target, repeated
on every row of the group) and ``X`` (the high-frequency indicator). Extra
numeric columns such as ``y_hat`` or ``y_true`` ride along untouched.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    DuplicateKey,
    InputError,
    LengthMismatch,
    MalformedHeader,
    NonNumericField,
)

REQUIRED_COLUMNS = ("index", "grain", "y", "X")


class Row(NamedTuple):
    index: Any
    grain: int
    y: float
    X: float


def _normalize_keys(index: Sequence) -> list:
    # integers compare numerically, anything else as strings
    values = list(index)
    if all(isinstance(v, (int, np.integer)) and not isinstance(v, bool) for v in values):
        return [int(v) for v in values]
    return [str(v) for v in values]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Frame:
    """Validated-shape container for the long-format table.

    The constructor sorts rows by ``(index, grain)`` with a stable sort, so any
    permutation of the same rows yields the same frame. It does not reject
    duplicate keys or inconsistent targets; :func:`validate` reports those.
    Missing ``y`` or ``X`` values are stored as NaN.
    """

    index: tuple
    grain: np.ndarray
    y: np.ndarray
    X: np.ndarray
    extras: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        keys = _normalize_keys(self.index)
        grain = np.asarray(self.grain, dtype=np.int64).reshape(-1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        X = np.asarray(self.X, dtype=float).reshape(-1)
        n = len(keys)
        if not (len(grain) == len(y) == len(X) == n):
            raise LengthMismatch(
                f"column lengths differ: index={n}, grain={len(grain)}, y={len(y)}, X={len(X)}"
            )
        extras = {}
        for name, values in dict(self.extras).items():
            values = np.asarray(values, dtype=float).reshape(-1)
            if len(values) != n:
                raise LengthMismatch(f"extra column {name!r} has length {len(values)}, expected {n}")
            extras[str(name)] = values

        order = sorted(range(n), key=lambda i: (keys[i], int(grain[i])))
        order = np.asarray(order, dtype=np.int64)
        object.__setattr__(self, "index", tuple(keys[i] for i in order))
        object.__setattr__(self, "grain", _readonly(grain[order]))
        object.__setattr__(self, "y", _readonly(y[order]))
        object.__setattr__(self, "X", _readonly(X[order]))
        object.__setattr__(self, "extras", {k: _readonly(v[order]) for k, v in extras.items()})

    @classmethod
    def from_rows(cls, rows, extras=None) -> "Frame":
        rows = [Row(*r) for r in rows]
        return cls(
            index=tuple(r.index for r in rows),
            grain=np.array([r.grain for r in rows], dtype=np.int64),
            y=np.array([r.y for r in rows], dtype=float),
            X=np.array([r.X for r in rows], dtype=float),
            extras=extras or {},
        )

    @property
    def n(self) -> int:
        return len(self.index)

    @property
    def rows(self) -> list[Row]:
        return [Row(k, int(g), float(y), float(x)) for k, g, y, x in zip(self.index, self.grain, self.y, self.X)]

    @property
    def group_keys(self) -> list:
        keys = []
        for k in self.index:
            if not keys or keys[-1] != k:
                keys.append(k)
        return keys

    @property
    def group_spans(self) -> list[tuple[int, int]]:
        """``(start, length)`` of every group in row order."""
        spans = []
        start = 0
        for i in range(1, self.n + 1):
            if i == self.n or self.index[i] != self.index[start]:
                spans.append((start, i - start))
                start = i
        return spans

    @property
    def groups(self) -> list[tuple[Any, int]]:
        """Distinct index values with their sub-period counts ``m_g``."""
        return [(self.index[s], length) for s, length in self.group_spans]

    @property
    def n_groups(self) -> int:
        return len(self.group_spans)

    @property
    def max_grain(self) -> int:
        return int(self.grain.max()) if self.n else 0

    @property
    def y_low(self) -> np.ndarray:
        """One target per group: the first non-missing ``y`` in the group, else NaN."""
        out = np.full(self.n_groups, np.nan)
        for g, (s, length) in enumerate(self.group_spans):
            vals = self.y[s : s + length]
            obs = vals[~np.isnan(vals)]
            if obs.size:
                out[g] = obs[0]
        return out

    def with_columns(self, y=None, X=None, extras=None) -> "Frame":
        """Copy with ``y``/``X`` replaced and ``extras`` merged in (row order)."""
        merged = dict(self.extras)
        merged.update(extras or {})
        return Frame(
            index=self.index,
            grain=self.grain,
            y=self.y if y is None else y,
            X=self.X if X is None else X,
            extras=merged,
        )

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        if self.index != other.index or set(self.extras) != set(other.extras):
            return False
        same = lambda a, b: np.array_equal(a, b, equal_nan=True)  # noqa: E731
        return (
            np.array_equal(self.grain, other.grain)
            and same(self.y, other.y)
            and same(self.X, other.X)
            and all(same(self.extras[k], other.extras[k]) for k in self.extras)
        )

    __hash__ = None


# ---------------------------------------------------------------------------
# CSV


def _parse_float(text, row, column):
    text = text.strip()
    if text == "":
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise NonNumericField(row, column, text) from None


def _parse_grain(text, row):
    text = text.strip()
    try:
        value = float(text)
    except ValueError:
        raise NonNumericField(row, "grain", text) from None
    if not value.is_integer():
        raise NonNumericField(row, "grain", text)
    return int(value)


def parse_csv(data) -> Frame:
    """Parse ``index,grain,y,X[,extra...]`` CSV text into a :class:`Frame`.

    Parameters
    ----------
    data : bytes or str
        UTF-8 CSV. The first four header names must be ``index,grain,y,X``
        (case-insensitive); any further columns are kept as numeric extras.
        Empty fields mean missing.

    Raises
    ------
    MalformedHeader, NonNumericField, DuplicateKey
    """
    if isinstance(data, (bytes, bytearray)):
        data = bytes(data).decode("utf-8-sig")
    reader = csv.reader(io.StringIO(data, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedHeader("empty input: no header row") from None
    header = [h.strip() for h in header]
    if [h.lower() for h in header[:4]] != [c.lower() for c in REQUIRED_COLUMNS]:
        raise MalformedHeader(f"expected header starting with index,grain,y,X, got {','.join(header)}")
    extra_names = header[4:]
    if len(set(h.lower() for h in header)) != len(header) or any(not h for h in extra_names):
        raise MalformedHeader(f"duplicate or empty column names in header: {','.join(header)}")

    raw_index, grains, ys, xs = [], [], [], []
    extras = {name: [] for name in extra_names}
    for lineno, fields in enumerate(reader, start=2):
        if not fields or all(not f.strip() for f in fields):
            continue
        if len(fields) != len(header):
            raise MalformedHeader(f"row {lineno}: expected {len(header)} fields, got {len(fields)}")
        key = fields[0].strip()
        if key == "":
            raise InputError(f"row {lineno}: missing index")
        if fields[1].strip() == "":
            raise InputError(f"row {lineno}: missing grain")
        raw_index.append(key)
        grains.append(_parse_grain(fields[1], lineno))
        ys.append(_parse_float(fields[2], lineno, "y"))
        xs.append(_parse_float(fields[3], lineno, "X"))
        for name, text in zip(extra_names, fields[4:]):
            extras[name].append(_parse_float(text, lineno, name))

    index = raw_index
    try:
        index = [int(k) for k in raw_index]
    except ValueError:
        pass

    seen = set()
    for k, g in zip(index, grains):
        if (k, g) in seen:
            raise DuplicateKey(k, g)
        seen.add((k, g))

    return Frame(index=tuple(index), grain=grains, y=ys, X=xs, extras=extras)


def _fmt(value: float) -> str:
    if math.isnan(value):
        return ""
    return repr(float(value))


def write_csv(frame: Frame, extras: Mapping[str, Sequence[float]] | None = None) -> bytes:
    """Serialize ``frame`` plus optional extra columns as canonical CSV bytes.

    Extra columns are appended after the frame's own extras, in the given
    order; a name that already exists is replaced in place. Floats use the
    shortest round-tripping representation, so ``parse_csv(write_csv(f)) == f``.
    """
    columns = dict(frame.extras)
    for name, values in (extras or {}).items():
        if name.lower() in {c.lower() for c in REQUIRED_COLUMNS}:
            raise InputError(f"extra column name {name!r} clashes with a required column")
        values = np.asarray(values, dtype=float).reshape(-1)
        if len(values) != frame.n:
            raise LengthMismatch(f"extra column {name!r} has length {len(values)}, frame has n={frame.n}")
        columns[name] = values

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(REQUIRED_COLUMNS) + list(columns))
    for i in range(frame.n):
        writer.writerow(
            [str(frame.index[i]), str(int(frame.grain[i])), _fmt(frame.y[i]), _fmt(frame.X[i])]
            + [_fmt(columns[name][i]) for name in columns]
        )
    return out.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self, kind="errors") -> list[str]:
        return [code for code, _, _ in getattr(self, kind)]


def _frame_from_mapping(data: Mapping, report: ValidationReport):
    lookup = {str(k).lower(): k for k in data}
    missing = [c for c in REQUIRED_COLUMNS if c.lower() not in lookup]
    for c in missing:
        report.errors.append(("MissingColumn", f"required column {c!r} is absent", None))
    if missing:
        return None
    cols = {c: data[lookup[c.lower()]] for c in REQUIRED_COLUMNS}
    extras = {k: v for k, v in data.items() if str(k).lower() not in {c.lower() for c in REQUIRED_COLUMNS}}
    return Frame(index=tuple(cols["index"]), grain=cols["grain"], y=cols["y"], X=cols["X"], extras=extras)


def validate(data) -> ValidationReport:
    """Check a frame (or a column mapping) against the input contract.

    Errors: missing required columns, duplicate ``(index, grain)`` keys,
    grain below 1, ``y`` differing inside a group, ``X`` entirely missing.
    Warnings: empty frame, missing sub-periods (relative to the largest grain
    seen anywhere), groups whose ``y`` is entirely missing.
    """
    report = ValidationReport()
    if isinstance(data, Frame):
        frame = data
    elif isinstance(data, Mapping):
        frame = _frame_from_mapping(data, report)
        if frame is None:
            return report
    else:
        raise TypeError(f"validate() expects a Frame or a column mapping, got {type(data).__name__}")

    if frame.n == 0:
        report.warnings.append(("EmptyFrame", "frame has no rows", None))
        return report

    keys = list(zip(frame.index, frame.grain.tolist()))
    seen = set()
    for row, key in enumerate(keys):
        if key in seen:
            report.errors.append(("DuplicateKey", f"duplicate key (index={key[0]}, grain={key[1]})", row))
        seen.add(key)

    for row, g in enumerate(frame.grain):
        if g < 1:
            report.errors.append(("InvalidGrain", f"grain must be >= 1, got {g} at index {frame.index[row]}", row))

    if np.all(np.isnan(frame.X)):
        report.errors.append(("AllXMissing", "indicator X is missing on every row", None))

    m = frame.max_grain
    for key, (s, length) in zip(frame.group_keys, frame.group_spans):
        ys = frame.y[s : s + length]
        observed = ys[~np.isnan(ys)]
        if observed.size == 0:
            report.warnings.append(("MissingGroupTarget", f"y is missing for every row of group {key}", key))
        elif np.any(observed != observed[0]):
            report.errors.append(
                ("InconsistentGroupTarget", f"group {key} has differing y values {sorted(set(observed.tolist()))}", key)
            )
        present = set(frame.grain[s : s + length].tolist())
        for g in range(1, m + 1):
            if g not in present:
                report.warnings.append(("MissingSubPeriod", f"group {key} lacks grain {g}", (key, g)))
    return report
