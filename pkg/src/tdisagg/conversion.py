"""Aggregation matrix C mapping high-frequency vectors to low-frequency ones."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IncompleteFrame, InputError, LengthMismatch

RULES = ("sum", "average", "first", "last")


@dataclass(frozen=True, eq=False)
class ConversionMatrix:
    """Dense ``n_l x n`` aggregation operator plus the group layout it encodes."""

    C: np.ndarray
    rule: str
    group_spans: tuple

    @property
    def n_low(self) -> int:
        return self.C.shape[0]

    @property
    def n(self) -> int:
        return self.C.shape[1]

    @property
    def group_sizes(self) -> np.ndarray:
        return np.array([length for _, length in self.group_spans])

    def __matmul__(self, other):
        return self.C @ other

    def __array__(self, dtype=None, copy=None):
        return self.C if dtype is None else self.C.astype(dtype)


def from_sizes(sizes, rule: str = "sum") -> ConversionMatrix:
    """Build C for consecutive groups of the given sizes (ragged sizes allowed)."""
    if rule not in RULES:
        raise InputError(f"conversion rule must be one of {RULES}, got {rule!r}")
    sizes = [int(s) for s in sizes]
    if any(s < 1 for s in sizes):
        raise InputError("every group needs at least one sub-period")
    n = sum(sizes)
    C = np.zeros((len(sizes), n))
    spans = []
    start = 0
    for r, m in enumerate(sizes):
        if rule == "sum":
            C[r, start : start + m] = 1.0
        elif rule == "average":
            C[r, start : start + m] = 1.0 / m
        elif rule == "first":
            C[r, start] = 1.0
        else:
            C[r, start + m - 1] = 1.0
        spans.append((start, m))
        start += m
    C.setflags(write=False)
    return ConversionMatrix(C=C, rule=rule, group_spans=tuple(spans))


def build_C(frame, rule: str = "sum") -> ConversionMatrix:
    """Aggregation matrix for a complete frame.

    Each group's rows must carry grains exactly ``1..m_g``; groups may differ in
    ``m_g``.

    Raises
    ------
    IncompleteFrame
        If some group has a gap in its grain sequence.
    """
    sizes = []
    for key, (s, length) in zip(frame.group_keys, frame.group_spans):
        grains = frame.grain[s : s + length].tolist()
        if grains != list(range(1, length + 1)):
            raise IncompleteFrame(f"group {key} has grains {grains}; run complete() first")
        sizes.append(length)
    return from_sizes(sizes, rule)


def aggregate(Cm: ConversionMatrix, y) -> np.ndarray:
    """Return ``C @ y``."""
    C = np.asarray(Cm)
    y = np.asarray(y, dtype=float)
    if y.shape[0] != C.shape[1]:
        raise LengthMismatch(f"vector has length {y.shape[0]}, C expects {C.shape[1]}")
    return C @ y
