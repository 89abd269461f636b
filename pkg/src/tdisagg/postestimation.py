"""Group-wise correction of negative high-frequency predictions.

Each group is corrected on its own, keeping the quantity its aggregation rule
constrains:

* ``sum``: zero the negatives and scale the positives down so the group total
  is unchanged; with no positives the total is spread evenly.
* ``average``: Euclidean projection onto ``{y >= 0, sum(y) = group sum}``;
  a negative group sum falls back to zeroing the negatives.
* ``first`` / ``last``: the anchored sub-period keeps its value. If the anchor
  itself is negative it is reset to zero and the rest of the group absorbs
  the difference so the total is unchanged.

Targets are taken from the prediction itself (its group aggregates), so
``adjust`` is idempotent. Groups whose constraint cannot hold together with
non-negativity are flagged ``unresolved`` in the report.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, NegativeTarget


@dataclass
class GroupAdjustment:
    group: int
    rule: str
    strategy: str
    before: np.ndarray
    after: np.ndarray
    unresolved: bool = False


@dataclass
class AdjustmentReport:
    rule: str
    records: list = field(default_factory=list)

    @property
    def n_touched(self) -> int:
        return len(self.records)

    @property
    def n_unresolved(self) -> int:
        return sum(r.unresolved for r in self.records)

    def summary(self, keys=None) -> str:
        if not self.records:
            return "no negative values; nothing adjusted"
        lines = [f"{'group':<12}{'strategy':<16}{'unresolved':<12}{'min before':>14}{'min after':>14}"]
        for r in self.records:
            key = keys[r.group] if keys is not None else r.group
            lines.append(
                f"{str(key):<12}{r.strategy:<16}{('yes' if r.unresolved else 'no'):<12}"
                f"{r.before.min():>14.6g}{r.after.min():>14.6g}"
            )
        lines.append(f"{self.n_touched} group(s) adjusted, {self.n_unresolved} unresolved")
        return "\n".join(lines)


def simplex_project(v, target_sum: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{y >= 0, sum(y) = target_sum}``.

    Sort-and-threshold algorithm, ``O(m log m)``.

    Raises
    ------
    NegativeTarget
        If ``target_sum < 0``.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    if target_sum < 0:
        raise NegativeTarget(f"target sum must be >= 0, got {target_sum}")
    if v.size == 0:
        return v.copy()
    if target_sum == 0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - target_sum
    ind = np.arange(1, v.size + 1)
    k = ind[u - css / ind > 0][-1]
    theta = css[k - 1] / k
    return np.maximum(v - theta, 0.0)


def _shrink_positives(g, total):
    """Zero negatives, scale positives so the vector sums to ``total >= 0``."""
    out = np.where(g > 0, g, 0.0)
    pos = out.sum()
    if pos > 0:
        out *= total / pos
    elif out.size:
        out[:] = total / out.size
    return out


def _adjust_sum(g):
    total = g.sum()
    if total < 0 or not np.any(g > 0):
        return np.full_like(g, total / g.size), "even-spread", total < 0
    return _shrink_positives(g, total), "redistribute", False


def _adjust_average(g):
    total = g.sum()
    if total < 0:
        return np.maximum(g, 0.0), "zero-fallback", True
    return simplex_project(g, total), "qp-projection", False


def _adjust_anchor(g, anchor, name):
    """``first``/``last``: keep ``g[anchor]`` when possible, else reset it."""
    rest = np.ones(g.size, dtype=bool)
    rest[anchor] = False
    out = g.copy()
    if g[anchor] < 0:
        out[anchor] = 0.0
        total = g.sum()  # the rest absorbs the anchor's deficit
        if total < 0:
            out[rest] = np.maximum(g[rest], 0.0)
            return out, "unresolved", True
        out[rest] = _shrink_positives(g[rest], total)
        return out, f"{name}-reset", True
    total = g[rest].sum()
    if total >= 0:
        out[rest] = _shrink_positives(g[rest], total)
    else:
        # rest cannot keep its total without negatives; the anchor is what C constrains
        out[rest] = np.maximum(g[rest], 0.0)
    return out, "redistribute", False


def adjust(y_hat, y_l=None, Cm=None, *, rule=None, group_spans=None):
    """Remove negative values group by group.

    Parameters
    ----------
    y_hat : array_like, length n
    y_l : array_like, optional
        Low-frequency targets; only checked for length. Targets used for
        preservation are the group aggregates of ``y_hat`` itself.
    Cm : ConversionMatrix
        Supplies the rule and group layout. Alternatively pass ``rule`` and
        ``group_spans`` directly.

    Returns
    -------
    adjusted : ndarray
    report : AdjustmentReport
    """
    if Cm is not None:
        rule = Cm.rule
        group_spans = Cm.group_spans
    if rule is None or group_spans is None:
        raise ValueError("need either a ConversionMatrix or both rule and group_spans")
    y_hat = np.asarray(y_hat, dtype=float).reshape(-1)
    n = sum(length for _, length in group_spans)
    if y_hat.size != n:
        raise LengthMismatch(f"y_hat has length {y_hat.size}, groups cover {n} rows")
    if y_l is not None and len(np.atleast_1d(y_l)) != len(group_spans):
        raise LengthMismatch(f"y_l has length {len(y_l)}, expected {len(group_spans)}")

    out = y_hat.copy()
    report = AdjustmentReport(rule=rule)
    for gi, (start, length) in enumerate(group_spans):
        g = y_hat[start : start + length]
        if not np.any(g < 0):
            continue
        if rule == "sum":
            new, strategy, unresolved = _adjust_sum(g)
        elif rule == "average":
            new, strategy, unresolved = _adjust_average(g)
        elif rule == "first":
            new, strategy, unresolved = _adjust_anchor(g, 0, "first")
        elif rule == "last":
            new, strategy, unresolved = _adjust_anchor(g, length - 1, "last")
        else:
            raise ValueError(f"unknown rule {rule!r}")
        out[start : start + length] = new
        report.records.append(GroupAdjustment(gi, rule, strategy, g.copy(), new.copy(), unresolved))
    return out, report
