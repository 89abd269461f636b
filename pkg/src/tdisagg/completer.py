"""Fill the (index, grain) lattice so every group has grains 1..m."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AllXMissing, InputError
from .frame import Frame

X_METHODS = ("linear", "nearest")


@dataclass(frozen=True)
class CompletionConfig:
    x_method: str = "linear"
    pad_boundaries: bool = True

    def __post_init__(self):
        if self.x_method not in X_METHODS:
            raise InputError(f"x_method must be one of {X_METHODS}, got {self.x_method!r}")


@dataclass
class CompletionLog:
    inserted: list = field(default_factory=list)
    imputed_X: list = field(default_factory=list)
    padded_groups: list = field(default_factory=list)
    trimmed_groups: list = field(default_factory=list)


def interpolate_missing(values: np.ndarray, method: str = "linear") -> np.ndarray:
    """Fill NaNs by position; ends take the nearest observed value."""
    values = np.asarray(values, dtype=float)
    obs = ~np.isnan(values)
    if not obs.any():
        raise AllXMissing("cannot interpolate: every value is missing")
    pos = np.arange(len(values), dtype=float)
    out = values.copy()
    if method == "linear":
        out[~obs] = np.interp(pos[~obs], pos[obs], values[obs])
    elif method == "nearest":
        obs_pos = np.flatnonzero(obs)
        for i in np.flatnonzero(~obs):
            j = np.searchsorted(obs_pos, i)
            left = obs_pos[j - 1] if j > 0 else None
            right = obs_pos[j] if j < len(obs_pos) else None
            if right is None or (left is not None and i - left <= right - i):
                out[i] = values[left]
            else:
                out[i] = values[right]
    else:
        raise InputError(f"unknown interpolation method {method!r}")
    return out


def complete(frame: Frame, config: CompletionConfig | None = None) -> tuple[Frame, CompletionLog]:
    """Insert missing sub-periods and fill missing ``X``.

    Every group ends up with grains ``1..m`` where ``m`` is the largest grain
    in the frame. Inserted rows copy the group's ``y`` (NaN if the group has
    none). Missing ``X`` is filled over the global row order with
    ``config.x_method``; values before the first / after the last observation
    repeat the nearest observed value. Observed values are never rewritten.

    With ``pad_boundaries=False`` an incomplete first or last group is dropped
    instead of padded; interior gaps are always filled.

    Raises
    ------
    AllXMissing
        If no row carries an observed ``X``.
    """
    config = config or CompletionConfig()
    if frame.n == 0 or np.all(np.isnan(frame.X)):
        raise AllXMissing("indicator X has no observed values")

    log = CompletionLog()
    m = frame.max_grain
    keys = frame.group_keys
    spans = frame.group_spans
    y_low = frame.y_low

    keep = list(range(len(keys)))
    if not config.pad_boundaries:
        for g in sorted({0, len(keys) - 1}):
            if spans[g][1] < m or set(frame.grain[spans[g][0] : spans[g][0] + spans[g][1]].tolist()) != set(range(1, m + 1)):
                log.trimmed_groups.append(keys[g])
        keep = [g for g in keep if keys[g] not in log.trimmed_groups]

    index, grain, ys, xs = [], [], [], []
    extras = {name: [] for name in frame.extras}
    boundary = {0, len(keys) - 1}
    for g in keep:
        s, length = spans[g]
        present = {int(frame.grain[r]): r for r in range(s, s + length)}
        gained = False
        for k in range(1, m + 1):
            index.append(keys[g])
            grain.append(k)
            r = present.get(k)
            if r is None:
                gained = True
                log.inserted.append((keys[g], k))
                ys.append(y_low[g])
                xs.append(np.nan)
                for name in extras:
                    extras[name].append(np.nan)
            else:
                ys.append(frame.y[r])
                xs.append(frame.X[r])
                for name in extras:
                    extras[name].append(frame.extras[name][r])
        if gained and g in boundary:
            log.padded_groups.append(keys[g])

    xs = np.asarray(xs, dtype=float)
    if np.all(np.isnan(xs)):
        raise AllXMissing("indicator X has no observed values after trimming")
    filled = interpolate_missing(xs, config.x_method)
    for i in np.flatnonzero(np.isnan(xs)):
        log.imputed_X.append((index[i], grain[i], float(filled[i]), config.x_method))

    out = Frame(index=tuple(index), grain=grain, y=ys, X=filled, extras=extras)
    return out, log
