"""End-to-end helpers: validated frame in, predictions out."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .completer import CompletionConfig, CompletionLog, complete
from .conversion import ConversionMatrix, build_C
from .errors import ValidationFailed
from .frame import Frame, validate
from .models import FitResult, fit
from .postestimation import adjust
from .retropolarizer import RetroMethod, RetroResult, retropolate_frame

log = logging.getLogger(__name__)


@dataclass
class Prepared:
    frame: Frame  # complete, with every group target filled
    Cm: ConversionMatrix
    completion: CompletionLog
    retro: RetroResult | None = None
    warnings: list = None

    @property
    def y_l(self) -> np.ndarray:
        return self.frame.y_low


def prepare(frame: Frame, rule: str = "sum", completion: CompletionConfig | None = None,
            retro: RetroMethod | str = "auto", aux: str | None = None) -> Prepared:
    """Validate, complete the grain lattice and fill missing group targets.

    Raises
    ------
    ValidationFailed
        If :func:`validate` reports any error.
    """
    report = validate(frame)
    if not report.ok:
        raise ValidationFailed(report)
    full, clog = complete(frame, completion or CompletionConfig())
    Cm = build_C(full, rule)
    res = None
    if np.isnan(full.y_low).any():
        full, res = retropolate_frame(full, Cm, retro, aux)
        log.info("filled %d missing group target(s) with %s", len(res.imputed_groups), res.method_used.label)
    return Prepared(full, Cm, clog, res, report.warnings)


def fit_frame(frame: Frame, method: str = "chow-lin-opt", rule: str = "sum", *,
              completion: CompletionConfig | None = None, retro: RetroMethod | str = "auto",
              aux: str | None = None, adjust_negatives: bool = False, **options):
    """Prepare ``frame`` and fit one method.

    Returns ``(prepared, fit_result, adjusted, report)``; the last two are
    ``None`` unless ``adjust_negatives`` is set.
    """
    prep = prepare(frame, rule, completion, retro, aux)
    res: FitResult = fit(method, prep.y_l, prep.frame.X, prep.Cm, **options)
    adjusted = report = None
    if adjust_negatives:
        adjusted, report = adjust(res.y_hat, prep.y_l, prep.Cm)
    return prep, res, adjusted, report

