"""Temporal disaggregation: turn low-frequency totals, averages or snapshots
into a high-frequency series that aggregates back to them exactly.

Typical use::

    from tdisagg import parse_csv, prepare, fit

    prep = prepare(parse_csv(open("data.csv", "rb").read()), rule="sum")
    res = fit("chow-lin-opt", prep.y_l, prep.frame.X, prep.Cm)
    print(res.summary())
"""

from .completer import CompletionConfig, CompletionLog, complete
from .conversion import RULES, ConversionMatrix, aggregate, build_C, from_sizes
from .ensemble import DEFAULT_MEMBERS, EnsembleResult, ensemble_fit, nnls_simplex, run_ensemble
from .errors import InputError, NumericalError, TDisaggError
from .frame import Frame, Row, ValidationReport, parse_csv, validate, write_csv
from .models import METHODS, FitResult, fit
from .pipeline import Prepared, fit_frame, prepare
from .postestimation import AdjustmentReport, adjust, simplex_project
from .retropolarizer import RetroMethod, RetroResult, auto_select, retropolate
from .rho import RhoResult, optimize

__version__ = "0.1.0"

__all__ = [
    "AdjustmentReport", "CompletionConfig", "CompletionLog", "ConversionMatrix", "DEFAULT_MEMBERS",
    "EnsembleResult", "FitResult", "Frame", "InputError", "METHODS", "NumericalError", "Prepared",
    "RULES", "RetroMethod", "RetroResult", "RhoResult", "Row", "TDisaggError", "ValidationReport",
    "adjust", "aggregate", "auto_select", "build_C", "complete", "ensemble_fit", "fit", "fit_frame",
    "from_sizes", "nnls_simplex", "optimize", "parse_csv", "prepare", "retropolate", "run_ensemble",
    "simplex_project", "validate", "write_csv",
]
