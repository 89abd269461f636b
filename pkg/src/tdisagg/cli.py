"""``tdisagg`` command line.

Exit codes: 0 success, 1 bad input (unreadable file, malformed CSV, failed
validation, bad option), 2 numerical failure. Diagnostics go to stderr; set
``TDISAGG_LOG`` to ``error``, ``warn``, ``info`` or ``debug`` for more.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
import warnings

import numpy as np

from . import synth
from .completer import CompletionConfig, complete
from .conversion import RULES, build_C
from .ensemble import DEFAULT_MEMBERS, ensemble_fit
from .errors import InputError, MissingColumn, NumericalError, ValidationFailed
from .frame import parse_csv, validate, write_csv
from .models import METHODS, fit
from .pipeline import prepare
from .postestimation import adjust
from .retropolarizer import ALIASES as RETRO_ALIASES
from .retropolarizer import RetroMethod, retropolate_frame

log = logging.getLogger("tdisagg")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}


# ---------------------------------------------------------------------------
# helpers


def _read_input(path):
    if path in (None, "-"):
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _write_output(path, data: bytes):
    if path in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def _info(text=""):
    """Human-readable report. Goes to stderr when stdout carries the data."""
    print(text, file=_info.stream)


_info.stream = sys.stdout


def _parse_bounds(text):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    return lo, hi


def _parse_methods(text):
    """``chow-lin:0.5,denton,litterman:0.3`` -> member specs."""
    specs = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, _, arg = item.partition(":")
        if name not in METHODS:
            raise InputError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
        if not arg:
            specs.append(name)
        elif name in ("chow-lin", "litterman"):
            specs.append((name, {"rho": float(arg)}))
        elif name == "denton":
            specs.append((name, {"h": int(arg)}))
        else:
            raise InputError(f"method {name!r} takes no inline parameter")
    if not specs:
        raise InputError("empty method list")
    return specs


def _load_frame(args):
    return parse_csv(_read_input(args.input))


def _completion(args):
    return CompletionConfig(x_method=args.x_interp, pad_boundaries=not args.no_pad)


def _prepare(args, aux=None):
    retro = RetroMethod.parse(getattr(args, "retro", "auto"), seed=args.seed)
    prep = prepare(_load_frame(args), args.conversion, _completion(args), retro, aux)
    for code, msg, _ in prep.warnings or []:
        log.warning("%s: %s", code, msg)
    if prep.completion.padded_groups:
        print("note: padded incomplete boundary group(s): "
              + ", ".join(str(k) for k in prep.completion.padded_groups), file=sys.stderr)
    if prep.completion.trimmed_groups:
        print("note: dropped incomplete boundary group(s): "
              + ", ".join(str(k) for k in prep.completion.trimmed_groups), file=sys.stderr)
    if prep.retro is not None:
        print("note: imputed missing targets with " + prep.retro.method_used.label + " for group(s) "
              + ", ".join(str(prep.frame.group_keys[i]) for i in prep.retro.imputed_groups), file=sys.stderr)
    return prep


def _fit_options(args):
    opts = {"intercept": not args.no_intercept}
    if args.rho is not None:
        opts["rho"] = args.rho
    if args.denton_h is not None:
        opts["h"] = args.denton_h
    if args.rho_method is not None:
        opts["objective"] = args.rho_method
    if args.rho_bounds is not None:
        opts["bounds"] = args.rho_bounds
    return opts


def _metrics(err):
    err = np.asarray(err, dtype=float)
    mse = float(np.mean(err**2)) if err.size else 0.0
    return float(np.mean(np.abs(err))) if err.size else 0.0, float(np.sqrt(mse)), mse


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args):
    frame = _load_frame(args)
    report = validate(frame)
    rows = [("error", c, m) for c, m, _ in report.errors] + [("warning", c, m) for c, m, _ in report.warnings]
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "code", "message"])
        w.writerows(rows)
        _write_output(args.output, buf.getvalue().encode())
    else:
        for level, code, msg in rows:
            print(f"{level}: {code}: {msg}")
        print(f"{frame.n} rows, {frame.n_groups} groups: "
              + ("ok" if report.ok else f"{len(report.errors)} error(s)"))
    return 0 if report.ok else 1


def cmd_fit(args):
    _info.stream = sys.stdout if args.output not in (None, "-") else sys.stderr
    prep = _prepare(args, args.aux)
    res = fit(args.method, prep.y_l, prep.frame.X, prep.Cm, **_fit_options(args))
    extras = {"y_hat": res.y_hat}
    _info(res.summary())
    if args.adjust:
        adjusted, report = adjust(res.y_hat, prep.y_l, prep.Cm)
        extras["y_hat_adjusted"] = adjusted
        _info()
        _info(report.summary(prep.frame.group_keys))
    _write_output(args.output, write_csv(prep.frame, extras))
    if args.plot:
        _write_output(args.plot, render_svg(prep.frame, res.y_hat, prep.Cm))
    return 0


def cmd_ensemble(args):
    _info.stream = sys.stdout if args.output not in (None, "-") else sys.stderr
    prep = _prepare(args, args.aux)
    methods = _parse_methods(args.methods) if args.methods else DEFAULT_MEMBERS
    opts = {"intercept": not args.no_intercept}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # already logged
        er = ensemble_fit(prep.y_l, prep.frame.X, prep.Cm, methods, **opts)
    _info(er.summary())
    extras = {"y_hat": er.y_hat}
    if args.adjust:
        adjusted, report = adjust(er.y_hat, prep.y_l, prep.Cm)
        extras["y_hat_adjusted"] = adjusted
        _info()
        _info(report.summary(prep.frame.group_keys))
    _write_output(args.output, write_csv(prep.frame, extras))
    return 0


def cmd_adjust(args):
    _info.stream = sys.stdout if args.output not in (None, "-") else sys.stderr
    frame = _load_frame(args)
    if args.column not in frame.extras:
        raise MissingColumn(f"input has no {args.column!r} column to adjust")
    Cm = build_C(frame, args.conversion)
    adjusted, report = adjust(frame.extras[args.column], None, Cm)
    _info(report.summary(frame.group_keys))
    _write_output(args.output, write_csv(frame, {args.column + "_adjusted": adjusted}))
    return 0


def cmd_retropolate(args):
    _info.stream = sys.stdout if args.output not in (None, "-") else sys.stderr
    frame = _load_frame(args)
    report = validate(frame)
    if not report.ok:
        raise ValidationFailed(report)
    full, _ = complete(frame, _completion(args))
    Cm = build_C(full, args.conversion)
    method = RetroMethod.parse(args.method, seed=args.seed)
    filled, res = retropolate_frame(full, Cm, method, args.aux)
    _info(res.summary(full.group_keys))
    _write_output(args.output, write_csv(filled))
    return 0


def cmd_compare(args):
    prep = _prepare(args)
    methods = _parse_methods(args.methods) if args.methods else [m for m in METHODS if m not in ("chow-lin", "litterman")]
    y_true = prep.frame.extras.get("y_true")
    has_truth = y_true is not None and np.all(np.isfinite(y_true))
    header = ["method", "mae", "rmse", "mse"] + (["mae_hf", "rmse_hf", "mse_hf"] if has_truth else [])
    rows = []
    failed = 0
    for spec in methods:
        name, opts = (spec, {}) if isinstance(spec, str) else spec
        label = name if not opts else f"{name}:{next(iter(opts.values()))}"
        try:
            res = fit(name, prep.y_l, prep.frame.X, prep.Cm, **{"intercept": not args.no_intercept, **opts})
        except NumericalError as exc:
            log.warning("%s failed: %s", label, exc)
            failed += 1
            continue
        row = [label, *_metrics(res.y_hat_low - prep.y_l)]
        if has_truth:
            row += _metrics(res.y_hat - y_true)
        rows.append(row)
    if not rows:
        raise NumericalError("every method failed")

    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
        _write_output(args.output, buf.getvalue().encode())
    else:
        lines = [f"{header[0]:<20}" + "".join(f"{h:>16}" for h in header[1:])]
        for row in rows:
            lines.append(f"{row[0]:<20}" + "".join(f"{v:>16.6g}" for v in row[1:]))
        if has_truth:
            lines.append("mae/rmse/mse: C y_hat vs y_l; *_hf: y_hat vs y_true")
        _write_output(args.output, ("\n".join(lines) + "\n").encode())
    return 0


def cmd_synth(args):
    frame = synth.generate(
        n_low=args.n_low, m=args.m, rho=args.rho, beta=args.beta, noise_sd=args.noise_sd,
        seed=args.seed, rule=args.conversion, const=args.const,
    )
    _write_output(args.output, write_csv(frame))
    return 0


def cmd_plot(args):
    frame = _load_frame(args)
    if frame.n == 0:
        raise InputError("nothing to plot: input has no rows")
    if args.column not in frame.extras:
        raise MissingColumn(f"input has no {args.column!r} column")
    Cm = build_C(frame, args.conversion)
    _write_output(args.output, render_svg(frame, frame.extras[args.column], Cm))
    return 0


# ---------------------------------------------------------------------------
# SVG


def render_svg(frame, y_hat, Cm, width=800, height=400) -> bytes:
    """Two polylines over row order: the target as a step per group and ``y_hat``.

    For the ``sum`` rule the step height is the group total divided by the
    group size so both lines share a scale.
    """
    y_hat = np.asarray(y_hat, dtype=float)
    sizes = Cm.group_sizes
    y_l = frame.y_low / (sizes if Cm.rule == "sum" else 1.0)
    pad_l, pad_r, pad_t, pad_b = 60, 20, 20, 40
    n = len(y_hat)
    vals = np.concatenate([y_l[np.isfinite(y_l)], y_hat[np.isfinite(y_hat)]])
    lo, hi = (float(vals.min()), float(vals.max())) if vals.size else (0.0, 1.0)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0

    def px(i):
        return pad_l + (width - pad_l - pad_r) * (i / max(n, 1))

    def py(v):
        return pad_t + (height - pad_t - pad_b) * (1.0 - (v - lo) / (hi - lo))

    step = []
    for g, (s, length) in enumerate(Cm.group_spans):
        if np.isfinite(y_l[g]):
            step += [(px(s), py(y_l[g])), (px(s + length), py(y_l[g]))]
    line = [(px(i + 0.5), py(v)) for i, v in enumerate(y_hat) if np.isfinite(v)]

    def pts(seq):
        return " ".join(f"{x:.2f},{y:.2f}" for x, y in seq)

    x0, x1, y0, y1 = pad_l, width - pad_r, pad_t, height - pad_b
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{x0 - 5}" y="{y0 + 4}" font-size="10" text-anchor="end">{hi:.4g}</text>',
        f'<text x="{x0 - 5}" y="{y1}" font-size="10" text-anchor="end">{lo:.4g}</text>',
        f'<text x="{x0}" y="{y1 + 15}" font-size="10">{frame.group_keys[0] if frame.n else ""}</text>',
        f'<text x="{x1}" y="{y1 + 15}" font-size="10" text-anchor="end">{frame.group_keys[-1] if frame.n else ""}</text>',
        f'<polyline fill="none" stroke="#888888" stroke-width="2" points="{pts(step)}"/>',
        f'<polyline fill="none" stroke="#1f5fbf" stroke-width="1.5" points="{pts(line)}"/>',
        f'<text x="{x1 - 150}" y="{y0 + 12}" font-size="11" fill="#888888">target ({Cm.rule}, per group)</text>',
        f'<text x="{x1 - 150}" y="{y0 + 26}" font-size="11" fill="#1f5fbf">prediction</text>',
        "</svg>",
    ]
    return ("\n".join(out) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors (exit 1); argparse would exit 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-i", "--input", help="input CSV (default: stdin)")
    common.add_argument("-o", "--output", help="output file (default: stdout)")
    common.add_argument("--conversion", choices=RULES, default="sum", help="aggregation rule (default: sum)")
    common.add_argument("--seed", type=int, default=42, help="seed for every random step (default: 42)")
    common.add_argument("--format", choices=("table", "csv"), default="table")

    prep = _Parser(add_help=False)
    prep.add_argument("--x-interp", choices=("linear", "nearest"), default="linear")
    prep.add_argument("--no-pad", action="store_true", help="drop incomplete boundary groups instead of padding")
    prep.add_argument("--retro", choices=sorted(RETRO_ALIASES), default="auto",
                      help="method for missing group targets (default: auto)")
    prep.add_argument("--aux", help="predictor column for filling missing targets (default: X)")
    prep.add_argument("--no-intercept", action="store_true")

    p = _Parser(prog="tdisagg", description="Temporal disaggregation of low-frequency series.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", parents=[common], help="check an input CSV")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("fit", parents=[common, prep], help="fit one method")
    s.add_argument("--method", choices=METHODS, default="chow-lin-opt")
    s.add_argument("--rho", type=float)
    s.add_argument("--denton-h", type=int, choices=(1, 2, 3))
    s.add_argument("--rho-method", choices=("maxlog", "minrss"))
    s.add_argument("--rho-bounds", type=_parse_bounds, metavar="LO,HI")
    s.add_argument("--adjust", action="store_true", help="also write non-negative y_hat_adjusted")
    s.add_argument("--plot", metavar="SVG", help="write a plot of the fit")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("ensemble", parents=[common, prep], help="simplex-weighted combination of methods")
    s.add_argument("--methods", help="comma list, e.g. denton,chow-lin:0.5,fernandez")
    s.add_argument("--adjust", action="store_true")
    s.set_defaults(func=cmd_ensemble)

    s = sub.add_parser("adjust", parents=[common], help="remove negative predictions group by group")
    s.add_argument("--column", default="y_hat")
    s.set_defaults(func=cmd_adjust)

    s = sub.add_parser("retropolate", parents=[common], help="fill missing group targets")
    s.add_argument("--method", choices=sorted(RETRO_ALIASES), default="auto")
    s.add_argument("--aux", help="predictor column (default: X)")
    s.add_argument("--x-interp", choices=("linear", "nearest"), default="linear")
    s.add_argument("--no-pad", action="store_true")
    s.set_defaults(func=cmd_retropolate)

    s = sub.add_parser("compare", parents=[common, prep], help="error metrics for several methods")
    s.add_argument("--methods", help="comma list (default: every method with a default rho)")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("plot", parents=[common], help="SVG of a predictions CSV")
    s.add_argument("--column", default="y_hat")
    s.set_defaults(func=cmd_plot)

    s = sub.add_parser("synth", parents=[common], help="simulate an AR(1) test frame")
    s.add_argument("--n-low", type=int, default=40)
    s.add_argument("-m", type=int, default=4, help="sub-periods per group")
    s.add_argument("--rho", type=float, default=0.5)
    s.add_argument("--beta", type=float, default=2.0)
    s.add_argument("--const", type=float, default=0.0)
    s.add_argument("--noise-sd", type=float, default=1.0)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    level = os.environ.get("TDISAGG_LOG", "warn").lower()
    logging.basicConfig(level=LOG_LEVELS.get(level, logging.WARNING), format="%(levelname)s: %(message)s",
                        stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
