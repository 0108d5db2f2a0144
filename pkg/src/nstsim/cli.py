"""``nstsim`` command-line interface.

Exit codes: 0 ok, 2 usage, 3 I/O, 4 numeric failure.  Errors are reported on
stderr as one line ``nstsim: error[<code>:<kind>] <message>``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .core import DegenerateInputError, ImageFormatError, load_image, save_image
from .diffusion import DiffusionSettings, separate
from .fbm import CholeskyError, FbmParams, field_to_unit, synth_field
from .glcm import diagonal_offsets, glcm_mi_profile, horizontal_offsets
from .mi import HistogramSpec, mi_patches, mi_scales
from .report import ReportConfig, ReportStageError, run_batch, run_report
from .stats import (
    gaussianity_report,
    haar_detail,
    ks_test_uniform_phase,
    kurtosis,
    randomize_phase,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
_KIND = {EXIT_USAGE: "usage", EXIT_IO: "io", EXIT_NUMERIC: "numeric"}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, message)


def _classify(exc: BaseException) -> int:
    if isinstance(exc, ReportStageError):
        return _classify(exc.original)
    if isinstance(exc, (OSError, ImageFormatError, json.JSONDecodeError)):
        return EXIT_IO
    if isinstance(exc, (DegenerateInputError, CholeskyError, np.linalg.LinAlgError,
                        FloatingPointError, ArithmeticError)):
        return EXIT_NUMERIC
    if isinstance(exc, ValueError):
        return EXIT_USAGE
    return EXIT_NUMERIC


# --- argument types -----------------------------------------------------------

def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64)")
    return value


def _kappa(text: str):
    if text == "auto":
        return None
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"kappa must be a number or 'auto', got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("kappa must be positive")
    return value


def _add_diffusion(p, defaults: bool = True):
    d = DiffusionSettings() if defaults else None
    p.add_argument("--iters", type=int, default=d.iterations if d else None, help="diffusion iterations")
    p.add_argument("--kappa", type=_kappa, default=argparse.SUPPRESS if not d else None,
                   help="edge threshold K, or 'auto' (default)")
    p.add_argument("--dt", type=float, default=d.dt if d else None, help="time step, at most 0.25")
    p.add_argument("--cond", choices=("exp", "rat", "exponential", "rational"),
                   default=d.conductance if d else None, help="conductance function")


def _settings(args) -> DiffusionSettings:
    return DiffusionSettings(args.iters, args.kappa, args.dt, args.cond)


# --- output helpers -------------------------------------------------------------

def _emit_json(obj, out=None):
    text = json.dumps(obj, indent=2, allow_nan=False)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _write_text(text: str, out=None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _print_flat(d: dict, prefix: str = ""):
    for k, v in d.items():
        if isinstance(v, dict):
            _print_flat(v, f"{prefix}{k}.")
        else:
            print(f"{prefix}{k}: {v}")


# --- subcommands ----------------------------------------------------------------

def cmd_synth_fbm(args):
    params = FbmParams(args.hurst, args.sigma2)
    field = synth_field(params, args.size, args.seed)
    out = Path(args.out)
    if out.suffix.lower() == ".txf":
        save_image(field.grid, out)
    else:
        save_image(field_to_unit(field), out)
    _emit_json({"hurst": params.hurst, "sigma_w2": params.sigma_w2, "size": args.size,
                "seed": args.seed, "out": str(out)})


def cmd_separate(args):
    img = load_image(args.input)
    sep = separate(img, _settings(args))
    save_image(sep.structure, args.out_structure)
    save_image(sep.texture, args.out_texture)
    _emit_json({"input": args.input, "settings": sep.settings.as_dict(),
                "structure": args.out_structure, "texture": args.out_texture})


def cmd_stats(args):
    img = load_image(args.input)
    if args.test == "gaussianity":
        result = gaussianity_report(img, _settings(args), args.alpha, args.lilliefors).as_dict()
    elif args.test == "phase":
        result = {"phase_uniform": ks_test_uniform_phase(img, args.alpha).as_dict()}
    else:
        k = kurtosis(haar_detail(img).coefficients)
        result = {"kurtosis": {"plain": k, "excess": k - 3.0}}
    if args.json:
        _emit_json(result)
    else:
        _print_flat(result)


def cmd_phase_randomize(args):
    img = load_image(args.input)
    save_image(randomize_phase(img, args.seed), args.output)


def cmd_mi_scales(args):
    report = mi_scales(load_image(args.input), args.levels, HistogramSpec(args.bins))
    if args.csv:
        rows = [(p.n, p.mi, p.h_fine, p.h_coarse, p.h_cond) for p in report.pairs]
        _write_text(_csv_text(("n", "mi_bits", "h_fine", "h_coarse", "h_fine_given_coarse"), rows), args.out)
    else:
        _emit_json(report.as_dict(), args.out)


def cmd_mi_patches(args):
    report = mi_patches(load_image(args.input), args.patch, args.levels, HistogramSpec(args.bins))
    if args.csv:
        prefix = Path(args.csv)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        for lvl in report.levels:
            k = lvl.normalized.shape[0]
            matrix = [[("" if not np.isfinite(v) else repr(float(v))) for v in row] for row in lvl.normalized]
            Path(f"{prefix}_level{lvl.n}_matrix.csv").write_text(
                _csv_text([f"p{j}" for j in range(k)], matrix), encoding="utf-8")
            edges = lvl.hist_edges
            hist = [(edges[i], edges[i + 1], int(c)) for i, c in enumerate(lvl.hist_counts)]
            Path(f"{prefix}_level{lvl.n}_hist.csv").write_text(
                _csv_text(("lo", "hi", "count"), hist), encoding="utf-8")
    _emit_json(report.as_dict())


def cmd_glcm_mi(args):
    offsets = (diagonal_offsets if args.sweep == "diagonal" else horizontal_offsets)(args.d_max)
    profile = glcm_mi_profile(load_image(args.input), args.levels, offsets)
    if args.csv:
        rows = [(max(abs(dx), abs(dy)), dx, dy, mi) for dx, dy, mi in profile.entries]
        _write_text(_csv_text(("d", "dx", "dy", "mi_bits"), rows), args.out)
    else:
        _emit_json(profile.as_dict(), args.out)


def _config(args) -> ReportConfig:
    base = ReportConfig.load(args.config) if args.config else ReportConfig()
    overrides = {
        "iterations": args.iters, "dt": args.dt, "conductance": args.cond,
        "alpha": args.alpha, "bins": args.bins, "scale_levels": args.scale_levels,
        "patch": args.patch, "patch_levels": args.patch_levels,
        "glcm_levels": args.glcm_levels, "sweep": args.sweep, "d_max": args.d_max,
    }
    config = base.override(**overrides)
    if args.lilliefors:
        config = config.override(lilliefors=True)
    if "kappa" in args:
        # an explicit --kappa auto resets a kappa taken from the config file
        config = replace(config, kappa=args.kappa)
    return config


def cmd_report(args):
    _emit_json(run_report(args.input, _config(args)), args.out)


def cmd_batch(args):
    result = run_batch(args.directory, _config(args), args.workers)
    _emit_json(result, args.out)


def _add_report_options(p):
    p.add_argument("--config", help="JSON file with report settings (keys: %s)" % ", ".join(ReportConfig.keys()))
    _add_diffusion(p, defaults=False)
    p.add_argument("--alpha", type=float)
    p.add_argument("--lilliefors", action="store_true")
    p.add_argument("--bins", type=int)
    p.add_argument("--scale-levels", type=int)
    p.add_argument("--patch", type=int)
    p.add_argument("--patch-levels", type=int)
    p.add_argument("--glcm-levels", type=int)
    p.add_argument("--sweep", choices=("horizontal", "diagonal"))
    p.add_argument("--d-max", type=int)
    p.add_argument("-o", "--out", help="write JSON here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nstsim", description="Self-similarity statistics for stochastic textures.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth-fbm", help="synthesize an exact 2-D fBm field")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--seed", type=_u64, required=True)
    p.add_argument("--out", required=True, help=".txf keeps raw values, .pgm maps to [0, 1]")
    p.set_defaults(func=cmd_synth_fbm)

    p = sub.add_parser("separate", help="split into structure and texture layers")
    p.add_argument("input")
    _add_diffusion(p)
    p.add_argument("--out-structure", required=True)
    p.add_argument("--out-texture", required=True, help="use .txf, the layer is signed")
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("stats", help="Gaussianity, phase uniformity or kurtosis")
    p.add_argument("test", choices=("gaussianity", "phase", "kurtosis"))
    p.add_argument("input")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--lilliefors", action="store_true")
    p.add_argument("--json", action="store_true")
    _add_diffusion(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("phase-randomize", help="replace Fourier phases with uniform noise")
    p.add_argument("input")
    p.add_argument("--seed", type=_u64, required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_phase_randomize)

    p = sub.add_parser("mi-scales", help="MI between consecutive pyramid levels")
    p.add_argument("input")
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--bins", type=int, default=256)
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="default")
    fmt.add_argument("--csv", action="store_true")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_mi_scales)

    p = sub.add_parser("mi-patches", help="normalized MI between patches per level")
    p.add_argument("input")
    p.add_argument("--patch", type=int, default=32)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--bins", type=int, default=256)
    p.add_argument("--csv", metavar="PREFIX", help="write PREFIX_level<n>_{matrix,hist}.csv")
    p.set_defaults(func=cmd_mi_patches)

    p = sub.add_parser("glcm-mi", help="GLCM mutual information versus offset")
    p.add_argument("input")
    p.add_argument("--levels", type=int, default=32)
    p.add_argument("--sweep", choices=("horizontal", "diagonal"), default="horizontal")
    p.add_argument("--d-max", type=int, default=30)
    p.add_argument("--csv", action="store_true")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_glcm_mi)

    p = sub.add_parser("report", help="full pipeline on one image")
    p.add_argument("input")
    _add_report_options(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("batch", help="report every image in a directory")
    p.add_argument("directory")
    _add_report_options(p)
    p.add_argument("--workers", type=int, help="process count (default from NSTSIM_WORKERS)")
    p.set_defaults(func=cmd_batch)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except CliError as exc:
        code, msg = exc.code, str(exc)
    except Exception as exc:  # noqa: BLE001 - mapped to an exit code below
        code = _classify(exc)
        stage = f" stage={exc.stage}" if isinstance(exc, ReportStageError) else ""
        orig = exc.original if isinstance(exc, ReportStageError) else exc
        msg = f"{type(orig).__name__}{stage}: {orig}"
    else:
        return EXIT_OK
    msg = " ".join(msg.split())
    print(f"nstsim: error[{code}:{_KIND[code]}] {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
