"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data or format error.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .bracketing import (EPS_HI, EPS_LO, ExposureSet, candlestick, decay_schedule, decompose,
                         validate_coverage)
from .fusion import METHODS, fuse, mask_classes, parse_class_mask
from .geometry import convert_format, downsample_avg
from .image import FORMATS, clip_to_ev
from .io import (FormatError, load_bracket, read_image, read_pgm, read_weights, save_bracket,
                 write_image, write_pgm)
from .metrics import illumination_report
from .segmentation import CLOUD_THRESHOLD, BRUSH_DIAMETER, direction_from_az_el, segment
from .synth import synthetic_sky
from .tonemap import ToneMapper

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tonemapper(text):
    try:
        return ToneMapper.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _exposures(text):
    try:
        return ExposureSet.from_evs(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad exposure list {text!r}: {exc}") from None


def _float_pair(text):
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    return lo, hi


def _common():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--format", choices=FORMATS, default=None,
                   help="map format of the input (default: inferred from the aspect ratio)")
    g.add_argument("--threads", type=int, default=None, help="worker threads for parallel kernels")
    g.add_argument("--seed", type=int, default=0, help="seed for synthetic generators")
    g.add_argument("--force", action="store_true", help="overwrite existing outputs")
    return p


def _check_output(path, force):
    if path is not None and Path(path).exists() and not force:
        raise UsageError(f"refusing to overwrite {path} (use --force)")


def _emit(obj):
    sys.stdout.write(json.dumps(obj) + "\n")


# ---------------------------------------------------------------- commands


def cmd_synth(a):
    _check_output(a.output, a.force)
    fmt = a.format or "sky-angular"
    img = synthetic_sky(a.size, fmt, a.sun_az, a.sun_el, a.sun_intensity, a.cloud_cover,
                        seed=a.seed)
    write_image(img, a.output)


def cmd_decompose(a):
    img = read_image(a.input, a.format)
    bracket = decompose(img, a.exposures, a.tonemap, a.eps_lo, a.eps_hi)
    path = save_bracket(bracket, a.out_dir, force=a.force, ldr8=a.ldr8)
    _emit({"manifest": str(path), "exposures": len(bracket)})


def cmd_fuse(a):
    if (a.method == "weighted") != bool(a.weights):
        raise UsageError("--weights is required with, and only with, --method weighted")
    if (a.classmask is None) != (a.label is None):
        raise UsageError("--classmask and --label must be given together")
    _check_output(a.output, a.force)
    try:
        spec = parse_class_mask(a.classmask) if a.classmask is not None else None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    bracket = load_bracket(a.manifest)
    if spec is not None:
        bracket = mask_classes(bracket, read_pgm(a.label), spec)
    weights = read_weights(a.weights, bracket) if a.weights else None
    write_image(fuse(bracket, a.method, weights), a.output)


def cmd_metrics(a):
    img = read_image(a.input, a.format)
    rep = illumination_report(img, exclude_border=not a.include_border)
    sys.stdout.write(rep.to_text() + "\n")


def cmd_convert(a):
    _check_output(a.output, a.force)
    img = read_image(a.input, a.format)
    write_image(convert_format(img, a.to, a.size), a.output)


def cmd_downsample(a):
    _check_output(a.output, a.force)
    img = read_image(a.input, a.format)
    write_image(downsample_avg(img, a.factor), a.output)


def cmd_clip_ev(a):
    _check_output(a.output, a.force)
    img = read_image(a.input, a.format)
    write_image(clip_to_ev(img, a.ev, equalize=a.equalize), a.output)


def cmd_analyze_bracket(a):
    """CSV to ``--output`` (coverage JSON on stdout) or, without it, CSV on
    stdout followed by the coverage as a ``#`` comment line."""
    if a.output:
        _check_output(a.output, a.force)
    rows = candlestick(a.exposures, a.tonemap, a.eps)
    lo, hi = a.range if a.range else (None, None)
    cov = validate_coverage(a.exposures, a.tonemap, a.eps, lo, hi)
    report = {k: [list(iv) for iv in cov[k]] for k in ("gaps", "overlaps")}
    out = open(a.output, "w", newline="") if a.output else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["ev", "dt", "limit_lo", "body_lo", "marker", "body_hi", "limit_hi"])
        for ev, r in zip(a.exposures.evs, rows):
            w.writerow([repr(v) for v in (ev, r.dt, r.limit_lo, r.body_lo, r.marker,
                                          r.body_hi, r.limit_hi)])
    finally:
        if a.output:
            out.close()
    if a.output:
        _emit(report)
    else:
        sys.stdout.write("# " + json.dumps(report) + "\n")


def cmd_segment(a):
    if (a.sun_az is None) != (a.sun_el is None):
        raise UsageError("--sun-az and --sun-el must be given together")
    _check_output(a.output, a.force)
    img = read_image(a.input, a.format)
    sun = direction_from_az_el(a.sun_az, a.sun_el) if a.sun_az is not None else None
    label = segment(img, sun, a.threshold, a.brush)
    write_pgm(label.classes, a.output)
    counts = np.bincount(label.classes.ravel(), minlength=5)
    _emit({"classes": {str(k): int(v) for k, v in enumerate(counts)}})


def cmd_schedule(a):
    if a.epochs < 1:
        raise UsageError("--epochs must be >= 1")
    total = a.total if a.total is not None else a.epochs
    if total < 0:
        raise UsageError("--total must be >= 0")
    if a.output:
        _check_output(a.output, a.force)
    out = open(a.output, "w", newline="") if a.output else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["epoch"] + [f"dt_{n}" for n in range(len(a.targets))])
        for e in range(total + 1):
            w.writerow([e] + [repr(t) for t in decay_schedule(a.targets, a.epochs, e)])
    finally:
        if a.output:
            out.close()


# ---------------------------------------------------------------- parser


def build_parser():
    common = _common()
    p = _Parser(prog="skyfdr", description="Full-dynamic-range sky maps: bracketing, fusion, "
                "geometry, metrics and segmentation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_, description=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("synth", cmd_synth, "Write a seeded synthetic sky.")
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--size", type=int, default=512)
    sp.add_argument("--sun-az", type=float, default=90.0, help="degrees from +x toward +y")
    sp.add_argument("--sun-el", type=float, default=45.0, help="degrees above the horizon")
    sp.add_argument("--sun-intensity", type=float, default=2.0 ** 14)
    sp.add_argument("--cloud-cover", type=float, default=0.3, help="cloud fraction in [0, 1]")

    sp = add("decompose", cmd_decompose, "Split a radiance image into an LDR bracket.")
    sp.add_argument("input")
    sp.add_argument("--exposures", type=_exposures, required=True,
                    help="comma-separated EVs, dt = 2**ev, e.g. 0,-8,-15")
    sp.add_argument("--tonemap", type=_tonemapper, default=ToneMapper())
    sp.add_argument("--eps-lo", type=float, default=EPS_LO)
    sp.add_argument("--eps-hi", type=float, default=EPS_HI)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--ldr8", action="store_true", help="also write lossy 8-bit previews")

    sp = add("fuse", cmd_fuse, "Merge a bracket manifest into a radiance image.")
    sp.add_argument("manifest")
    sp.add_argument("--method", choices=METHODS, default="rgb")
    sp.add_argument("--weights", nargs="+", help="one PFM weight file per exposure")
    sp.add_argument("--classmask", help='per-exposure class sets, e.g. "0=0,1,2;1=3,4"')
    sp.add_argument("--label", help="PGM label map for --classmask")
    sp.add_argument("-o", "--output", required=True)

    sp = add("metrics", cmd_metrics, "Print EV, integrated illumination and peak luminance.")
    sp.add_argument("input")
    sp.add_argument("--include-border", action="store_true",
                    help="take EV over every pixel, not just the map domain")

    sp = add("convert", cmd_convert, "Resample into another map format.")
    sp.add_argument("input")
    sp.add_argument("--to", required=True, choices=("sky-angular", "sky-latlong", "latlong"))
    sp.add_argument("--size", type=int, required=True, help="target height")
    sp.add_argument("-o", "--output", required=True)

    sp = add("downsample", cmd_downsample, "Average-pool by a power of two.")
    sp.add_argument("input")
    sp.add_argument("--factor", type=int, required=True)
    sp.add_argument("-o", "--output", required=True)

    sp = add("clip-ev", cmd_clip_ev, "Clip an image to a target exposure value.")
    sp.add_argument("input")
    sp.add_argument("--ev", type=float, required=True)
    sp.add_argument("--equalize", action="store_true",
                    help="rescale to keep the integrated illumination")
    sp.add_argument("-o", "--output", required=True)

    sp = add("analyze-bracket", cmd_analyze_bracket,
             "Candlestick table and coverage report of an exposure set.")
    sp.add_argument("--exposures", type=_exposures, required=True)
    sp.add_argument("--tonemap", type=_tonemapper, default=ToneMapper())
    sp.add_argument("--eps", type=float, default=EPS_LO)
    sp.add_argument("--range", type=_float_pair, help="radiance range LO,HI to check")
    sp.add_argument("-o", "--output", help="CSV file (default: standard output)")

    sp = add("segment", cmd_segment, "Write a class label map as PGM.")
    sp.add_argument("input")
    sp.add_argument("--sun-az", type=float)
    sp.add_argument("--sun-el", type=float)
    sp.add_argument("--threshold", type=float, default=CLOUD_THRESHOLD)
    sp.add_argument("--brush", type=int, default=BRUSH_DIAMETER, help="odd brush diameter, 1 = off")
    sp.add_argument("-o", "--output", required=True)

    sp = add("schedule", cmd_schedule, "CSV of exposure times per epoch under decay.")
    sp.add_argument("--targets", type=_exposures, required=True, help="target EVs, e.g. 0,-8,-15")
    sp.add_argument("--epochs", type=int, required=True, help="epochs to reach the targets")
    sp.add_argument("--total", type=int, help="last epoch to print (default: --epochs)")
    sp.add_argument("-o", "--output")
    return p


def _set_threads(n):
    if n is None:
        return
    if n < 1:
        raise UsageError("--threads must be >= 1")
    if kernels.BACKEND == "numba":
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _set_threads(args.threads)
        args.func(args)
    except (UsageError, FileExistsError) as exc:
        print(f"skyfdr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, ValueError, OSError, IndexError) as exc:
        print(f"skyfdr {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
