"""Command line entry point: ``burstrelay {sweep,figure,analytic,oracle}``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import oracle, recipes
from .config import ConfigError, load_config
from .harness import ExperimentSpec, FrameFailure, csv_text, emit_csv, run_experiment
from .modem import get_modulation

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
log = logging.getLogger("burstrelay")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _snr_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}") from exc


def _common(p: argparse.ArgumentParser, sim: bool = True) -> None:
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--snr", type=_snr_list, help="SNR grid in dB, e.g. '0,5,10'")
    p.add_argument("--desk-scale", action="store_true",
                   help="short frames and a per-point frame cap (minutes per figure)")
    if sim:
        p.add_argument("--seed", type=_u64, help="master seed (unsigned 64-bit)")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--min-errors", type=int, help="bit errors that end a point")
        p.add_argument("--timing", action="store_true",
                       help="record wall-clock seconds (makes the CSV run-dependent)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="burstrelay", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run an experiment described by an INI file")
    p.add_argument("config")
    _common(p)

    p = sub.add_parser("figure", help="run the recipe for one uncoded figure")
    p.add_argument("figure", help=", ".join(recipes.FIGURES))
    p.add_argument("--reference-frames", action="store_true",
                   help=f"exactly {recipes.REFERENCE_FRAMES} full-length frames per point")
    _common(p)

    p = sub.add_parser("analytic", help="closed-form curves only, no simulation")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--figure")
    src.add_argument("--config")
    _common(p, sim=False)

    p = sub.add_parser("oracle", help="trellis detector vs brute-force enumeration")
    p.add_argument("--frames", type=int, default=1000)
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--order", type=int, default=2, choices=(2, 4))
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=_u64, default=0)
    return ap


def _apply_overrides(spec: ExperimentSpec, args) -> ExperimentSpec:
    kw = {}
    if getattr(args, "seed", None) is not None:
        kw["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        kw["workers"] = args.workers
    if getattr(args, "min_errors", None) is not None:
        kw["min_errors"] = args.min_errors
    if getattr(args, "timing", False):
        kw["record_timing"] = True
    if args.snr is not None:
        kw["snr_db"] = args.snr
    if args.desk_scale and args.command != "figure":
        kw.update(frame_symbols=recipes.DESK_FRAME_SYMBOLS,
                  max_frames=recipes.DESK_MAX_FRAMES, fixed_frames=False)
    kw["output"] = args.out if args.out is not None else spec.output
    return replace(spec, **kw)


def _spec_from_args(args) -> ExperimentSpec:
    if args.command == "sweep" or getattr(args, "config", None):
        spec = load_config(args.config)
    else:
        spec = recipes.figure_recipe(args.figure, desk_scale=args.desk_scale,
                                     reference_frames=getattr(args, "reference_frames", False))
    return _apply_overrides(spec, args)


def _write(text_or_records, out):
    if out:
        if isinstance(text_or_records, str):
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text_or_records)
        else:
            emit_csv(text_or_records, out)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text_or_records if isinstance(text_or_records, str)
                         else csv_text(text_or_records))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.command == "oracle":
        if not 1 <= args.k_max <= oracle.MAX_K or args.frames < 1:
            print(f"error: need frames >= 1 and 1 <= k-max <= {oracle.MAX_K}",
                  file=sys.stderr)
            return EXIT_CONFIG
        gap = oracle.equivalence_suite(args.frames, args.seed, args.k_max,
                                       get_modulation(args.order))
        ok = gap <= args.tol
        print(f"max |posterior gap| over {args.frames} frames: {gap:.3e} "
              f"({'PASS' if ok else 'FAIL'} at tol {args.tol:g})")
        return EXIT_OK if ok else EXIT_RUNTIME
    try:
        spec = _spec_from_args(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "analytic":
            _write(recipes.analytic_csv(recipes.analytic_rows(spec)), spec.output)
            return EXIT_OK
        records = run_experiment(replace(spec, output=None))
        _write(records, spec.output)
    except FrameFailure as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
