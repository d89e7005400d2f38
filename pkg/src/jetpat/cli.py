"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data or runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .encoder import FeatureConfig, extract_feature, lbp_feature
from .harness import (DataError, ExperimentConfig, generate_synthetic, load_dataset,
                      run_experiment, save_dataset, standardize)
from .jetspace import CHANNELS, compute_jet, contrast_normalize
from .kernels import dtg_kernel_2d
from .storage import load_image, save_channel, write_feature_cache, write_feature_csv

log = logging.getLogger("jetpat")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _nsc_dim(text: str):
    value = float(text)
    if value.is_integer() and value >= 1:
        return int(value)
    if 0 < value < 1:
        return value
    raise argparse.ArgumentTypeError("expected an integer >= 1 or an energy fraction in (0, 1)")


def _add_feature_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma", type=float, default=1.0, help="DtG scale in pixels")
    p.add_argument("--radius", type=float, default=1.0, help="sampling radius R")
    p.add_argument("--neighbors", type=int, default=8, help="neighbor count N")
    p.add_argument("--include-zeroth", action="store_true", default=False,
                   help="keep the zeroth-order channel (354-dim feature)")
    p.add_argument("--mapping", choices=("uniform", "raw"), default="uniform",
                   help="code-to-bin mapping")
    p.add_argument("--interpolation", choices=("bilinear", "nearest"), default="bilinear",
                   help="neighbor sampling rule")
    p.add_argument("--descriptor", choices=("ljp", "lbp"), default="ljp",
                   help="ljp, or plain LBP on the raw image as a baseline")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="jetpat", description="Local jet pattern texture descriptor.",
                     formatter_class=fmt)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-q", "--quiet", action="store_true", default=False,
                        help="log only warnings and errors to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("kernel-dump", help="print a dense DtG kernel as CSV",
                       formatter_class=fmt)
    p.add_argument("--m", type=int, default=0, help="x-derivative order")
    p.add_argument("--n", type=int, default=0, help="y-derivative order")
    p.add_argument("--sigma", type=float, default=1.0, help="DtG scale in pixels")
    p.add_argument("--support-radius", type=int, default=None,
                   help="kernel half-width (default ceil(4 sigma))")
    p.add_argument("--out", default=None, help="write to this file instead of stdout")

    p = sub.add_parser("extract", help="extract features from images", formatter_class=fmt)
    p.add_argument("--image", action="append", required=True,
                   help="image file; repeat for several")
    p.add_argument("--label", default="", help="class label recorded with every feature")
    p.add_argument("--out", default=None,
                   help="output file: .csv for CSV, .bin for a feature cache (default CSV on stdout)")
    p.add_argument("--dump-jet", default=None, metavar="DIR",
                   help="also write the contrast-normalized jet channels of each image here")
    p.add_argument("--dump-format", choices=("pgm", "csv"), default="pgm",
                   help="file format for --dump-jet")
    p.add_argument("--no-standardize", action="store_true", default=False,
                   help="skip the mean 128 / std 20 standardization")
    _add_feature_flags(p)

    p = sub.add_parser("experiment", help="cross-validated classification experiment",
                       formatter_class=fmt)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", default=None, help="dataset root (class-per-directory or Outex suite)")
    src.add_argument("--synthetic", action="store_true", default=False,
                     help="use the built-in synthetic suite (see synth flags)")
    p.add_argument("--layout", choices=("auto", "directory", "outex"), default="auto",
                   help="dataset layout")
    p.add_argument("--problem", default="000", help="Outex problem directory")
    p.add_argument("--classifier", choices=("nnc", "nsc"), default="nsc", help="classifier")
    p.add_argument("--k", type=int, default=10, help="number of folds")
    p.add_argument("--seed", type=int, default=0, help="seed for folds, noise and synthesis")
    p.add_argument("--snr-db", type=float, default=None, help="add white Gaussian noise at this SNR")
    p.add_argument("--nsc-dim", type=_nsc_dim, default=0.99,
                   help="subspace size: integer n, or energy fraction in (0, 1)")
    p.add_argument("--protocol", choices=("kfold", "suite"), default="kfold",
                   help="k-fold CV, or the dataset's own train/test split")
    p.add_argument("--format", choices=("json", "text"), default="json", help="report format")
    p.add_argument("--no-timing", action="store_true", default=False,
                   help="omit timing fields so reports are byte-reproducible")
    p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = one per CPU")
    p.add_argument("--cache-dir", default=os.environ.get("JETPAT_CACHE_DIR"),
                   help="feature cache directory (env JETPAT_CACHE_DIR)")
    _add_feature_flags(p)
    _add_synth_flags(p, prefix="synth-")

    p = sub.add_parser("synth", help="write the synthetic texture suite as PNG files",
                       formatter_class=fmt)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=42, help="generator seed")
    _add_synth_flags(p)

    p = sub.add_parser("bench", help="time feature extraction against image size",
                       formatter_class=fmt)
    p.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256, 512],
                   help="square image sizes")
    p.add_argument("--repeats", type=int, default=5, help="timed runs per size (minimum kept)")
    p.add_argument("--seed", type=int, default=0, help="seed of the random test images")
    _add_feature_flags(p)
    return parser


def _add_synth_flags(p, prefix: str = "") -> None:
    p.add_argument(f"--{prefix}classes", type=int, default=6, help="synthetic classes")
    p.add_argument(f"--{prefix}samples", type=int, default=20, help="samples per class")
    p.add_argument(f"--{prefix}size", type=int, default=64, help="image side in pixels")
    p.add_argument(f"--{prefix}rotations", type=float, nargs="+",
                   default=[0, 15, 30, 45, 60, 75, 90], help="rotation angles in degrees")
    p.add_argument(f"--{prefix}jitter", type=float, default=20.0,
                   help="brightness jitter amplitude")


def _feature_config(args) -> FeatureConfig:
    return FeatureConfig(sigma=args.sigma, radius=args.radius, neighbors=args.neighbors,
                         include_zeroth=args.include_zeroth, mapping=args.mapping,
                         interpolation=args.interpolation)


def _validate(args) -> None:
    if getattr(args, "k", 2) < 2:
        raise UsageError(f"--k must be >= 2, got {args.k}")
    if getattr(args, "sigma", 1.0) <= 0:
        raise UsageError("--sigma must be positive")
    if getattr(args, "radius", 1.0) <= 0:
        raise UsageError("--radius must be positive")
    neighbors = getattr(args, "neighbors", 8)
    if not 1 <= neighbors <= 16:
        raise UsageError("--neighbors must be in 1..16")
    snr = getattr(args, "snr_db", None)
    if snr is not None and not math.isfinite(snr):
        raise UsageError("--snr-db must be finite")
    if getattr(args, "threads", 0) < 0:
        raise UsageError("--threads must be >= 0")


def cmd_kernel_dump(args, out) -> int:
    try:
        kernel = dtg_kernel_2d(args.m, args.n, args.sigma, args.support_radius)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.out:
        save_channel(Path(args.out), kernel.dense)
    else:
        np.savetxt(out, kernel.dense, delimiter=",", fmt="%.17g")
    return 0


def cmd_extract(args, out) -> int:
    config = _feature_config(args)
    records = []
    for path in args.image:
        image = load_image(path)
        if not args.no_standardize:
            image = standardize(image)
        try:
            if args.descriptor == "lbp":
                values = lbp_feature(image, config)
            else:
                values = extract_feature(image, config)
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from exc
        records.append((path, args.label, config.fingerprint(), values))
        if args.dump_jet:
            _dump_jet(image, config, Path(args.dump_jet), Path(path).stem, args.dump_format)
    if args.out and args.out.endswith(".bin"):
        write_feature_cache(args.out, records)
    elif args.out:
        write_feature_csv(args.out, records)
    else:
        write_feature_csv(out, records)
    return 0


def _dump_jet(image, config: FeatureConfig, out_dir: Path, stem: str, ext: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    jet = contrast_normalize(compute_jet(image, config.sigma, config.support_radius), config.weber)
    for m, n in CHANNELS:
        save_channel(out_dir / f"{stem}_J{m}{n}.{ext}", jet[(m, n)])


def _experiment_config(args) -> ExperimentConfig:
    return ExperimentConfig(
        sigma=args.sigma, radius=args.radius, neighbors=args.neighbors,
        include_zeroth=args.include_zeroth, mapping=args.mapping,
        interpolation=args.interpolation, descriptor=args.descriptor,
        classifier=args.classifier, k=args.k, seed=args.seed, snr_db=args.snr_db,
        nsc_dim=args.nsc_dim, protocol=args.protocol, threads=args.threads,
        cache_dir=args.cache_dir)


def cmd_experiment(args, out) -> int:
    config = _experiment_config(args)
    if args.synthetic:
        dataset = generate_synthetic(args.synth_classes, args.synth_samples, args.synth_size,
                                     args.synth_rotations, args.synth_jitter, args.seed)
    else:
        dataset = load_dataset(args.data, args.layout, args.problem)
    try:
        report = run_experiment(dataset, config)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    timing = not args.no_timing
    if args.format == "json":
        out.write(report.to_json(timing) + "\n")
    else:
        out.write(report.to_text(timing) + "\n")
    return 0


def cmd_synth(args, out) -> int:
    dataset = generate_synthetic(args.classes, args.samples, args.size, args.rotations,
                                 args.jitter, args.seed)
    save_dataset(dataset, args.out)
    out.write(f"wrote {len(dataset)} images in {len(dataset.classes)} classes to {args.out}\n")
    return 0


def cmd_bench(args, out) -> int:
    config = _feature_config(args)
    rng = np.random.default_rng(args.seed)
    fn = lbp_feature if args.descriptor == "lbp" else extract_feature
    rows = []
    for size in args.sizes:
        image = rng.normal(128.0, 20.0, (size, size))
        fn(image, config)
        best = math.inf
        for _ in range(max(1, args.repeats)):
            t0 = time.perf_counter()
            fn(image, config)
            best = min(best, time.perf_counter() - t0)
        rows.append({"size": size, "pixels": size * size, "seconds": best})
    result = {"timings": rows, "config": vars(args)}
    if len(rows) >= 2:
        x = np.log([r["pixels"] for r in rows])
        y = np.log([r["seconds"] for r in rows])
        result["loglog_slope"] = float(np.polyfit(x, y, 1)[0])
    out.write(json.dumps(result, indent=2, default=str) + "\n")
    return 0


COMMANDS = {
    "kernel-dump": cmd_kernel_dump,
    "extract": cmd_extract,
    "experiment": cmd_experiment,
    "synth": cmd_synth,
    "bench": cmd_bench,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        _validate(args)
        log.info("resolved config %s", json.dumps(vars(args), default=str, sort_keys=True))
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"jetpat: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError, ValueError) as exc:
        print(f"jetpat: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
