"""Command-line entry point (``shapecat``).

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .dataset_io import scan_dataset, write_manifest_csv
from .descriptors import parse_kind
from .errors import ShapecatError
from .harness import (
    ConfigError,
    ExperimentConfig,
    emit_report,
    load_features,
    make_synthetic_dataset,
    run_experiment,
    write_features,
)
from .metrics import POSITIVE
from .svm import encode_labels, svm_train

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_common(p):
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--data", help="dataset root (overrides config)")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--threshold", type=int, help="binarization threshold 0..255")
    p.add_argument("--polarity", choices=("bright", "dark"), help="foreground polarity")
    p.add_argument("--descriptors", nargs="+", metavar="KIND",
                   help='descriptor kinds, e.g. v t "[h,v,t,b]"')


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shapecat", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    _add_common(sub.add_parser("prepare", help="scan a dataset and write manifest.csv"))
    _add_common(sub.add_parser("extract", help="write descriptor and moment CSVs"))
    _add_common(sub.add_parser("cluster", help="k-means evaluation table"))
    p = sub.add_parser("train-svm", help="repeated-split SVM evaluation table")
    _add_common(p)
    p.add_argument("--model-out", help="also fit one model on all samples of the first descriptor")
    p = sub.add_parser("rbm-sweep", help="RBM hidden-unit sweep")
    _add_common(p)
    p.add_argument("--hidden", type=int, nargs="+", help="hidden-unit counts")
    _add_common(sub.add_parser("experiment", help="full pipeline"))

    p = sub.add_parser("synth", help="write a synthetic fixture dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n-per-class", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=100)
    return parser


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.data:
        cfg.dataset_root = args.data
    if args.out:
        cfg.output_dir = args.out
    if args.threshold is not None:
        cfg.threshold = args.threshold
    if args.polarity:
        cfg.polarity = args.polarity
    if args.descriptors:
        cfg.descriptors = list(args.descriptors)
    if getattr(args, "hidden", None):
        cfg.rbm.hidden_sweep = list(args.hidden)
    cfg.__post_init__()  # revalidate after overrides
    return cfg


def _run(args) -> None:
    if args.command == "synth":
        manifest = make_synthetic_dataset(args.out, args.n_per_class, args.seed, args.size)
        print(f"wrote {len(manifest)} images to {args.out}")
        return

    cfg = _config(args)
    out = Path(cfg.output_dir)
    if args.command == "prepare":
        manifest = scan_dataset(cfg.dataset_root, cfg.class_overrides)
        out.mkdir(parents=True, exist_ok=True)
        write_manifest_csv(manifest, out / "manifest.csv")
        for name in manifest.skipped:
            print(f"skipped unrecognized directory: {name}", file=sys.stderr)
        print(f"{len(manifest)} samples -> {out / 'manifest.csv'}")
        return
    if args.command == "extract":
        _, fs = load_features(cfg)
        for p in write_features(fs, cfg.kinds, out):
            print(p)
        return

    stages = {
        "cluster": ("cluster",),
        "train-svm": ("svm",),
        "rbm-sweep": ("rbm",),
        "experiment": ("cluster", "svm", "rbm"),
    }[args.command]
    loaded = load_features(cfg)
    report = run_experiment(cfg, stages, loaded)
    for p in emit_report(report, out):
        print(p)
    if args.command == "train-svm" and args.model_out:
        kind = parse_kind(cfg.descriptors[0])
        fs = loaded[1]
        model = svm_train(fs.matrix(kind), encode_labels(fs.labels, POSITIVE),
                          cfg.svm.c, cfg.svm.epochs, cfg.svm.base_seed)
        Path(args.model_out).write_text(model.to_json() + "\n", encoding="utf-8")
        print(args.model_out)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _run(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ShapecatError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
