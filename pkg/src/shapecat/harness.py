"""Configuration-driven experiment runner and report writer."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .clustering import kmeans_best_of
from .dataset_io import (
    DEFAULT_THRESHOLD,
    ClassLabel,
    DatasetManifest,
    Ellipse,
    LabeledSample,
    Polarity,
    StickFigure,
    canonical_subcategory,
    encode_pgm,
    load_samples,
    scan_dataset,
    synth_silhouette,
)
from .descriptors import ALL_ATOMS, HVTB, Atom, Concat, DescriptorKind, extract, moments, parse_kind
from .errors import ShapecatError, StageError
from .metrics import POSITIVE, ScoreReport
from .rbm import RbmHyper, rbm_train, rbm_transform
from .svm import repeated_eval

log = logging.getLogger(__name__)

DEFAULT_DESCRIPTORS = ("h", "v", "l", "r", "t", "b", "[h,v,t,b]")
DEFAULT_HIDDEN_SWEEP = (16, 32, 64, 128, 256, 512)

NOTES = [
    "RBMs are fitted on each run's training split only.",
    "Score tables are rounded to one decimal; feature files keep full precision.",
]


class ConfigError(ShapecatError, ValueError):
    pass


@dataclass
class KmeansConfig:
    n_init: int = 10
    base_seed: int = 0


@dataclass
class SvmConfig:
    c: float = 1.0
    epochs: int = 200
    n_runs: int = 10
    base_seed: int = 0


@dataclass
class RbmConfig:
    hidden_sweep: list[int] = field(default_factory=lambda: list(DEFAULT_HIDDEN_SWEEP))
    lr: float = 0.1
    batch: int = 50
    epochs: int = 100
    seed: int = 0
    # subset of ``descriptors`` to sweep; None sweeps all of them
    descriptors: list[str] | None = None


@dataclass
class ExperimentConfig:
    dataset_root: str = "data"
    threshold: int = DEFAULT_THRESHOLD
    polarity: str = "bright"
    descriptors: list[str] = field(default_factory=lambda: list(DEFAULT_DESCRIPTORS))
    kmeans: KmeansConfig = field(default_factory=KmeansConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    rbm: RbmConfig = field(default_factory=RbmConfig)
    output_dir: str = "results"
    concat_auto_top4: bool = False
    class_overrides: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        try:
            Polarity(self.polarity)
            kinds = [parse_kind(d) for d in self.descriptors]
            for d in self.rbm.descriptors or ():
                parse_kind(d)
            for name, label in self.class_overrides.items():
                ClassLabel(label)
                if canonical_subcategory(name) is None:
                    raise ValueError(f"class override for unknown subcategory {name!r}")
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not kinds:
            raise ConfigError("descriptor list is empty")
        counts = [self.kmeans.n_init, self.svm.n_runs, self.svm.epochs, self.rbm.batch,
                  self.rbm.epochs, *self.rbm.hidden_sweep]
        if any(int(c) < 1 for c in counts):
            raise ConfigError("all counts must be positive")
        if not 0 <= self.threshold <= 255:
            raise ConfigError("threshold must be within 0..255")
        if self.svm.c <= 0 or self.rbm.lr <= 0:
            raise ConfigError("c and learning rate must be positive")

    @property
    def kinds(self) -> list[DescriptorKind]:
        return [parse_kind(d) for d in self.descriptors]

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        obj = dict(obj)
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            for key, sub in (("kmeans", KmeansConfig), ("svm", SvmConfig), ("rbm", RbmConfig)):
                if key in obj:
                    obj[key] = sub(**obj[key])
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        cfg = cls.from_dict(obj)
        # relative paths resolve against the config file's directory
        base = Path(path).parent
        cfg.dataset_root = str(base / cfg.dataset_root)
        cfg.output_dir = str(base / cfg.output_dir)
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        protocol = self.to_dict()
        # locations do not change the experiment
        protocol.pop("dataset_root")
        protocol.pop("output_dir")
        blob = json.dumps(protocol, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class SweepPoint:
    hidden: int
    mean: float
    std: float


@dataclass
class ExperimentReport:
    clustering_table: dict[str, ScoreReport]
    svm_table: dict[str, tuple[float, float]]
    rbm_curves: dict[str, list[SweepPoint]]
    provenance: dict


def dataset_checksum(manifest: DatasetManifest) -> str:
    h = hashlib.sha256()
    root = Path(manifest.root)
    for s in sorted(manifest.samples, key=lambda e: e.path):
        h.update(s.path.encode())
        h.update(b"\0" + s.label.value.encode() + b"\0")
        data = (root / s.path).read_bytes()
        h.update(len(data).to_bytes(8, "little"))
        h.update(data)
    return h.hexdigest()


def _workers() -> int:
    try:
        n = int(os.environ.get("SHAPECAT_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _ordered_map(fn: Callable, jobs: Sequence):
    workers = min(_workers(), len(jobs))
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, jobs))


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except StageError:
        raise
    except ShapecatError as exc:
        raise StageError(name, exc) from exc


class FeatureSet:
    """Normalized descriptor matrices for a loaded dataset, computed once per atom."""

    def __init__(self, samples: Sequence[LabeledSample]):
        self.samples = list(samples)
        self.labels = [s.label for s in self.samples]
        self.atoms = {a: np.stack([extract(s.image, a).values for s in self.samples]) for a in ALL_ATOMS}

    def matrix(self, kind: DescriptorKind) -> np.ndarray:
        if isinstance(kind, Concat):
            return np.hstack([self.atoms[a] for a in kind.parts])
        return self.atoms[kind]


def load_features(config: ExperimentConfig):
    manifest = _stage("scan", scan_dataset, config.dataset_root, config.class_overrides)
    for name in manifest.skipped:
        log.warning("skipping unrecognized directory %s", name)
    samples = _stage("load", load_samples, manifest, config.threshold, Polarity(config.polarity))
    features = _stage("extract", FeatureSet, samples)
    return manifest, features


def auto_concat(clustering: dict[str, ScoreReport]) -> Concat:
    """Top four atomic descriptors by clustering f1, in canonical order."""
    ranked = sorted(ALL_ATOMS, key=lambda a: -clustering[a.value].f1)
    top = set(ranked[:4])
    return Concat(tuple(a for a in ALL_ATOMS if a in top))


def run_experiment(config: ExperimentConfig, stages=("cluster", "svm", "rbm"),
                   loaded=None) -> ExperimentReport:
    """Scan, preprocess and extract, then run the requested evaluation stages.

    Everything random is seeded from ``config``; two runs over the same
    files give identical reports.
    """
    manifest, fs = loaded or load_features(config)
    kinds = config.kinds
    labels = fs.labels
    if {lab for lab in labels} != set(ClassLabel):
        raise StageError("scan", ShapecatError("dataset must contain both Animal and Plant samples"))

    clustering: dict[str, ScoreReport] = {}
    if "cluster" in stages or config.concat_auto_top4:
        atoms_first = [k for k in kinds if not isinstance(k, Concat)]
        if config.concat_auto_top4:
            atoms_first = list(dict.fromkeys([*atoms_first, *ALL_ATOMS]))

        def cluster_job(kind):
            _, rep = kmeans_best_of(fs.matrix(kind), labels, 2, config.kmeans.n_init,
                                    config.kmeans.base_seed, POSITIVE)
            return rep

        reports = _stage("cluster", _ordered_map, cluster_job, atoms_first)
        clustering.update({str(k): r for k, r in zip(atoms_first, reports)})
        if config.concat_auto_top4:
            chosen = auto_concat(clustering)
            log.info("auto-selected concatenation %s", chosen)
            kinds = [chosen if isinstance(k, Concat) else k for k in kinds]
        concats = [k for k in kinds if isinstance(k, Concat)]
        reports = _stage("cluster", _ordered_map, cluster_job, concats)
        clustering.update({str(k): r for k, r in zip(concats, reports)})
        clustering = {str(k): clustering[str(k)] for k in kinds} if "cluster" in stages else {}

    swept = kinds
    if config.rbm.descriptors is not None:
        wanted = {str(parse_kind(d)) for d in config.rbm.descriptors}
        swept = [k for k in kinds if str(k) in wanted]

    svm_table: dict[str, tuple[float, float]] = {}
    svm_kinds = kinds if "svm" in stages else (swept if "rbm" in stages else [])
    if svm_kinds:
        def svm_job(kind):
            rep = repeated_eval(fs.matrix(kind), labels, POSITIVE, config.svm.n_runs,
                                config.svm.base_seed, config.svm.c, config.svm.epochs)
            return rep.mean, rep.std

        results = _stage("svm", _ordered_map, svm_job, svm_kinds)
        svm_table = {str(k): r for k, r in zip(svm_kinds, results)}

    curves: dict[str, list[SweepPoint]] = {}
    if "rbm" in stages:
        jobs = [(k, n) for k in swept for n in config.rbm.hidden_sweep]
        results = _stage("rbm", _ordered_map, lambda job: rbm_point(fs.matrix(job[0]), labels, job[1], config), jobs)
        for (k, _), point in zip(jobs, results):
            curves.setdefault(str(k), []).append(point)

    provenance = {
        "config_hash": config.hash(),
        "dataset_checksum": dataset_checksum(manifest),
        "tool_version": __version__,
        "n_samples": len(labels),
        "n_animal": sum(lab is ClassLabel.ANIMAL for lab in labels),
        "n_plant": sum(lab is ClassLabel.PLANT for lab in labels),
        "descriptors": [str(k) for k in kinds],
        "stages": [s for s in ("cluster", "svm", "rbm") if s in stages],
        "skipped_directories": manifest.skipped,
        "notes": NOTES,
    }
    if curves:
        # raw-feature accuracy drawn as the dashed baseline next to each curve
        provenance["rbm_baseline"] = {k: round(svm_table[k][0], 6) for k in curves}
    return ExperimentReport(clustering, svm_table if "svm" in stages else {}, curves, provenance)


def rbm_point(x: np.ndarray, labels, n_hidden: int, config: ExperimentConfig) -> SweepPoint:
    """SVM accuracy on RBM features for one hidden-unit count.

    Each of the ``n_runs`` splits trains its own RBM on the training part
    (seed ``rbm.seed + run``) and transforms both parts.
    """
    rc = config.rbm

    def transform(x_tr, x_te, run):
        hyper = RbmHyper(rc.lr, rc.batch, rc.epochs, rc.seed + run)
        model, _ = rbm_train(x_tr, n_hidden, hyper)
        return rbm_transform(model, x_tr), rbm_transform(model, x_te)

    rep = repeated_eval(x, labels, POSITIVE, config.svm.n_runs, config.svm.base_seed,
                        config.svm.c, config.svm.epochs, transform=transform)
    return SweepPoint(n_hidden, rep.mean, rep.std)


# ---------------------------------------------------------------------------
# output


def _write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def emit_report(report: ExperimentReport, output_dir) -> list[Path]:
    """Write CSV tables, the sweep chart and provenance; return the paths written."""
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ShapecatError(f"cannot create {out}: {exc}") from None
    written = []
    provenance = dict(report.provenance)

    if report.clustering_table:
        p = out / "clustering.csv"
        _write_csv(p, ["descriptor", "precision", "recall", "f1", "accuracy"],
                   [r.csv_row(k) for k, r in report.clustering_table.items()])
        written.append(p)
    if report.svm_table:
        p = out / "svm.csv"
        _write_csv(p, ["descriptor", "mean", "std"],
                   [[k, f"{m:.1f}", f"{s:.1f}"] for k, (m, s) in report.svm_table.items()])
        written.append(p)
    if report.rbm_curves:
        p = out / "rbm_sweep.csv"
        rows = [[k, pt.hidden, f"{pt.mean:.1f}", f"{pt.std:.1f}"]
                for k, pts in report.rbm_curves.items() for pt in pts]
        _write_csv(p, ["descriptor", "hidden_units", "mean", "std"], rows)
        svg = out / "rbm_sweep.svg"
        baseline = provenance.get("rbm_baseline", {})
        svg.write_text(sweep_svg(report.rbm_curves, baseline), encoding="utf-8")
        written += [p, svg]
    else:
        provenance["rbm_sweep"] = "omitted (no sweep results)"

    p = out / "provenance.json"
    p.write_text(json.dumps(provenance, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(p)
    return written


_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def sweep_svg(curves: dict[str, list[SweepPoint]], baseline: dict[str, float],
              width: int = 640, height: int = 400) -> str:
    """Static line chart: hidden units (log2 axis) against mean accuracy."""
    left, right, top, bottom = 60, 150, 20, 50
    pw, ph = width - left - right, height - top - bottom
    hs = sorted({pt.hidden for pts in curves.values() for pt in pts})
    ys = [pt.mean for pts in curves.values() for pt in pts] + [baseline[k] for k in curves if k in baseline]
    y_lo = max(0.0, np.floor(min(ys) / 5) * 5 - 5)
    y_hi = min(100.0, np.ceil(max(ys) / 5) * 5 + 5)
    lx = [float(np.log2(h)) for h in hs]
    x_lo, x_hi = min(lx), max(lx)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1, x_hi + 1

    def sx(h):
        return left + (np.log2(h) - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return top + (y_hi - v) / (y_hi - y_lo) * ph

    el = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for h in hs:
        x = sx(h)
        el.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 4}" stroke="black"/>')
        el.append(f'<text x="{x:.2f}" y="{top + ph + 16}" text-anchor="middle">{h}</text>')
    tick = y_lo
    while tick <= y_hi + 1e-9:
        y = sy(tick)
        el.append(f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        el.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">{tick:.0f}</text>')
        tick += 5
    el.append(f'<text x="{left + pw / 2:.2f}" y="{height - 12}" text-anchor="middle">hidden units</text>')
    el.append(f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" '
              f'transform="rotate(-90 16 {top + ph / 2:.2f})">mean accuracy (%)</text>')

    for i, (name, pts) in enumerate(curves.items()):
        color = _COLORS[i % len(_COLORS)]
        path = " ".join(f"{sx(p.hidden):.2f},{sy(p.mean):.2f}" for p in pts)
        el.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
        for p in pts:
            el.append(f'<circle cx="{sx(p.hidden):.2f}" cy="{sy(p.mean):.2f}" r="3" fill="{color}"/>')
        if name in baseline:
            y = sy(baseline[name])
            el.append(f'<line x1="{left}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" stroke="{color}" '
                      f'stroke-dasharray="5,4"/>')
        ly = top + 14 + 16 * i
        el.append(f'<line x1="{left + pw + 12}" y1="{ly - 4}" x2="{left + pw + 32}" y2="{ly - 4}" '
                  f'stroke="{color}" stroke-width="2"/>')
        el.append(f'<text x="{left + pw + 36}" y="{ly}">{name} (dashed: raw)</text>')
    el.append("</svg>")
    return "\n".join(el) + "\n"


def write_features(features: FeatureSet, kinds: Sequence[DescriptorKind], output_dir) -> list[Path]:
    """Per-kind feature CSVs plus one moments CSV over all kinds."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    moment_rows = []
    for kind in kinds:
        x = features.matrix(kind)
        tag = str(kind).strip("[]").replace(",", "")
        p = out / f"features_{tag}.csv"
        rows = []
        for s, row in zip(features.samples, x):
            rows.append([s.source_path, s.label.value, str(kind), *(format(v, ".9g") for v in row)])
            m = moments(row)
            moment_rows.append([s.source_path, s.label.value, str(kind),
                                *(format(v, ".9g") for v in (m.mean, m.variance, m.skewness, m.kurtosis))])
        _write_csv(p, ["path", "label", "kind", *(f"v{i}" for i in range(x.shape[1]))], rows)
        written.append(p)
    p = out / "moments.csv"
    _write_csv(p, ["path", "label", "kind", "mean", "variance", "skewness", "kurtosis"], moment_rows)
    written.append(p)
    return written


# ---------------------------------------------------------------------------
# synthetic fixture dataset

SYNTH_ANIMALS = ("elephant", "llama", "rhino", "okapi", "leopards")
SYNTH_PLANTS = ("lotus", "sunflower", "strawberry", "bonsai", "water_lilly")


def make_synthetic_dataset(root, n_per_class: int = 50, seed: int = 0, size: int = 100) -> DatasetManifest:
    """Write stick figures as animals and ellipses as plants (P5 PGM, white on black)."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    for i in range(n_per_class):
        sub = SYNTH_ANIMALS[i % len(SYNTH_ANIMALS)]
        img = synth_silhouette(StickFigure(int(rng.integers(2 ** 31))), size)
        (root / sub).mkdir(parents=True, exist_ok=True)
        (root / sub / f"animal_{i:04d}.pgm").write_bytes(encode_pgm(img))
    for i in range(n_per_class):
        sub = SYNTH_PLANTS[i % len(SYNTH_PLANTS)]
        s = size / 100.0
        # upright and narrower than any stick-figure body
        spec = Ellipse(s * rng.uniform(44, 56), s * rng.uniform(44, 56),
                       s * rng.uniform(10, 20), s * rng.uniform(25, 40))
        (root / sub).mkdir(parents=True, exist_ok=True)
        (root / sub / f"plant_{i:04d}.pgm").write_bytes(encode_pgm(synth_silhouette(spec, size)))
    return scan_dataset(root)


__all__ = [
    "ConfigError", "ExperimentConfig", "ExperimentReport", "FeatureSet", "HVTB", "Atom",
    "emit_report", "load_features", "make_synthetic_dataset", "run_experiment", "write_features",
]
