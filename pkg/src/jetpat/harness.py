"""Datasets, image preparation and cross-validated experiments.

All randomness derives from one integer seed through
:class:`numpy.random.SeedSequence` spawn keys:

* ``(0,)`` fold assignment
* ``(1, i)`` noise for image ``i``
* ``(2, c)`` spectrum of synthetic class ``c``
* ``(3, c, s)`` rotation and brightness of synthetic sample ``s`` of class ``c``
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .classify import fit_nsc, nnc_predict_many, nsc_predict_many, sqrt_preprocess
from .encoder import FeatureConfig, extract_feature, lbp_feature
from .storage import load_image, read_feature_cache, write_feature_cache

__all__ = [
    "DataError",
    "Dataset",
    "ExperimentConfig",
    "ExperimentReport",
    "add_awgn",
    "evaluate_features",
    "extract_dataset_features",
    "generate_synthetic",
    "load_dataset",
    "load_directory",
    "load_outex",
    "run_experiment",
    "save_dataset",
    "standardize",
    "stratified_kfold",
]

log = logging.getLogger(__name__)

TARGET_MEAN = 128.0
TARGET_STD = 20.0
IMAGE_SUFFIXES = {".png", ".pgm", ".ppm", ".bmp", ".tif", ".tiff", ".jpg", ".jpeg", ".ras"}
SNR_DEFINITION = ("SNR = 10 log10(var(standardized image) / noise variance); "
                  "noise added after standardization, not re-standardized")


class DataError(RuntimeError):
    """Dataset ingestion or per-image processing failed."""


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def standardize(image) -> np.ndarray:
    """Affine rescale to mean 128 and standard deviation 20.

    A constant image becomes constant 128.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.size == 0:
        raise ValueError("cannot standardize an empty image")
    mean = image.mean()
    std = image.std()
    if std == 0:
        return np.full_like(image, TARGET_MEAN)
    return (image - mean) * (TARGET_STD / std) + TARGET_MEAN


def add_awgn(image, snr_db: float, seed=0) -> np.ndarray:
    """Add white Gaussian noise with variance ``var(image) / 10**(snr_db/10)``.

    ``seed`` is an int or a :class:`numpy.random.Generator`.
    """
    if not math.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")
    image = np.asarray(image, dtype=np.float64)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    noise_std = math.sqrt(image.var() / 10.0 ** (snr_db / 10.0))
    return image + rng.normal(0.0, noise_std, size=image.shape)


def stratified_kfold(labels, k: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Stratified ``k``-fold split as a list of ``(train, test)`` index arrays.

    Each class is shuffled and dealt round-robin into the folds; the dealing
    position carries over between classes so fold sizes stay within one.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    labels = list(labels)
    rng = _rng(seed, 0)
    fold_of = np.empty(len(labels), dtype=np.int64)
    start = 0
    for label in sorted(set(labels)):
        idx = np.array([i for i, lab in enumerate(labels) if lab == label])
        if len(idx) < k:
            raise ValueError(f"class {label!r} has {len(idx)} samples, fewer than k={k}")
        idx = rng.permutation(idx)
        fold_of[idx] = (start + np.arange(len(idx))) % k
        start = (start + len(idx)) % k
    everything = np.arange(len(labels))
    return [(everything[fold_of != f], everything[fold_of == f]) for f in range(k)]


@dataclass
class Dataset:
    """Labelled images, either on disk (``paths`` relative to ``root``) or in memory."""

    paths: list[str]
    labels: list[str]
    layout: str
    root: Path | None = None
    images: list[np.ndarray] | None = None
    split: tuple[np.ndarray, np.ndarray] | None = None
    tag: str = ""

    def __post_init__(self):
        if len(self.paths) != len(self.labels):
            raise ValueError("paths and labels differ in length")
        if self.images is not None and len(self.images) != len(self.paths):
            raise ValueError("images and paths differ in length")

    def __len__(self) -> int:
        return len(self.paths)

    @property
    def classes(self) -> list[str]:
        return sorted(set(self.labels))

    def image(self, i: int) -> np.ndarray:
        if self.images is not None:
            return self.images[i]
        return load_image(self.root / self.paths[i])

    def identity(self) -> str:
        """Stable string naming where the data comes from, for cache keys."""
        if self.tag:
            return self.tag
        return str(self.root.resolve()) if self.root is not None else self.layout

    def with_labels(self, labels) -> "Dataset":
        return replace(self, labels=list(labels))


def _check_classes(labels) -> None:
    if len(set(labels)) < 2:
        raise DataError(f"dataset needs at least 2 classes, found {len(set(labels))}")


def load_directory(root) -> Dataset:
    """One sub-directory per class; every image file inside is a sample."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset directory not found: {root}")
    paths, labels = [], []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for f in sorted(class_dir.iterdir()):
            if f.suffix.lower() in IMAGE_SUFFIXES and f.is_file():
                paths.append(f.relative_to(root).as_posix())
                labels.append(class_dir.name)
    _check_classes(labels)
    return Dataset(paths, labels, "directory", root=root)


def _read_outex_list(path: Path) -> list[tuple[str, str]]:
    lines = [ln.split() for ln in path.read_text().splitlines() if ln.strip()]
    count = int(lines[0][0])
    rows = [(ln[0], ln[1]) for ln in lines[1:1 + count]]
    if len(rows) != count:
        raise DataError(f"{path}: header announces {count} entries, found {len(rows)}")
    return rows


def load_outex(root, problem: str = "000") -> Dataset:
    """Outex test suite: ``<root>/<problem>/{train,test}.txt`` and ``<root>/images``.

    Each list file starts with an entry count followed by ``<image> <class>``
    lines. ``classes.txt`` (optional) maps class numbers to names. The suite's
    train/test partition is kept in ``Dataset.split``.
    """
    root = Path(root)
    pdir = root / problem
    names = {}
    if (pdir / "classes.txt").is_file():
        names = {num: name for name, num in _read_outex_list(pdir / "classes.txt")}
    paths, labels = [], []
    train_idx, test_idx = [], []
    for list_name, bucket in (("train.txt", train_idx), ("test.txt", test_idx)):
        lst = pdir / list_name
        if not lst.is_file():
            raise DataError(f"Outex list file not found: {lst}")
        for image, cls in _read_outex_list(lst):
            bucket.append(len(paths))
            paths.append(f"images/{image}")
            labels.append(names.get(cls, cls))
    _check_classes(labels)
    return Dataset(paths, labels, "outex", root=root,
                   split=(np.array(train_idx), np.array(test_idx)))


def load_dataset(root, layout: str = "auto", problem: str = "000") -> Dataset:
    """Load ``root`` as an Outex suite if its index files exist, else by directory."""
    root = Path(root)
    if layout == "outex" or (layout == "auto" and (root / problem / "train.txt").is_file()):
        return load_outex(root, problem)
    if layout in ("auto", "directory"):
        return load_directory(root)
    raise ValueError(f"unknown layout {layout!r}")


SYNTH_FAMILIES = ("grating", "checker", "noise")


def _synth_class(c: int) -> tuple[str, int]:
    family, level = SYNTH_FAMILIES[c % 3], c // 3
    if family != "noise" and level >= 3:
        family = "noise"
    return family, level


def _noise_spectrum(seed: int, c: int, level: int, n_waves: int = 32):
    rng = _rng(seed, 2, c)
    centre = 0.06 * 1.6 ** (level % 4)
    freq = rng.uniform(0.75 * centre, 1.25 * centre, n_waves)
    orient = rng.uniform(0.0, math.pi, n_waves)
    phase = rng.uniform(0.0, 2 * math.pi, n_waves)
    return freq * np.cos(orient), freq * np.sin(orient), phase


def _render(family: str, level: int, size: int, angle: float, spectrum=None,
            pivot=(0.0, 0.0)) -> np.ndarray:
    half = (size - 1) / 2.0
    y, x = np.mgrid[0:size, 0:size].astype(np.float64) - half
    x -= pivot[0]
    y -= pivot[1]
    ca, sa = math.cos(angle), math.sin(angle)
    u = ca * x + sa * y + pivot[0]
    v = -sa * x + ca * y + pivot[1]
    if family == "grating":
        return np.sin(2 * math.pi * u / (16.0 / 2 ** level))
    if family == "checker":
        period = 4.0 * 2 ** level
        return np.tanh(3.0 * np.sin(math.pi * u / period) * np.sin(math.pi * v / period))
    fx, fy, phase = spectrum
    waves = np.cos(2 * math.pi * (u[..., None] * fx + v[..., None] * fy) + phase)
    return waves.sum(axis=-1) / math.sqrt(len(fx) / 2.0)


def generate_synthetic(classes: int = 6, samples_per_class: int = 20, size: int = 64,
                       rotations=(0, 15, 30, 45, 60, 75, 90), brightness_jitter: float = 20.0,
                       seed: int = 42) -> Dataset:
    """Procedural texture classes rendered at random rotations and brightness.

    Classes cycle through sinusoid gratings, smoothed checkerboards and
    band-limited noise (a fixed random sum of plane waves per class), each
    family at increasing frequency. Gratings of classes 0 and 3 differ in
    frequency by a factor of two. ``rotations`` are in degrees; the brightness
    offset is uniform in ``[-brightness_jitter, brightness_jitter]``.
    """
    if classes < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")
    if size < 16:
        raise ValueError(f"size {size} is too small for a texture sample")
    if samples_per_class < 1:
        raise ValueError("samples_per_class must be >= 1")
    rotations = tuple(float(r) for r in rotations) or (0.0,)
    paths, labels, images = [], [], []
    for c in range(classes):
        family, level = _synth_class(c)
        spectrum = _noise_spectrum(seed, c, level) if family == "noise" else None
        label = f"c{c:02d}_{family}{level}"
        for s in range(samples_per_class):
            rng = _rng(seed, 3, c, s)
            angle = math.radians(rotations[rng.integers(len(rotations))])
            offset = rng.uniform(-brightness_jitter, brightness_jitter) if brightness_jitter else 0.0
            pivot = rng.uniform(-size, size, 2)
            img = 128.0 + 40.0 * _render(family, level, size, angle, spectrum, pivot) + offset
            paths.append(f"{label}/{s:04d}.png")
            labels.append(label)
            images.append(img)
    tag = (f"synthetic:classes={classes},n={samples_per_class},size={size},"
           f"rot={list(rotations)},jitter={brightness_jitter},seed={seed}")
    return Dataset(paths, labels, "synthetic", images=images, tag=tag)


def save_dataset(dataset: Dataset, out_dir) -> Path:
    """Write a dataset as 8-bit PNGs in class-per-directory layout."""
    from PIL import Image

    out_dir = Path(out_dir)
    for i, rel in enumerate(dataset.paths):
        dest = out_dir / rel
        dest.parent.mkdir(parents=True, exist_ok=True)
        img = np.clip(np.rint(dataset.image(i)), 0, 255).astype(np.uint8)
        Image.fromarray(img).save(dest)
    return out_dir


@dataclass(frozen=True)
class ExperimentConfig:
    sigma: float = 1.0
    radius: float = 1.0
    neighbors: int = 8
    include_zeroth: bool = False
    mapping: str = "uniform"
    interpolation: str = "bilinear"
    descriptor: str = "ljp"
    classifier: str = "nsc"
    k: int = 10
    seed: int = 0
    snr_db: float | None = None
    nsc_dim: float | int = 0.99
    protocol: str = "kfold"
    threads: int = 1
    cache_dir: str | None = None

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.snr_db is not None and not math.isfinite(self.snr_db):
            raise ValueError(f"snr_db must be finite, got {self.snr_db}")
        if self.classifier not in ("nnc", "nsc"):
            raise ValueError(f"classifier must be 'nnc' or 'nsc', got {self.classifier!r}")
        if self.descriptor not in ("ljp", "lbp"):
            raise ValueError(f"descriptor must be 'ljp' or 'lbp', got {self.descriptor!r}")
        if self.protocol not in ("kfold", "suite"):
            raise ValueError(f"protocol must be 'kfold' or 'suite', got {self.protocol!r}")

    @property
    def feature_config(self) -> FeatureConfig:
        return FeatureConfig(sigma=self.sigma, radius=self.radius, neighbors=self.neighbors,
                             include_zeroth=self.include_zeroth, mapping=self.mapping,
                             interpolation=self.interpolation)

    def feature_key(self, dataset: Dataset) -> str:
        """Fingerprint of everything a cached feature depends on."""
        blob = json.dumps({
            "features": asdict(self.feature_config),
            "descriptor": self.descriptor,
            "snr_db": self.snr_db,
            "noise_seed": self.seed if self.snr_db is not None else None,
            "data": dataset.identity(),
        }, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class ExperimentReport:
    config: dict
    protocol: str
    classes: list[str]
    fold_accuracies: list[float]
    mean_accuracy: float
    std_accuracy: float
    confusion: list[list[int]]
    n_samples: int
    feature_dim: int
    extract_seconds_per_image: float = 0.0
    match_seconds_per_query: float = 0.0
    notes: list[str] = field(default_factory=list)

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("extract_seconds_per_image")
            d.pop("match_seconds_per_query")
        return d

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True)

    def to_text(self, timing: bool = True) -> str:
        lines = [f"protocol      {self.protocol}",
                 f"samples       {self.n_samples}",
                 f"feature dim   {self.feature_dim}",
                 f"accuracy      {100 * self.mean_accuracy:.2f} % "
                 f"+/- {100 * self.std_accuracy:.2f}"]
        if timing:
            lines.append(f"extract       {self.extract_seconds_per_image:.4f} s/image")
            lines.append(f"match         {self.match_seconds_per_query:.6f} s/query")
        lines.append("")
        lines.append("fold  accuracy")
        for i, a in enumerate(self.fold_accuracies):
            lines.append(f"{i:>4}  {100 * a:8.2f}")
        lines.append("")
        width = max(len(c) for c in self.classes)
        lines.append("confusion (rows true, columns predicted)")
        for cls, row in zip(self.classes, self.confusion):
            lines.append(f"{cls:<{width}}  " + " ".join(f"{v:>4}" for v in row))
        lines.append("")
        lines.append("config")
        for key in sorted(self.config):
            lines.append(f"  {key:<16}{self.config[key]}")
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines)


def _prepare(dataset: Dataset, i: int, config: ExperimentConfig) -> np.ndarray:
    img = standardize(dataset.image(i))
    if config.snr_db is not None:
        img = add_awgn(img, config.snr_db, _rng(config.seed, 1, i))
    return img


def _describe(dataset: Dataset, i: int, config: ExperimentConfig) -> np.ndarray:
    try:
        img = _prepare(dataset, i, config)
        if config.descriptor == "lbp":
            return lbp_feature(img, config.feature_config)
        return extract_feature(img, config.feature_config)
    except Exception as exc:
        raise DataError(f"{dataset.paths[i]}: {exc}") from exc


def _workers(threads: int) -> int:
    if threads == 0:
        return os.cpu_count() or 1
    return max(1, threads)


def _cache_dir(config: ExperimentConfig) -> Path | None:
    d = config.cache_dir or os.environ.get("JETPAT_CACHE_DIR")
    return Path(d) if d else None


def extract_dataset_features(dataset: Dataset, config: ExperimentConfig):
    """Feature matrix for every sample plus mean seconds per extracted image.

    Features are read from and written back to the cache directory
    (``config.cache_dir`` or ``$JETPAT_CACHE_DIR``) when one is set. The
    seconds figure is 0.0 when everything came from the cache.
    """
    key = config.feature_key(dataset)
    cache_dir = _cache_dir(config)
    cache_file = cache_dir / f"features-{key}.bin" if cache_dir else None
    cached = {}
    if cache_file is not None and cache_file.is_file():
        for rel, label, fp, values in read_feature_cache(cache_file):
            if fp == key:
                cached[(rel, label)] = values
    rows: list[np.ndarray | None] = [cached.get((p, lab)) for p, lab in
                                     zip(dataset.paths, dataset.labels)]
    missing = [i for i, r in enumerate(rows) if r is None]
    seconds = 0.0
    if missing:
        t0 = time.perf_counter()
        n_workers = _workers(config.threads)
        if n_workers > 1:
            with ThreadPoolExecutor(n_workers) as pool:
                computed = list(pool.map(lambda i: _describe(dataset, i, config), missing))
        else:
            computed = [_describe(dataset, i, config) for i in missing]
        seconds = (time.perf_counter() - t0) / len(missing)
        for i, v in zip(missing, computed):
            rows[i] = v
        if cache_file is not None:
            cache_dir.mkdir(parents=True, exist_ok=True)
            write_feature_cache(cache_file, ((p, lab, key, v) for p, lab, v in
                                             zip(dataset.paths, dataset.labels, rows)))
            log.info("wrote %d features to %s", len(rows), cache_file)
    return np.vstack(rows), seconds


def _classify(config: ExperimentConfig, train_x, train_y, test_x) -> list:
    if config.classifier == "nnc":
        return nnc_predict_many(train_x, train_y, test_x)
    models = fit_nsc(sqrt_preprocess(train_x), train_y, config.nsc_dim)
    return nsc_predict_many(models, sqrt_preprocess(test_x))


def evaluate_features(features, labels, config: ExperimentConfig, folds):
    """Fold accuracies, confusion matrix and seconds per query for given folds."""
    labels = list(labels)
    classes = sorted(set(labels))
    index = {c: i for i, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    accuracies = []
    match_time, n_queries = 0.0, 0
    for train, test in folds:
        train_y = [labels[i] for i in train]
        t0 = time.perf_counter()
        pred = _classify(config, features[train], train_y, features[test])
        match_time += time.perf_counter() - t0
        n_queries += len(test)
        hits = 0
        for i, p in zip(test, pred):
            confusion[index[labels[i]], index[p]] += 1
            hits += labels[i] == p
        accuracies.append(hits / len(test))
    return accuracies, confusion, match_time / max(n_queries, 1)


def run_experiment(dataset: Dataset, config: ExperimentConfig) -> ExperimentReport:
    """Standardize, optionally add noise, extract features and cross-validate."""
    _check_classes(dataset.labels)
    if config.protocol == "suite":
        if dataset.split is None:
            raise DataError("protocol 'suite' needs a dataset with a predefined train/test split")
        folds = [dataset.split]
        protocol = "suite-defined train/test split"
    else:
        folds = stratified_kfold(dataset.labels, config.k, config.seed)
        protocol = f"stratified {config.k}-fold cross-validation"
    features, extract_s = extract_dataset_features(dataset, config)
    accuracies, confusion, match_s = evaluate_features(features, dataset.labels, config, folds)
    notes = ["accuracy std is the population std over folds"]
    if config.snr_db is not None:
        notes.append(SNR_DEFINITION)
    cfg = asdict(config)
    cfg.pop("cache_dir")
    cfg.pop("threads")
    return ExperimentReport(
        config=cfg,
        protocol=protocol,
        classes=dataset.classes,
        fold_accuracies=[float(a) for a in accuracies],
        mean_accuracy=float(np.mean(accuracies)),
        std_accuracy=float(np.std(accuracies)),
        confusion=confusion.tolist(),
        n_samples=len(dataset),
        feature_dim=int(features.shape[1]),
        extract_seconds_per_image=extract_s,
        match_seconds_per_query=match_s,
        notes=notes,
    )
