"""Datasets: IDX ingestion, label splits, synthetic blobs, image rotation.

Every dataset carries samples normalized to [-1, 1] (matching the tanh
range of the generators) and a declared half-open label range. Loaders and
generators are deterministic per seed.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DataRangeError,
    FormatError,
    ParameterError,
    ShapeError,
)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass
class LabeledDataset:
    """Samples in d-dimensional [-1, 1] space with integer labels.

    ``label_range`` is half-open: every label satisfies lo <= y < hi.
    ``label_map`` records an old->new relabeling when a split re-indexed
    labels for contiguity; None means labels are original.
    """

    samples: np.ndarray
    labels: np.ndarray
    label_range: tuple[int, int]
    label_map: dict[int, int] | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.samples.ndim != 2:
            raise ShapeError("samples must be a [n, d] matrix")
        if self.labels.ndim != 1 or self.labels.shape[0] != self.samples.shape[0]:
            raise ShapeError("labels must be a vector matching sample count")
        lo, hi = self.label_range
        if self.labels.size and (self.labels.min() < lo or self.labels.max() >= hi):
            raise DataError(
                f"labels fall outside declared range [{lo}, {hi})")
        if self.samples.size and (self.samples.min() < -1.0 - 1e-9
                                  or self.samples.max() > 1.0 + 1e-9):
            raise DataRangeError("sample values must lie in [-1, 1]")

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1]

    def subset(self, indices) -> "LabeledDataset":
        return LabeledDataset(self.samples[indices], self.labels[indices],
                              self.label_range, self.label_map)

    def class_counts(self) -> dict[int, int]:
        values, counts = np.unique(self.labels, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}


def _read_exact(f, size: int, path) -> bytes:
    buf = f.read(size)
    if len(buf) != size:
        raise OSError(f"truncated IDX file: {path}")
    return buf


def _open_maybe_gzip(path: Path):
    with open(path, "rb") as probe:
        magic = probe.read(2)
    if magic == b"\x1f\x8b":
        return gzip.open(path, "rb")
    return open(path, "rb")


def load_idx(images_path, labels_path) -> LabeledDataset:
    """Parse an IDX image/label file pair (the MNIST on-disk format).

    Big-endian magics 0x00000803 (images) and 0x00000801 (labels); pixels
    map linearly from [0, 255] to [-1, 1]. Gzipped files are detected by
    their leading bytes.
    """
    images_path, labels_path = Path(images_path), Path(labels_path)
    with _open_maybe_gzip(images_path) as f:
        magic, count, rows, cols = struct.unpack(
            ">IIII", _read_exact(f, 16, images_path))
        if magic != IDX_IMAGES_MAGIC:
            raise FormatError(
                f"bad image magic 0x{magic:08x} in {images_path}")
        raw = _read_exact(f, count * rows * cols, images_path)
    pixels = np.frombuffer(raw, dtype=np.uint8).astype(np.float64)
    samples = (pixels * 2.0 / 255.0 - 1.0).reshape(count, rows * cols)

    with _open_maybe_gzip(labels_path) as f:
        magic, label_count = struct.unpack(
            ">II", _read_exact(f, 8, labels_path))
        if magic != IDX_LABELS_MAGIC:
            raise FormatError(
                f"bad label magic 0x{magic:08x} in {labels_path}")
        raw = _read_exact(f, label_count, labels_path)
    labels = np.frombuffer(raw, dtype=np.uint8).astype(np.int64)

    if label_count != count:
        raise DataError(f"{count} images but {label_count} labels")
    hi = int(labels.max()) + 1 if labels.size else 1
    return LabeledDataset(samples, labels, (0, hi))


def save_npz(dataset: LabeledDataset, path) -> Path:
    """Store a dataset as an .npz archive (the CLI's file interchange)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, samples=dataset.samples, labels=dataset.labels,
             label_lo=dataset.label_range[0], label_hi=dataset.label_range[1])
    return path


def load_npz(path) -> LabeledDataset:
    with np.load(Path(path)) as z:
        return LabeledDataset(z["samples"], z["labels"],
                              (int(z["label_lo"]), int(z["label_hi"])))


def split_by_labels(dataset: LabeledDataset, base_labels,
                    increment_labels) -> tuple[LabeledDataset, LabeledDataset]:
    """Partition a dataset into base/increment halves by label membership.

    Base labels are re-indexed to 0..j-1 and increment labels to j..c-1
    (sorted order) only when they are not already contiguous there; any
    applied map is recorded on the returned dataset. Samples with labels in
    neither set are dropped.
    """
    base_labels = sorted(set(int(v) for v in base_labels))
    increment_labels = sorted(set(int(v) for v in increment_labels))
    if set(base_labels) & set(increment_labels):
        raise ConfigError("base and increment label sets overlap")

    j = len(base_labels)
    c = j + len(increment_labels)
    base_map = {old: new for new, old in enumerate(base_labels)}
    inc_map = {old: j + k for k, old in enumerate(increment_labels)}

    def carve(labels_wanted, mapping, lo, hi):
        mask = np.isin(dataset.labels, labels_wanted)
        samples = dataset.samples[mask]
        labels = dataset.labels[mask]
        identity = all(old == new for old, new in mapping.items())
        if not identity and labels.size:
            lut = np.full(max(mapping) + 1, -1, dtype=np.int64)
            for old, new in mapping.items():
                lut[old] = new
            labels = lut[labels]
        return LabeledDataset(samples, labels, (lo, hi),
                              None if identity else dict(mapping))

    return (carve(base_labels, base_map, 0, j),
            carve(increment_labels, inc_map, j, c))


def synth_blobs(num_classes: int, d: int, per_class: int, separation: float,
                seed: int, sigma: float = 0.08) -> LabeledDataset:
    """Gaussian class blobs at deterministic centers, clipped to [-1, 1].

    Centers are scaled rows of a seeded orthonormal basis, staggered so only
    one pair sits at the minimum distance ``separation * sigma``; at
    separation >= 6 the classes are linearly separable to ~99.7%.
    """
    if separation < 0:
        raise ParameterError("separation must be >= 0")
    if num_classes > d:
        raise ParameterError("blob construction needs num_classes <= d")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xB10B]))
    basis, _ = np.linalg.qr(rng.standard_normal((d, d)))
    stagger = 1.0 + np.arange(num_classes) / (2.0 * num_classes)
    centers = basis[:num_classes] * (separation * sigma / np.sqrt(2.0)
                                     * stagger[:, None])

    labels = np.repeat(np.arange(num_classes), per_class)
    noise = rng.standard_normal((labels.size, d)) * sigma
    samples = np.clip(centers[labels] + noise, -1.0, 1.0)
    order = rng.permutation(labels.size)
    return LabeledDataset(samples[order], labels[order], (0, num_classes))


def rotate_digits(dataset: LabeledDataset, angle_policy="uniform",
                  seed: int = 0, fill: float = -1.0) -> LabeledDataset:
    """Rotate each square image by a random (or fixed) angle, bilinearly.

    ``angle_policy`` is either the string "uniform" (per-image angle drawn
    from [0, 2pi)) or a fixed angle in radians applied to every image.
    Labels are unchanged; out-of-frame pixels take ``fill``.
    """
    side = int(round(np.sqrt(dataset.d)))
    if side * side != dataset.d:
        raise ShapeError(f"samples of width {dataset.d} are not square images")
    if angle_policy == "uniform":
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x07]))
        angles = rng.uniform(0.0, 2.0 * np.pi, size=dataset.n)
    else:
        angles = np.full(dataset.n, float(angle_policy))

    center = (side - 1) / 2.0
    grid_r, grid_c = np.meshgrid(np.arange(side), np.arange(side),
                                 indexing="ij")
    out = np.empty_like(dataset.samples)
    images = dataset.samples.reshape(dataset.n, side, side)
    for i in range(dataset.n):
        cos, sin = np.cos(angles[i]), np.sin(angles[i])
        # inverse map: source coordinates for each output pixel
        dr, dc = grid_r - center, grid_c - center
        src_r = cos * dr + sin * dc + center
        src_c = -sin * dr + cos * dc + center
        out[i] = _bilinear(images[i], src_r, src_c, fill).reshape(-1)
    return LabeledDataset(np.clip(out, -1.0, 1.0), dataset.labels.copy(),
                          dataset.label_range, dataset.label_map)


def _bilinear(img: np.ndarray, r: np.ndarray, c: np.ndarray,
              fill: float) -> np.ndarray:
    side = img.shape[0]
    r0 = np.floor(r).astype(int)
    c0 = np.floor(c).astype(int)
    fr, fc = r - r0, c - c0

    def at(rr, cc):
        valid = (rr >= 0) & (rr < side) & (cc >= 0) & (cc < side)
        vals = np.full(rr.shape, fill)
        vals[valid] = img[rr[valid], cc[valid]]
        return vals

    top = at(r0, c0) * (1 - fc) + at(r0, c0 + 1) * fc
    bottom = at(r0 + 1, c0) * (1 - fc) + at(r0 + 1, c0 + 1) * fc
    return top * (1 - fr) + bottom * fr


def stratified_split(dataset: LabeledDataset, test_fraction: float,
                     seed: int) -> tuple[LabeledDataset, LabeledDataset]:
    """Deterministic per-class train/test split."""
    if not 0.0 < test_fraction < 1.0:
        raise ParameterError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5B]))
    train_idx, test_idx = [], []
    for label in np.unique(dataset.labels):
        idx = np.flatnonzero(dataset.labels == label)
        idx = idx[rng.permutation(idx.size)]
        cut = max(1, int(round(idx.size * test_fraction)))
        test_idx.append(idx[:cut])
        train_idx.append(idx[cut:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return dataset.subset(train_idx), dataset.subset(test_idx)


def load_digits_dataset() -> LabeledDataset:
    """The packaged 8x8 handwritten-digits set (10 classes, 1797 samples).

    Pixel intensities 0..16 map linearly to [-1, 1]. This is the offline
    stand-in for MNIST-scale experiments; real MNIST IDX files plug into
    :func:`load_idx` when available.
    """
    ref = resources.files("phantomnet") / "datasets" / "digits_8x8.npz"
    with ref.open("rb") as f, np.load(f) as z:
        samples = z["images"].astype(np.float64) / 8.0 - 1.0
        labels = z["labels"].astype(np.int64)
    return LabeledDataset(samples, labels, (0, 10))


def select_classes(dataset: LabeledDataset, classes,
                   remap_contiguous: bool = False) -> LabeledDataset:
    """Keep only the given classes; original label ids are preserved unless
    ``remap_contiguous`` re-indexes them to 0..k-1 (map recorded)."""
    classes = sorted(set(int(v) for v in classes))
    mask = np.isin(dataset.labels, classes)
    samples, labels = dataset.samples[mask], dataset.labels[mask]
    if remap_contiguous:
        mapping = {old: new for new, old in enumerate(classes)}
        lut = np.full(max(classes) + 1, -1, dtype=np.int64)
        for old, new in mapping.items():
            lut[old] = new
        labels = lut[labels] if labels.size else labels
        return LabeledDataset(samples, labels, (0, len(classes)), mapping)
    lo, hi = min(classes), max(classes) + 1
    return LabeledDataset(samples, labels, (lo, hi), dataset.label_map)


def concat(datasets: list[LabeledDataset]) -> LabeledDataset:
    """Concatenate datasets; the declared range is the union envelope."""
    if not datasets:
        raise DataError("nothing to concatenate")
    samples = np.concatenate([ds.samples for ds in datasets])
    labels = np.concatenate([ds.labels for ds in datasets])
    lo = min(ds.label_range[0] for ds in datasets)
    hi = max(ds.label_range[1] for ds in datasets)
    return LabeledDataset(samples, labels, (lo, hi))
