"""Synthetic classification data, Dirichlet partitioning, and CSV I/O.

Labels are 1-based class indices. Features live in [-1, 1] so that a
Tanh-headed generator shares the data range.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataFormatError, ShapeError
from .seeding import derive_rng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dataset:
    samples: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "samples", np.ascontiguousarray(self.samples, dtype=np.float64))
        object.__setattr__(self, "labels", np.ascontiguousarray(self.labels, dtype=np.int64))
        if self.samples.ndim != 2 or self.samples.shape[0] < 1 or self.samples.shape[1] < 1:
            raise ShapeError(f"samples must be a non-empty (N, d) array, got {self.samples.shape}")
        if self.labels.shape != (self.samples.shape[0],):
            raise ShapeError(
                f"labels length {self.labels.shape} does not match N={self.samples.shape[0]}"
            )
        if self.labels.min() < 1 or self.labels.max() > self.num_classes:
            raise ShapeError(
                f"labels must lie in [1..{self.num_classes}], got "
                f"[{self.labels.min()}..{self.labels.max()}]"
            )

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.samples[idx], self.labels[idx], self.num_classes)


@dataclass(frozen=True)
class PartitionSpec:
    num_clients: int
    alpha: float
    seed: int

    def __post_init__(self):
        if self.num_clients < 1:
            raise ConfigError(f"num_clients must be >= 1, got {self.num_clients}")
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")


def _class_means(num_classes: int, dim: int) -> np.ndarray:
    """Deterministic lattice of distinct corner points in {-1,+1}^dim.

    Class c gets the binary pattern of c-1 tiled cyclically across features.
    """
    nbits = max(1, int(np.ceil(np.log2(num_classes))))
    if dim < nbits:
        raise ConfigError(
            f"dimension {dim} too small to separate {num_classes} classes "
            f"(needs at least {nbits})"
        )
    means = np.empty((num_classes, dim))
    for c in range(num_classes):
        bits = np.array([(c >> (j % nbits)) & 1 for j in range(dim)])
        means[c] = 2.0 * bits - 1.0
    return means


def make_synthetic(num_classes: int, dim: int, n_per_class: int, spread: float, seed: int) -> Dataset:
    """Gaussian clusters of width ``spread`` around per-class lattice means.

    Exactly ``n_per_class`` samples per class, row order shuffled; features are
    rescaled by the global max-abs (when it exceeds 1) and clamped to [-1, 1].
    """
    if num_classes < 2 or dim < 2:
        raise ConfigError(f"need num_classes >= 2 and dim >= 2, got {num_classes}, {dim}")
    if n_per_class < 1:
        raise ConfigError(f"n_per_class must be >= 1, got {n_per_class}")
    if spread < 0:
        raise ConfigError(f"spread must be non-negative, got {spread}")
    rng = derive_rng(seed, "make_synthetic")
    means = _class_means(num_classes, dim)
    x = np.repeat(means, n_per_class, axis=0)
    x = x + spread * rng.standard_normal(x.shape)
    y = np.repeat(np.arange(1, num_classes + 1), n_per_class)
    peak = np.abs(x).max()
    if peak > 1.0:
        x = x / peak
    x = np.clip(x, -1.0, 1.0)
    order = rng.permutation(x.shape[0])
    return Dataset(x[order], y[order], num_classes)


def dirichlet_partition(ds: Dataset, spec: PartitionSpec) -> list[Dataset]:
    """Split ``ds`` into ``spec.num_clients`` shards, class by class, with
    per-class proportions drawn from Dir(alpha).

    Largest-remainder rounding keeps the split exact (every sample lands in
    exactly one shard). A client that would end up empty is given one sample
    from the largest shard, which is logged.
    """
    K = spec.num_clients
    if K > ds.size:
        raise ConfigError(f"cannot give {K} clients >= 1 sample each from {ds.size} samples")
    rng = derive_rng(spec.seed, "partition")
    shards: list[list[np.ndarray]] = [[] for _ in range(K)]
    for c in range(1, ds.num_classes + 1):
        idx = np.flatnonzero(ds.labels == c)
        if idx.size == 0:
            raise ConfigError(f"class {c} has no samples")
        idx = rng.permutation(idx)
        props = rng.dirichlet(np.full(K, spec.alpha))
        counts = _largest_remainder(props, idx.size)
        stops = np.cumsum(counts)
        start = 0
        for k in range(K):
            shards[k].append(idx[start:stops[k]])
            start = stops[k]
    parts = [np.concatenate(s) for s in shards]
    _ensure_nonempty(parts)
    return [ds.subset(np.sort(p)) for p in parts]


def _largest_remainder(props: np.ndarray, total: int) -> np.ndarray:
    """Integer apportionment of ``total`` by ``props``; ties favor low index."""
    raw = props * total
    counts = np.floor(raw).astype(np.int64)
    short = total - counts.sum()
    frac = raw - counts
    # stable sort on -frac keeps ascending index order among ties
    order = np.argsort(-frac, kind="stable")
    counts[order[:short]] += 1
    return counts


def _ensure_nonempty(parts: list[np.ndarray]) -> None:
    for k, p in enumerate(parts):
        if p.size == 0:
            donor = int(np.argmax([q.size for q in parts]))
            parts[k] = parts[donor][-1:]
            parts[donor] = parts[donor][:-1]
            log.warning("client %d received no samples; reassigned one from client %d", k, donor)


def save_csv(ds: Dataset, path: str) -> None:
    """Write ``label,f0,...,f{d-1}`` rows; floats use repr for exact round trips."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"] + [f"f{j}" for j in range(ds.dim)])
        for label, row in zip(ds.labels, ds.samples):
            writer.writerow([int(label)] + [repr(float(v)) for v in row])


def load_csv(path: str) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: no rows") from None
        dim = len(header) - 1
        expected = ["label"] + [f"f{j}" for j in range(dim)]
        if dim < 1 or header != expected:
            raise DataFormatError(f"{path}: line 1: malformed header {header!r}")
        samples = []
        labels = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != dim + 1:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected {dim + 1} fields, got {len(row)}"
                )
            try:
                label = int(row[0])
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: unknown label {row[0]!r}"
                ) from None
            if label < 1:
                raise DataFormatError(f"{path}: line {lineno}: unknown label {label}")
            try:
                samples.append([float(v) for v in row[1:]])
            except ValueError:
                raise DataFormatError(f"{path}: line {lineno}: malformed value") from None
            labels.append(label)
    if not samples:
        raise DataFormatError(f"{path}: no rows")
    y = np.array(labels, dtype=np.int64)
    return Dataset(np.array(samples), y, int(y.max()))
