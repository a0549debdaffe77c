"""Seeded Gaussian-cluster benchmarks and dataset plumbing.

The builtin benchmark is a 2-D, 3-class problem: isotropic Gaussian blobs at
(4, 3), (3, 5) and (3, 1) with sigma 0.3 for the in-distribution classes, and
an out-of-distribution blob at (1.5, 6) with the same sigma. Each blob gets
1000 training and 1000 testing points, drawn independently per split. The
out-of-distribution training pool is meant to be subsampled down (often to a
handful of points) before training; the test split never is.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .rng import Rng

__all__ = [
    "GaussianClusterSpec",
    "Dataset",
    "sample_gaussian_cluster",
    "make_simulation_dataset",
    "subsample_ood",
    "sample_noise",
    "write_dataset_csv",
    "read_dataset_csv",
    "SIMULATION_IND_MEANS",
    "SIMULATION_OOD_MEAN",
    "SIMULATION_STD",
]

SIMULATION_IND_MEANS = ((4.0, 3.0), (3.0, 5.0), (3.0, 1.0))
SIMULATION_OOD_MEAN = (1.5, 6.0)
SIMULATION_STD = 0.3
SIMULATION_POINTS_PER_SPLIT = 1000

SPLIT_NAMES = ("ind_train", "ind_test", "ood_train", "ood_test")
OOD_LABEL = -1


@dataclass(frozen=True)
class GaussianClusterSpec:
    """Isotropic Gaussian blob; label is a 1-based class or None for OoD."""

    mean: tuple[float, ...]
    std: float
    n_train: int
    n_test: int
    label: int | None

    def __post_init__(self):
        if self.std < 0.0:
            raise ValueError(f"std must be >= 0, got {self.std}")
        if self.n_train < 0 or self.n_test < 0:
            raise ValueError("split sizes must be >= 0")
        if self.label is not None and self.label < 1:
            raise ValueError(f"class labels are 1-based, got {self.label}")


@dataclass(frozen=True)
class Dataset:
    """Labeled in-distribution splits plus unlabeled out-of-distribution ones.

    Points are rows of float arrays; labels are 1-based ints aligned with
    the rows of the corresponding `x` array.
    """

    ind_train_x: np.ndarray
    ind_train_y: np.ndarray
    ind_test_x: np.ndarray
    ind_test_y: np.ndarray
    ood_train: np.ndarray
    ood_test: np.ndarray
    d: int
    K: int

    def __post_init__(self):
        for name in ("ind_train_x", "ind_test_x", "ood_train", "ood_test"):
            arr = getattr(self, name)
            if arr.ndim != 2 or arr.shape[1] != self.d:
                raise ValueError(f"{name} must have shape (n, {self.d}), got {arr.shape}")
        for xs, ys in ((self.ind_train_x, self.ind_train_y),
                       (self.ind_test_x, self.ind_test_y)):
            if ys.shape != (xs.shape[0],):
                raise ValueError("labels must align one-to-one with points")
            if ys.size and (ys.min() < 1 or ys.max() > self.K):
                raise ValueError(f"labels must lie in 1..{self.K}")
        if self.K < 2:
            raise ValueError(f"need K >= 2 classes, got {self.K}")


def sample_gaussian_cluster(spec: GaussianClusterSpec, count: int, rng: Rng) -> np.ndarray:
    """`count` points of ``mean + std * z`` with z standard normal."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    mean = np.asarray(spec.mean, dtype=float)
    z = rng.standard_normal(count * mean.size).reshape(count, mean.size)
    return mean + spec.std * z


def make_simulation_dataset(rng: Rng) -> Dataset:
    """Builtin 2-D benchmark; draw order is cluster by cluster, train then test."""
    ind_train, ind_test = [], []
    train_labels, test_labels = [], []
    for label, mean in enumerate(SIMULATION_IND_MEANS, start=1):
        spec = GaussianClusterSpec(mean, SIMULATION_STD,
                                   SIMULATION_POINTS_PER_SPLIT,
                                   SIMULATION_POINTS_PER_SPLIT, label)
        ind_train.append(sample_gaussian_cluster(spec, spec.n_train, rng))
        ind_test.append(sample_gaussian_cluster(spec, spec.n_test, rng))
        train_labels.append(np.full(spec.n_train, label, dtype=np.int64))
        test_labels.append(np.full(spec.n_test, label, dtype=np.int64))

    ood_spec = GaussianClusterSpec(SIMULATION_OOD_MEAN, SIMULATION_STD,
                                   SIMULATION_POINTS_PER_SPLIT,
                                   SIMULATION_POINTS_PER_SPLIT, None)
    ood_train = sample_gaussian_cluster(ood_spec, ood_spec.n_train, rng)
    ood_test = sample_gaussian_cluster(ood_spec, ood_spec.n_test, rng)

    return Dataset(
        ind_train_x=np.concatenate(ind_train),
        ind_train_y=np.concatenate(train_labels),
        ind_test_x=np.concatenate(ind_test),
        ind_test_y=np.concatenate(test_labels),
        ood_train=ood_train,
        ood_test=ood_test,
        d=2,
        K=len(SIMULATION_IND_MEANS),
    )


def subsample_ood(dataset: Dataset, n_keep: int, rng: Rng) -> Dataset:
    """Keep a uniform without-replacement subsample of the OoD training pool.

    All other splits are untouched; in particular the OoD test split always
    stays complete.
    """
    pool = dataset.ood_train.shape[0]
    if not 0 <= n_keep <= pool:
        raise ValueError(f"n_keep must lie in 0..{pool}, got {n_keep}")
    chosen = rng.choose_without_replacement(pool, n_keep)
    return replace(dataset, ood_train=dataset.ood_train[chosen])


def sample_noise(n: int, count: int, rng: Rng) -> np.ndarray:
    """`count` independent standard-normal vectors of length n."""
    if n < 1:
        raise ValueError(f"noise dimension must be >= 1, got {n}")
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    return rng.standard_normal(count * n).reshape(count, n)


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_dataset_csv(dataset: Dataset, path) -> None:
    """Rows of x1..xd, label, split; OoD rows carry label -1."""
    header = [f"x{i + 1}" for i in range(dataset.d)] + ["label", "split"]
    blocks = (
        (dataset.ind_train_x, dataset.ind_train_y, "ind_train"),
        (dataset.ind_test_x, dataset.ind_test_y, "ind_test"),
        (dataset.ood_train, None, "ood_train"),
        (dataset.ood_test, None, "ood_test"),
    )
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for xs, ys, split in blocks:
            for i in range(xs.shape[0]):
                label = OOD_LABEL if ys is None else int(ys[i])
                writer.writerow([_fmt(v) for v in xs[i]] + [label, split])


def read_dataset_csv(path) -> Dataset:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header or len(header) < 4 or header[-2:] != ["label", "split"]:
            raise ValueError(f"{path}: expected header x1..xd,label,split")
        d = len(header) - 2
        rows = {name: [] for name in SPLIT_NAMES}
        labels = {name: [] for name in SPLIT_NAMES}
        for line_no, row in enumerate(reader, start=2):
            if len(row) != d + 2:
                raise ValueError(f"{path}:{line_no}: expected {d + 2} fields, got {len(row)}")
            split = row[-1]
            if split not in rows:
                raise ValueError(f"{path}:{line_no}: unknown split {split!r}")
            rows[split].append([float(v) for v in row[:d]])
            labels[split].append(int(row[-2]))

    def block(name: str) -> np.ndarray:
        data = rows[name]
        return np.array(data) if data else np.empty((0, d))

    ind_train_y = np.array(labels["ind_train"], dtype=np.int64)
    ind_test_y = np.array(labels["ind_test"], dtype=np.int64)
    n_classes = int(max(ind_train_y.max(initial=1), ind_test_y.max(initial=1), 2))
    return Dataset(
        ind_train_x=block("ind_train"),
        ind_train_y=ind_train_y,
        ind_test_x=block("ind_test"),
        ind_test_y=ind_test_y,
        ood_train=block("ood_train"),
        ood_test=block("ood_test"),
        d=d,
        K=n_classes,
    )
