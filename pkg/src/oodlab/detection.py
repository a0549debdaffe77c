"""Threshold calibration, the binary detector, and evaluation metrics.

The detector flags a point as out-of-distribution when its score strictly
exceeds a threshold eta; a score equal to eta counts as in-distribution.
Eta is calibrated on in-distribution scores as the smallest observed score
whose empirical true-negative rate reaches the requested target, so the
calibration is parameter-free and exactly reproducible from the score list.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .nets import Head, MlpParams, mlp_forward
from .wasserstein import score_batch, validate_cost_matrix

__all__ = [
    "Threshold",
    "GridSpec",
    "Decision",
    "select_threshold",
    "detect",
    "tpr_at_tnr",
    "classification_accuracy",
    "mad",
    "score_heatmap",
    "rejection_region_area",
    "write_heatmap_csv",
    "read_heatmap_csv",
    "write_heatmap_pgm",
]


class Decision(Enum):
    IND = "InD"
    OOD = "OoD"


@dataclass(frozen=True)
class Threshold:
    """Calibrated score cutoff together with the rate it was calibrated for."""

    eta: float
    target_tnr: float

    def __post_init__(self):
        if not 0.0 < self.target_tnr <= 1.0:
            raise ValueError(f"target TNR must lie in (0, 1], got {self.target_tnr}")


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned evaluation grid; scores are taken at cell centers."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    resolution: int

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("grid extents must satisfy max > min on both axes")
        if self.resolution < 1:
            raise ValueError(f"resolution must be >= 1, got {self.resolution}")


def select_threshold(ind_scores, target_tnr: float) -> Threshold:
    """Smallest observed score keeping at least `target_tnr` of the list at or below it."""
    scores = np.asarray(ind_scores, dtype=float)
    if scores.size == 0:
        raise ValueError("threshold calibration needs at least one score")
    if not 0.0 < target_tnr <= 1.0:
        raise ValueError(f"target TNR must lie in (0, 1], got {target_tnr}")
    ordered = np.sort(scores)
    n = scores.size
    # Scores equal to eta count as in-distribution, so candidate c admits
    # searchsorted(ordered, c, side="right") of the n points.
    for candidate in ordered:
        admitted = np.searchsorted(ordered, candidate, side="right")
        if admitted / n >= target_tnr:
            return Threshold(float(candidate), target_tnr)
    return Threshold(float(ordered[-1]), target_tnr)


def detect(score: float, threshold: Threshold) -> Decision:
    """Out-of-distribution exactly when the score strictly exceeds eta."""
    return Decision.OOD if score > threshold.eta else Decision.IND


def tpr_at_tnr(ind_scores, ood_scores, target_tnr: float) -> tuple[float, Threshold]:
    """Detection rate on OoD scores at a threshold calibrated on InD scores."""
    ood = np.asarray(ood_scores, dtype=float)
    if ood.size == 0:
        raise ValueError("need at least one OoD score")
    threshold = select_threshold(ind_scores, target_tnr)
    return float(np.mean(ood > threshold.eta)), threshold


def classification_accuracy(D: MlpParams, points, labels) -> float:
    """Fraction of points whose argmax class (smallest index on ties) matches the label."""
    x = np.asarray(points, dtype=float)
    y = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("accuracy needs a nonempty (n, d) array of points")
    if y.shape != (x.shape[0],):
        raise ValueError("labels must align one-to-one with points")
    if D.head is not Head.SOFTMAX:
        raise ValueError("classification requires a Softmax head")
    probs, _ = mlp_forward(D, x)
    predicted = np.argmax(probs, axis=1) + 1
    return float(np.mean(predicted == y))


def mad(values) -> float:
    """Mean absolute deviation from the mean."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("mad of an empty list is undefined")
    return float(np.mean(np.abs(v - v.mean())))


def score_heatmap(D: MlpParams, grid: GridSpec, M) -> np.ndarray:
    """Scores over the grid's cell centers.

    Row i, column j holds the score at x = x_min + (j + 0.5) * dx,
    y = y_min + (i + 0.5) * dy, so y grows with the row index and x with the
    column index.
    """
    validate_cost_matrix(M)
    if D.input_dim != 2:
        raise ValueError(f"heatmaps need a 2-D input space, discriminator takes {D.input_dim}")
    res = grid.resolution
    dx = (grid.x_max - grid.x_min) / res
    dy = (grid.y_max - grid.y_min) / res
    xs = grid.x_min + (np.arange(res) + 0.5) * dx
    ys = grid.y_min + (np.arange(res) + 0.5) * dy
    xx, yy = np.meshgrid(xs, ys)
    points = np.column_stack([xx.ravel(), yy.ravel()])
    return score_batch(D, points, M).reshape(res, res)


def rejection_region_area(heatmap: np.ndarray, threshold: Threshold) -> float:
    """Fraction of grid cells the detector rejects as out-of-distribution."""
    cells = np.asarray(heatmap, dtype=float)
    return float(np.mean(cells > threshold.eta))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_heatmap_csv(heatmap: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        for row in np.asarray(heatmap, dtype=float):
            writer.writerow([_fmt(v) for v in row])


def read_heatmap_csv(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = [[float(v) for v in row] for row in csv.reader(f) if row]
    if not rows:
        raise ValueError(f"heatmap file {path} is empty")
    return np.array(rows)


def write_heatmap_pgm(heatmap: np.ndarray, K: int, path) -> None:
    """ASCII ("P2") grayscale image of a heatmap.

    Scores map linearly from [0, 1 - 1/K] to [0, 255] and round half-up.
    Matrix rows are written top to bottom in storage order; sample lines are
    kept within the format's 70-character limit.
    """
    if K < 2:
        raise ValueError(f"need K >= 2, got {K}")
    cells = np.asarray(heatmap, dtype=float)
    top = 1.0 - 1.0 / K
    grays = np.clip(np.floor(cells / top * 255.0 + 0.5), 0, 255).astype(int)
    lines = [f"P2", f"{cells.shape[1]} {cells.shape[0]}", "255"]
    for row in grays:
        tokens = [str(v) for v in row]
        for start in range(0, len(tokens), 16):
            lines.append(" ".join(tokens[start:start + 16]))
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
