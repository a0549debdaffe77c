"""Transport-cost scoring of predicted class distributions.

A score for a probability vector p is the cheapest cost of transporting p
onto any one-hot target under a user-supplied cost matrix M. Because the
target is one-hot, the optimal transport plan is closed-form (all mass of
class j moves to the target class k at cost M[j, k]), so the score is

    score(p; M) = min_k sum_j p[j] * M[j, k]

Under the binary cost matrix (ones off the diagonal) this collapses to
``1 - max(p)``: zero for a one-hot prediction, ``1 - 1/K`` for the uniform
one. Class indices in this module are 1-based, matching dataset labels and
the CSV formats.
"""

from __future__ import annotations

import numpy as np

from .nets import Head, MlpParams, mlp_forward

__all__ = [
    "validate_prob_vector",
    "validate_cost_matrix",
    "binary_cost_matrix",
    "load_cost_matrix_csv",
    "wasserstein_to_onehot",
    "wasserstein_score",
    "score_gradient",
    "scores_for_probs",
    "score_batch",
]

PROB_SUM_TOL = 1e-9


def validate_prob_vector(p) -> np.ndarray:
    """Check entries >= 0, sum within 1e-9 of 1, and K >= 2."""
    vec = np.asarray(p, dtype=float)
    if vec.ndim != 1 or vec.size < 2:
        raise ValueError(f"probability vector must be 1-D with K >= 2, got shape {vec.shape}")
    if np.any(vec < 0.0):
        raise ValueError("probability vector has negative entries")
    total = float(vec.sum())
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"probability vector sums to {total}, not 1")
    return vec


def validate_cost_matrix(m) -> np.ndarray:
    """Check square, K >= 2, nonnegative entries, zero diagonal."""
    mat = np.asarray(m, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {mat.shape}")
    if mat.shape[0] < 2:
        raise ValueError(f"cost matrix needs K >= 2, got K = {mat.shape[0]}")
    if np.any(mat < 0.0):
        raise ValueError("cost matrix has negative entries")
    if np.any(np.diag(mat) != 0.0):
        raise ValueError("cost matrix diagonal must be zero")
    return mat


def binary_cost_matrix(K: int) -> np.ndarray:
    """Unit cost between any two distinct classes: ones minus identity."""
    if K < 2:
        raise ValueError(f"need K >= 2, got {K}")
    return np.ones((K, K)) - np.eye(K)


def load_cost_matrix_csv(path) -> np.ndarray:
    """Read K rows of K comma-separated floats and validate the invariants."""
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append([float(tok) for tok in line.split(",")])
    if not rows:
        raise ValueError(f"cost matrix file {path} is empty")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"cost matrix rows have inconsistent lengths {sorted(widths)}")
    return validate_cost_matrix(np.array(rows))


def wasserstein_to_onehot(p, k: int, M) -> float:
    """Transport cost from p to the one-hot target of class k (1-based)."""
    vec = validate_prob_vector(p)
    mat = validate_cost_matrix(M)
    if vec.size != mat.shape[0]:
        raise ValueError(f"p has {vec.size} classes but M is {mat.shape[0]}x{mat.shape[0]}")
    if not 1 <= k <= vec.size:
        raise ValueError(f"class index must lie in 1..{vec.size}, got {k}")
    return float(vec @ mat[:, k - 1])


def wasserstein_score(p, M) -> tuple[float, int]:
    """Minimum transport cost to any one-hot target.

    Returns (score, argmin_class) with the smallest-index class winning ties.
    """
    vec = validate_prob_vector(p)
    mat = validate_cost_matrix(M)
    if vec.size != mat.shape[0]:
        raise ValueError(f"p has {vec.size} classes but M is {mat.shape[0]}x{mat.shape[0]}")
    costs = vec @ mat
    k_star = int(np.argmin(costs))  # argmin takes the first minimum
    return float(costs[k_star]), k_star + 1


def score_gradient(p, M) -> np.ndarray:
    """Gradient of the score with respect to p: the argmin column of M.

    At argmin ties this is the column of the smallest-index minimizing class,
    a valid subgradient choice consistent with :func:`wasserstein_score`.
    """
    _, k_star = wasserstein_score(p, M)
    mat = validate_cost_matrix(M)
    return mat[:, k_star - 1].copy()


def scores_for_probs(probs: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Row-wise scores for a (batch, K) matrix of probability vectors."""
    return np.min(probs @ M, axis=1)


def score_batch(net: MlpParams, inputs, M) -> np.ndarray:
    """Scores of ``net``'s predictions for each input point, order preserved."""
    mat = validate_cost_matrix(M)
    if net.head is not Head.SOFTMAX:
        raise ValueError("scoring requires a Softmax output head")
    if net.output_dim != mat.shape[0]:
        raise ValueError(
            f"net outputs {net.output_dim} classes but M is {mat.shape[0]}x{mat.shape[0]}"
        )
    x = np.asarray(inputs, dtype=float)
    if x.size == 0:
        return np.empty(0)
    probs, _ = mlp_forward(net, x)
    return scores_for_probs(np.atleast_2d(probs), mat)
