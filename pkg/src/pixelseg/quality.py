"""Per-point silhouette scores and the silhouette rate used for model selection.

The silhouette rate is the fraction of points whose silhouette score strictly
exceeds a threshold (default 0.3). It ranks candidate representations and
clusterings; higher is better.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import SingleCluster
from .feature_prep import PixelMatrix
from .validation import as_labels, as_matrix

DEFAULT_T_SIL = 0.3
DEFAULT_N_MAX = 8192

_WIDE_C = 32  # above this, use the |x|^2 + |y|^2 - 2xy distance expansion


@dataclass
class SilhouetteReport:
    """Silhouette scores of the evaluated points and their rate above t_sil."""

    scores: np.ndarray
    t_sil: float
    sr: float


def _dist_block(block: np.ndarray, X: np.ndarray) -> np.ndarray:
    if X.shape[1] > _WIDE_C:
        d2 = (
            np.einsum("ij,ij->i", block, block)[:, None]
            + np.einsum("ij,ij->i", X, X)[None, :]
            - 2.0 * (block @ X.T)
        )
        return np.sqrt(np.maximum(d2, 0.0))
    return np.sqrt(((block[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))


def silhouette_scores(matrix, labels) -> np.ndarray:
    """Silhouette score of every point under the given labeling.

    For point i in cluster A: a = mean distance to the other members of A,
    b = smallest mean distance to any other cluster, score = (b-a)/max(a, b).
    Singletons score 0; so do points where a and b are both 0.
    """
    X = as_matrix(matrix)
    labs = as_labels(labels)
    if labs.shape[0] != X.shape[0]:
        raise ValueError("labels must cover every row")
    uniq, inv = np.unique(labs, return_inverse=True)
    n_clusters = uniq.size
    if n_clusters < 2:
        raise SingleCluster("silhouette needs at least 2 clusters")
    counts = np.bincount(inv, minlength=n_clusters).astype(np.float64)

    n = X.shape[0]
    onehot = np.zeros((n, n_clusters))
    onehot[np.arange(n), inv] = 1.0

    # Budget ~32 MB of scratch per block; the narrow path broadcasts over C.
    per_row = n if X.shape[1] > _WIDE_C else n * X.shape[1]
    chunk = max(1, 4_000_000 // max(per_row, 1))
    scores = np.empty(n)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        dist = _dist_block(X[start:stop], X)
        sums = dist @ onehot  # per-cluster distance sums
        own = inv[start:stop]
        rows = np.arange(stop - start)

        own_counts = counts[own]
        a = np.zeros(stop - start)
        np.divide(sums[rows, own], own_counts - 1.0, out=a, where=own_counts > 1)

        means = sums / counts[None, :]
        means[rows, own] = np.inf
        b = means.min(axis=1)

        denom = np.maximum(a, b)
        s = np.zeros(stop - start)
        np.divide(b - a, denom, out=s, where=denom > 0)
        s[own_counts == 1] = 0.0
        scores[start:stop] = s
    return scores


def silhouette_rate(scores, t_sil: float = DEFAULT_T_SIL) -> float:
    """Exact fraction of scores strictly greater than ``t_sil``."""
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty score list")
    return float(np.count_nonzero(arr > t_sil)) / arr.size


def _stratified_pick(labs: np.ndarray, n_max: int) -> np.ndarray:
    """Deterministic per-cluster strided subsample, proportional allocation."""
    n = labs.shape[0]
    uniq = np.unique(labs)
    quotas = {}
    for u in uniq:
        n_c = int(np.count_nonzero(labs == u))
        quotas[int(u)] = max(1, n_c * n_max // n)
    excess = sum(quotas.values()) - n_max
    while excess > 0:
        big = max(quotas, key=lambda u: (quotas[u], -u))
        if quotas[big] <= 1:
            break
        quotas[big] -= 1
        excess -= 1
    picked = []
    for u in uniq:
        member_idx = np.flatnonzero(labs == u)
        q = quotas[int(u)]
        stride = max(1, len(member_idx) // q)
        picked.append(member_idx[::stride][:q])
    return np.sort(np.concatenate(picked))


def sr_for_clustering(
    matrix,
    labels,
    t_sil: float = DEFAULT_T_SIL,
    n_max: int = DEFAULT_N_MAX,
) -> SilhouetteReport:
    """Silhouette report for a clustering, subsampling large inputs.

    Beyond ``n_max`` points the scores come from a deterministic stratified
    subsample that keeps every cluster represented.
    """
    X = as_matrix(matrix)
    labs = as_labels(labels)
    if labs.shape[0] != X.shape[0]:
        raise ValueError("labels must cover every row")
    if np.unique(labs).size < 2:
        raise SingleCluster("silhouette rate needs at least 2 clusters")
    if X.shape[0] > n_max:
        keep = _stratified_pick(labs, n_max)
        X = X[keep]
        labs = labs[keep]
    scores = silhouette_scores(X, labs)
    return SilhouetteReport(scores, t_sil, silhouette_rate(scores, t_sil))
