"""Seeded k-means and agglomerative clustering over pixel rows.

Both methods are fully deterministic: k-means++ draws from a caller-supplied
seed, and the agglomerative merge breaks linkage ties by the lexicographically
smallest (i, j) pair of cluster indices (a cluster's index is the smallest
original row index it contains).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .exceptions import KExceedsPoints, TooManyPoints
from .feature_prep import PixelMatrix
from .validation import as_matrix

DEFAULT_MAX_ITER = 300
DEFAULT_TOL = 1e-4
DEFAULT_HIER_MAX = 4096

LINKAGES = ("ward", "average", "complete", "single")


@dataclass
class ClusterLabels:
    """Per-row cluster assignments plus how they were produced."""

    labels: np.ndarray
    k: int
    method: str
    inertia: float | None = None
    seed: int | None = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int32)


def _sq_dists(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between rows of X and rows of Y."""
    xx = np.einsum("ij,ij->i", X, X)
    yy = np.einsum("ij,ij->i", Y, Y)
    d2 = xx[:, None] + yy[None, :] - 2.0 * (X @ Y.T)
    return np.maximum(d2, 0.0)


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = _sq_dists(X, X[chosen[-1]][None, :])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # All remaining mass sits on already-chosen points; take fresh indices.
            used = set(chosen)
            idx = next(i for i in range(n) if i not in used)
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            idx = min(idx, n - 1)
        chosen.append(idx)
        d2 = np.minimum(d2, _sq_dists(X, X[idx][None, :])[:, 0])
    return X[np.array(chosen)].copy()


class SeededKMeans(BaseEstimator, ClusterMixin):
    """Lloyd's algorithm with k-means++ initialization from an explicit seed.

    Stops when the largest centroid movement drops below ``tol`` or after
    ``max_iter`` sweeps. ``inertia_history_`` records the inertia after every
    assignment step and is non-increasing.
    """

    def __init__(
        self,
        n_clusters: int = 2,
        seed: int = 0,
        max_iter: int = DEFAULT_MAX_ITER,
        tol: float = DEFAULT_TOL,
    ):
        self.n_clusters = n_clusters
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        X = as_matrix(X)
        n, c = X.shape
        k = int(self.n_clusters)
        if k < 1:
            raise ValueError("n_clusters must be >= 1")
        if k > n:
            raise KExceedsPoints(f"{k} clusters requested for {n} points")

        rng = np.random.default_rng(self.seed)
        centers = _kmeans_pp_init(X, k, rng)
        history: list[float] = []
        labels = np.zeros(n, dtype=np.int32)
        for _ in range(int(self.max_iter)):
            d2 = _sq_dists(X, centers)
            labels = d2.argmin(axis=1).astype(np.int32)
            history.append(float(d2[np.arange(n), labels].sum()))

            counts = np.bincount(labels, minlength=k).astype(np.float64)
            sums = np.zeros((k, c))
            np.add.at(sums, labels, X)
            empty = np.flatnonzero(counts == 0)
            if empty.size:
                self._relocate_empty(X, d2, labels, sums, counts, empty)
            new_centers = sums / counts[:, None]
            shift = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
            centers = new_centers
            if shift < self.tol:
                break
        d2 = _sq_dists(X, centers)
        labels = d2.argmin(axis=1).astype(np.int32)
        history.append(float(d2[np.arange(n), labels].sum()))

        self.cluster_centers_ = centers
        self.labels_ = labels
        self.inertia_ = history[-1]
        self.inertia_history_ = history
        self.n_iter_ = len(history) - 1
        return self

    @staticmethod
    def _relocate_empty(X, d2, labels, sums, counts, empty):
        # Seed each empty cluster with the farthest-from-centroid point taken
        # from a cluster that can spare one (>= 2 members); ties break on index.
        assigned = d2[np.arange(len(labels)), labels]
        order = np.lexsort((np.arange(len(labels)), -assigned))
        pos = 0
        for cid in empty:
            while pos < len(order) and counts[labels[order[pos]]] < 2:
                pos += 1
            p = order[pos]
            old = labels[p]
            sums[old] -= X[p]
            counts[old] -= 1
            sums[cid] = X[p]
            counts[cid] = 1
            labels[p] = cid
            pos += 1

    def predict(self, X) -> np.ndarray:
        X = as_matrix(X)
        return _sq_dists(X, self.cluster_centers_).argmin(axis=1).astype(np.int32)


def _lance_williams(linkage, d_i, d_j, d_ij, s_i, s_j, sizes):
    if linkage == "ward":  # squared-distance form
        tot = sizes + s_i + s_j
        return ((sizes + s_i) * d_i + (sizes + s_j) * d_j - sizes * d_ij) / tot
    if linkage == "single":
        return np.minimum(d_i, d_j)
    if linkage == "complete":
        return np.maximum(d_i, d_j)
    if linkage == "average":
        return (s_i * d_i + s_j * d_j) / (s_i + s_j)
    raise ValueError(f"unknown linkage {linkage!r}")


def _agglomerate(X: np.ndarray, k: int, linkage: str) -> np.ndarray:
    """Merge until k clusters remain; returns labels ordered by smallest member."""
    n = X.shape[0]
    if k == n:
        return np.arange(n, dtype=np.int32)

    D = _sq_dists(X, X)
    if linkage != "ward":
        D = np.sqrt(D)
    np.fill_diagonal(D, np.inf)

    active = np.ones(n, dtype=bool)
    sizes = np.ones(n)
    members: list[list[int] | None] = [[i] for i in range(n)]
    row_min = D.min(axis=1)
    row_arg = D.argmin(axis=1)
    col_idx = np.arange(n)

    for _ in range(n - k):
        i = int(np.argmin(np.where(active, row_min, np.inf)))
        j = int(row_arg[i])
        # i < j holds: were any minimal cell (a, b) to have b < a, row b would
        # expose the same minimum at a smaller row index.
        d_ij = D[i, j]
        new_row = _lance_williams(linkage, D[i], D[j], d_ij, sizes[i], sizes[j], sizes)
        new_row[i] = np.inf
        new_row[~active] = np.inf
        new_row[j] = np.inf
        D[i, :] = new_row
        D[:, i] = new_row
        D[j, :] = np.inf
        D[:, j] = np.inf
        active[j] = False
        row_min[j] = np.inf
        sizes[i] += sizes[j]
        members[i].extend(members[j])  # type: ignore[union-attr]
        members[j] = None

        col = D[:, i]
        improved = col < row_min
        row_min[improved] = col[improved]
        row_arg[improved] = i
        tie = active & (col == row_min) & (col_idx != i) & (i < row_arg)
        row_arg[tie] = i
        stale = active & ~improved & (col_idx != i) & ((row_arg == i) | (row_arg == j))
        stale &= col > row_min
        for t in np.flatnonzero(stale):
            row_min[t] = D[t].min()
            row_arg[t] = D[t].argmin()
        row_min[i] = D[i].min()
        row_arg[i] = D[i].argmin()

    labels = np.empty(n, dtype=np.int32)
    for label, slot in enumerate(np.flatnonzero(active)):
        labels[np.asarray(members[slot])] = label
    return labels


class AgglomerativeClusterer(BaseEstimator, ClusterMixin):
    """Bottom-up merging on Euclidean distances, cut at ``n_clusters``.

    Ward linkage (default) merges the pair with the smallest within-variance
    increase. Inputs larger than ``max_points`` are refused; callers should
    subsample with :func:`downsample_rows` and extend via :func:`assign_nearest`.
    """

    def __init__(
        self,
        n_clusters: int = 2,
        linkage: str = "ward",
        max_points: int = DEFAULT_HIER_MAX,
    ):
        self.n_clusters = n_clusters
        self.linkage = linkage
        self.max_points = max_points

    def fit(self, X, y=None):
        X = as_matrix(X)
        n = X.shape[0]
        k = int(self.n_clusters)
        if self.linkage not in LINKAGES:
            raise ValueError(f"linkage must be one of {LINKAGES}")
        if k < 1:
            raise ValueError("n_clusters must be >= 1")
        if k > n:
            raise KExceedsPoints(f"{k} clusters requested for {n} points")
        if n > int(self.max_points):
            raise TooManyPoints(
                f"{n} points exceed the cap of {self.max_points}; subsample first"
            )
        self.labels_ = _agglomerate(X, k, self.linkage)
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).labels_


def kmeans(
    matrix: PixelMatrix,
    k: int,
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> ClusterLabels:
    """Cluster pixel rows with seeded k-means."""
    est = SeededKMeans(n_clusters=k, seed=seed, max_iter=max_iter, tol=tol).fit(matrix)
    return ClusterLabels(est.labels_, k, "kmeans", inertia=est.inertia_, seed=seed)


def hierarchical(
    matrix: PixelMatrix,
    k: int,
    linkage: str = "ward",
    max_points: int = DEFAULT_HIER_MAX,
) -> ClusterLabels:
    """Cluster pixel rows agglomeratively and cut at k clusters."""
    est = AgglomerativeClusterer(n_clusters=k, linkage=linkage, max_points=max_points)
    return ClusterLabels(est.fit_predict(matrix), k, "hierarchical")


def downsample_rows(matrix: PixelMatrix, n_max: int) -> tuple[PixelMatrix, np.ndarray]:
    """Strided spatial subsampling to at most ``n_max`` rows.

    Uses the smallest stride meeting the cap, identical in both grid axes.
    Returns the subsampled matrix and the kept rows' original flat indices.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    h, w = matrix.grid_h, matrix.grid_w
    if matrix.rows <= n_max:
        return matrix, np.arange(matrix.rows)
    stride = 1
    while -(-h // stride) * -(-w // stride) > n_max:
        stride += 1
    hs = np.arange(0, h, stride)
    ws = np.arange(0, w, stride)
    idx = (hs[:, None] * w + ws[None, :]).ravel()
    sub = PixelMatrix(matrix.values[idx], len(hs), len(ws))
    return sub, idx


def assign_nearest(
    matrix: PixelMatrix, centroids: np.ndarray, method: str = "kmeans"
) -> ClusterLabels:
    """Label every row by its nearest centroid (ties go to the smaller index)."""
    centroids = np.asarray(centroids, dtype=np.float64)
    if centroids.ndim != 2 or centroids.shape[0] < 1:
        raise ValueError("centroids must be a nonempty K x C matrix")
    labels = _sq_dists(as_matrix(matrix), centroids).argmin(axis=1)
    return ClusterLabels(labels, centroids.shape[0], method)
