"""Covariance eigendecomposition of pixel features and eigenvalue-ratio K selection.

The number of retained components doubles as the cluster count downstream:
K counts the eigenvalues whose ratio to the largest one exceeds a threshold
(default 0.3). The eigensolver runs on the C x C sample covariance, never the
N x N Gram matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import DegenerateInput, KTooLarge
from .feature_prep import PixelMatrix
from .validation import as_matrix, check_finite

DEFAULT_T_EIG = 0.3


@dataclass
class PcMaps:
    """Projection scores of pixels onto the leading eigenvectors."""

    values: np.ndarray  # (N, K) scores
    grid_h: int
    grid_w: int

    @property
    def k(self) -> int:
        return self.values.shape[1]

    def map_grid(self, j: int) -> np.ndarray:
        """Component ``j`` reshaped to the spatial grid."""
        return self.values[:, j].reshape(self.grid_h, self.grid_w)


def select_k(eigenvalues, t_eig: float = DEFAULT_T_EIG) -> int:
    """Count eigenvalues whose ratio to the largest strictly exceeds ``t_eig``.

    A zero leading eigenvalue (constant input) yields 1.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if lam.size == 0:
        raise ValueError("empty spectrum")
    if np.any(np.diff(lam) > 0):
        raise ValueError("eigenvalues must be sorted descending")
    if lam[-1] < 0:
        raise ValueError("eigenvalues must be nonnegative")
    if lam[0] == 0.0:
        return 1
    return int(np.count_nonzero(lam / lam[0] > t_eig))


class PixelPca(BaseEstimator, TransformerMixin):
    """PCA of pixel rows with spectrum-derived component count.

    Parameters
    ----------
    t_eig : float
        Eigenvalue-ratio threshold used to pick the component count.
    k : int, optional
        Fixed component count overriding the ratio rule.

    Attributes
    ----------
    mean_ : (C,) column means.
    eigenvalues_ : (C,) descending, clamped to be nonnegative.
    eigenvectors_ : (C, C) orthonormal columns, column j pairs with eigenvalue j.
    k_ : selected component count.
    """

    def __init__(self, t_eig: float = DEFAULT_T_EIG, k: int | None = None):
        self.t_eig = t_eig
        self.k = k

    def fit(self, X, y=None):
        X = check_finite(as_matrix(X), "pca input")
        n, c = X.shape
        if n < 2:
            raise DegenerateInput(f"need at least 2 rows to fit a covariance, got {n}")
        self.mean_ = X.mean(axis=0)
        centered = X - self.mean_
        cov = centered.T @ centered / (n - 1)
        lam, vec = np.linalg.eigh(cov)
        lam = np.maximum(lam[::-1], 0.0)
        vec = vec[:, ::-1]
        # Deterministic sign: largest-magnitude component of each vector positive.
        flip = vec[np.abs(vec).argmax(axis=0), np.arange(c)] < 0
        vec[:, flip] *= -1.0
        self.eigenvalues_ = lam
        self.eigenvectors_ = vec
        self.n_features_in_ = c
        if self.k is not None:
            if not 1 <= self.k <= c:
                raise KTooLarge(f"k={self.k} outside [1, {c}]")
            self.k_ = int(self.k)
        else:
            self.k_ = select_k(lam, self.t_eig)
        return self

    def transform(self, X, k: int | None = None) -> np.ndarray:
        """Project rows onto the leading ``k`` (default ``k_``) eigenvectors."""
        if not hasattr(self, "eigenvectors_"):
            raise AttributeError("PixelPca instance is not fitted yet")
        X = as_matrix(X)
        k = self.k_ if k is None else int(k)
        if k > self.n_features_in_:
            raise KTooLarge(f"k={k} exceeds feature count {self.n_features_in_}")
        if k < 1:
            raise ValueError("k must be >= 1")
        return (X - self.mean_) @ self.eigenvectors_[:, :k]


def fit_pca(matrix: PixelMatrix, t_eig: float = DEFAULT_T_EIG) -> PixelPca:
    """Fit a PixelPca on a pixel matrix."""
    return PixelPca(t_eig=t_eig).fit(matrix)


def project_pc_maps(matrix: PixelMatrix, model: PixelPca, k: int | None = None) -> PcMaps:
    """Project a pixel matrix onto the top-k eigenvectors, keeping its grid dims."""
    scores = model.transform(matrix, k=k)
    return PcMaps(scores, matrix.grid_h, matrix.grid_w)
