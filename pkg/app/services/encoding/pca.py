"""Principal component analysis via SVD of the covariance matrix."""

from dataclasses import dataclass

import numpy as np

from app.exceptions import DimensionError


@dataclass(frozen=True)
class PcaModel:
    """components: (d_reduced x d_raw) orthonormal rows; mean: (d_raw,)."""

    components: np.ndarray
    mean: np.ndarray
    explained_variance: np.ndarray

    @property
    def d_reduced(self) -> int:
        return self.components.shape[0]

    @property
    def d_raw(self) -> int:
        return self.components.shape[1]


def fit_pca(rows: np.ndarray, d_reduced: int) -> PcaModel:
    """Top d_reduced principal directions of the mean-centered rows."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise DimensionError(f"PCA needs a matrix with at least 2 rows, got shape {rows.shape}")
    d_raw = rows.shape[1]
    if d_reduced < 1 or d_reduced > d_raw:
        raise DimensionError(f"d_reduced={d_reduced} must be in [1, {d_raw}]")

    mean = rows.mean(axis=0)
    centered = rows - mean
    cov = np.atleast_2d(np.cov(centered, rowvar=False))
    u, s, _ = np.linalg.svd(cov)
    components = u[:, :d_reduced].T.copy()
    # deterministic sign: largest-magnitude loading positive
    for i in range(d_reduced):
        if components[i, np.argmax(np.abs(components[i]))] < 0:
            components[i] = -components[i]
    return PcaModel(components=components, mean=mean, explained_variance=s[:d_reduced].copy())


def identity_pca(d_raw: int, d_reduced: int) -> PcaModel:
    """Projection onto the first d_reduced axes, for tables too small to fit."""
    return PcaModel(
        components=np.eye(d_raw)[:d_reduced],
        mean=np.zeros(d_raw),
        explained_variance=np.zeros(d_reduced),
    )


def apply_pca(model: PcaModel, rows: np.ndarray) -> np.ndarray:
    """(rows - mean) @ components.T"""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != model.d_raw:
        raise DimensionError(f"PCA expects {model.d_raw} columns, got shape {rows.shape}")
    return (rows - model.mean) @ model.components.T


def reconstruct(model: PcaModel, reduced: np.ndarray) -> np.ndarray:
    return np.asarray(reduced, dtype=np.float64) @ model.components + model.mean
