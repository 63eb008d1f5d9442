"""Gaussian matrices, orthogonal perturbation ensembles, and small helpers.

The orthogonal ensemble construction keeps each row marginally N(0, I_D):
Gram-Schmidt gives an orthonormal frame whose rows are uniformly distributed
directions, and each row is then rescaled to the norm of an independent
fresh D-dimensional Gaussian (a chi_D draw).
"""

from __future__ import annotations

import numpy as np

from .rng import Rng

_GS_TOL = 1e-12
_MAX_RESAMPLE = 64


def gaussian_matrix(rows: int, cols: int, rng: Rng) -> np.ndarray:
    """(rows, cols) matrix of independent standard normal entries."""
    if rows < 1 or cols < 1:
        raise ValueError("gaussian_matrix needs rows >= 1 and cols >= 1")
    return rng.normals(rows * cols).reshape(rows, cols)


def orthogonal_gaussian_ensemble(count: int, dim: int, rng: Rng) -> np.ndarray:
    """(count, dim) rows: pairwise orthogonal, each marginally N(0, I_dim).

    Requires count <= dim.  Degenerate (numerically dependent) draws are
    resampled from the continuing stream.
    """
    if count < 1:
        raise ValueError("ensemble needs count >= 1")
    if count > dim:
        raise ValueError("ensemble size exceeds dimension")
    for _ in range(_MAX_RESAMPLE):
        base = gaussian_matrix(count, dim, rng)
        q = _gram_schmidt_rows(base)
        if q is not None:
            break
    else:
        raise RuntimeError("orthogonal ensemble: resampling failed to converge")
    norms = np.sqrt((gaussian_matrix(count, dim, rng) ** 2).sum(axis=1))
    return q * norms[:, None]


def _gram_schmidt_rows(base: np.ndarray) -> np.ndarray | None:
    """Orthonormalize rows (modified Gram-Schmidt); None if degenerate."""
    q = np.empty_like(base)
    for i in range(base.shape[0]):
        v = base[i].copy()
        for j in range(i):
            v -= (v @ q[j]) * q[j]
        nv = float(np.sqrt(v @ v))
        if nv <= _GS_TOL * float(np.sqrt(base[i] @ base[i])):
            return None
        q[i] = v / nv
    return q


def argmax_first(values) -> int:
    """Index of the maximum; ties broken by lowest index."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("argmax_first: empty input")
    if not np.all(np.isfinite(v)):
        raise ValueError("argmax_first: non-finite entry")
    return int(np.argmax(v))


def median(values) -> float:
    """Middle order statistic; mean of the two middle values for even length."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("median: empty input")
    return float(np.median(v))
