"""Signed-random-projection index over a fixed set of action latents.

Maximum-inner-product search is reduced to angular nearest-neighbor search
on a sphere: every action latent gets an extra coordinate
sqrt(C^2 - |l|^2) so all rows have norm exactly C, while the state latent
gets a zero coordinate, which leaves inner products unchanged.  Points are
hashed to the signs of (optionally median-shifted) Gaussian projections
organized in block-orthogonal ensembles; queries probe non-empty buckets in
increasing Hamming distance from the state's code and exactly rescore the
accumulated candidates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .numerics import median, orthogonal_gaussian_ensemble
from .rng import Rng

_NORM_SLACK = 1e-12


def augment_action(latent, c: float) -> np.ndarray:
    """[latent, sqrt(C^2 - |latent|^2)]; the result has norm exactly C."""
    v = np.asarray(latent, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n > c + _NORM_SLACK:
        raise ValueError("norm bound violated")
    radicand = max(c * c - n * n, 0.0)
    return np.concatenate([v, [np.sqrt(radicand)]])


def augment_state(latent) -> np.ndarray:
    v = np.asarray(latent, dtype=np.float64)
    return np.concatenate([v, [0.0]])


def srp_hash(projections: np.ndarray, offsets: np.ndarray, x) -> int:
    """m-bit code; bit i set iff projections[i] . x - offsets[i] > 0."""
    proj = np.asarray(projections, dtype=np.float64) @ np.asarray(x, dtype=np.float64)
    bits = proj - np.asarray(offsets, dtype=np.float64) > 0.0
    code = 0
    for i, b in enumerate(bits):
        if b:
            code |= 1 << i
    return code


@dataclass
class SrpIndex:
    projections: np.ndarray  # (m, d+1)
    offsets: np.ndarray  # (m,)
    norm_bound: float
    codes: np.ndarray  # (N,) uint64
    buckets: dict[int, np.ndarray]  # code -> ascending action indices
    augmented: np.ndarray  # (N, d+1)
    latents: np.ndarray  # (N, d) original action latents
    # CSR view of the buckets in ascending code order, for the query kernel
    bucket_codes: np.ndarray  # (B,) uint64
    bucket_starts: np.ndarray  # (B+1,) int64
    bucket_members: np.ndarray  # (N,) int64

    @property
    def size(self) -> int:
        return self.latents.shape[0]


def build_index(latents: np.ndarray, m: int, median_shift: bool, rng: Rng) -> SrpIndex:
    """Hash all action latents into 2^m sign buckets."""
    lat = np.asarray(latents, dtype=np.float64)
    if lat.ndim != 2 or lat.shape[0] < 1:
        raise ValueError("need an (N, d) latent matrix with N >= 1")
    if not 1 <= m <= 63:
        raise ValueError("need 1 <= m <= 63 projections")
    n, d = lat.shape
    norms = np.linalg.norm(lat, axis=1)
    c = float(norms.max())
    radicand = np.maximum(c * c - norms * norms, 0.0)
    augmented = np.concatenate([lat, np.sqrt(radicand)[:, None]], axis=1)

    blocks = []
    remaining = m
    while remaining > 0:
        b = min(remaining, d + 1)
        blocks.append(orthogonal_gaussian_ensemble(b, d + 1, rng))
        remaining -= b
    projections = np.concatenate(blocks, axis=0)

    proj = augmented @ projections.T  # (N, m)
    if median_shift:
        offsets = np.array([median(proj[:, i]) for i in range(m)])
    else:
        offsets = np.zeros(m)

    bits = proj - offsets[None, :] > 0.0
    codes = np.zeros(n, dtype=np.uint64)
    for i in range(m):
        codes |= bits[:, i].astype(np.uint64) << np.uint64(i)

    order = np.lexsort((np.arange(n), codes))
    sorted_codes = codes[order]
    uniq, starts = np.unique(sorted_codes, return_index=True)
    bucket_starts = np.concatenate([starts, [n]]).astype(np.int64)
    bucket_members = order.astype(np.int64)
    buckets = {
        int(uniq[b]): bucket_members[bucket_starts[b] : bucket_starts[b + 1]].copy()
        for b in range(uniq.size)
    }
    return SrpIndex(
        projections=projections,
        offsets=offsets,
        norm_bound=c,
        codes=codes,
        buckets=buckets,
        augmented=augmented,
        latents=lat.copy(),
        bucket_codes=uniq.astype(np.uint64),
        bucket_starts=bucket_starts,
        bucket_members=bucket_members,
    )


def query(index: SrpIndex, state_latent, budget: int) -> tuple[int, int]:
    """Probe buckets by Hamming distance, rescore candidates exactly.

    Returns (best action index, number of candidates scored).  Buckets are
    visited in (distance, code) order and accumulated whole until at least
    ``budget`` candidates are collected or all buckets are exhausted.
    """
    if index.size == 0:
        raise ValueError("empty index")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    s = np.asarray(state_latent, dtype=np.float64)
    scode = srp_hash(index.projections, index.offsets, augment_state(s))
    return _backend.srp_query(
        index.bucket_codes,
        index.bucket_starts,
        index.bucket_members,
        index.latents,
        s,
        scode,
        int(budget),
    )


def angular_kernel_estimate(x, y, projections: np.ndarray) -> float:
    """Sign-feature estimate of 1 - 2*angle(x, y)/pi; value in [-1, 1]."""
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if not xv.any() or not yv.any():
        raise ValueError("angle undefined for zero vector")
    omega = np.asarray(projections, dtype=np.float64)
    sx = np.where(omega @ xv > 0.0, 1.0, -1.0)
    sy = np.where(omega @ yv > 0.0, 1.0, -1.0)
    return float(sx @ sy) / omega.shape[0]
