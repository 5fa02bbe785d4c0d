"""Learning sketches of weight rows with Hessian-weighted clustering.

Each row is split into ``gpr`` contiguous groups. For every group the
learner clusters the current (already error-compensated) values with
weights ``(1 / diag(H^-1))**s``, takes the weighted cluster centroids as
the group's shared values, then maps columns one at a time to their
nearest shared value and pushes the rounding error onto the columns not
yet mapped, block by block, through the upper Cholesky factor of ``H^-1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import HessianFactor
from .kmeans import Assignment, weighted_kmeans
from .numerics import ShapeError, as_matrix, make_rng
from .runtime import VALID_BITS, SketchedMatrix, map_row_chunks


@dataclass(frozen=True)
class SketchConfig:
    bits: int = 4
    gpr: int = 1
    block_b: int = 128
    exponent_s: float = 3.0
    damp: float = 0.01
    kmeans_iters: int = 100
    kmeans_tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.bits not in VALID_BITS:
            raise ValueError(f"bits must be one of {VALID_BITS}, got {self.bits}")
        if self.gpr < 1:
            raise ValueError(f"gpr must be >= 1, got {self.gpr}")
        if self.block_b < 1:
            raise ValueError(f"block size must be >= 1, got {self.block_b}")

    @property
    def k(self) -> int:
        return 2 ** self.bits


def build_sketching_matrix(assign: Assignment, weights) -> np.ndarray:
    """Sketching matrix ``S`` (len x k) with ``values @ S`` equal to the cluster centroids.

    ``S[i, labels[i]]`` is ``weights[i]`` normalized by the total weight of
    that cluster; every other entry is zero. Columns of empty clusters are zero.
    """
    weights = np.asarray(weights, dtype=np.float64)
    labels = np.asarray(assign.labels)
    k = assign.centers.size
    if labels.shape != weights.shape:
        raise ShapeError(f"labels {labels.shape} and weights {weights.shape} differ")
    totals = np.bincount(labels, weights=weights, minlength=k)
    s = np.zeros((labels.size, k))
    s[np.arange(labels.size), labels] = weights / totals[labels]
    return s


def rtn(value: float, centers) -> tuple[int, float]:
    """Round to nearest: ``(index, center)`` of the closest center, lower index on ties."""
    centers = np.asarray(centers, dtype=np.float64)
    idx = int(np.argmin(np.abs(centers - value)))
    return idx, float(centers[idx])


def kmeans_weights(hf: HessianFactor, lo: int, hi: int, exponent_s: float) -> np.ndarray:
    return (1.0 / hf.inv_diag[lo:hi]) ** exponent_s


def _sketch_rows(w: np.ndarray, row_ids, hf: HessianFactor, cfg: SketchConfig, compensate: bool):
    """Sketch a block of rows in place of a copy; row results are bitwise independent of the block."""
    w = np.array(w, dtype=np.float64)
    n, c = w.shape
    k, g = cfg.k, cfg.gpr
    size = c // g
    d = hf.chol_upper
    rngs = [make_rng(cfg.seed ^ int(r)) for r in row_ids]
    sketched = np.empty((n, g, k))
    indices = np.empty((n, c), dtype=np.uint8)

    for grp in range(g):
        lo, hi = grp * size, (grp + 1) * size
        weights = kmeans_weights(hf, lo, hi, cfg.exponent_s)
        for t in range(n):
            assign = weighted_kmeans(w[t, lo:hi], weights, k, rngs[t], cfg.kmeans_iters, cfg.kmeans_tol)
            # the k-means centroids are w @ S for nonempty clusters; empty ones keep their seeded value
            sketched[t, grp] = assign.centers
        centers = sketched[:, grp, :]
        for i in range(lo, hi, cfg.block_b):
            end = min(i + cfg.block_b, hi)
            err = np.zeros((n, end - i))
            for j in range(i, end):
                col = w[:, j]
                m = np.argmin(np.abs(centers - col[:, None]), axis=1)
                indices[:, j] = m
                q = centers[np.arange(n), m]
                if compensate:
                    e = (col - q) / d[j, j]
                    err[:, j - i] = e
                    w[:, j:end] -= e[:, None] * d[j, j:end]
            if compensate and end < c:
                tail = d[i:end, end:]
                for t in range(n):
                    w[t, end:] -= err[t] @ tail
    return sketched, indices


def _check(c: int, hf: HessianFactor, cfg: SketchConfig):
    if c % cfg.gpr:
        raise ValueError(f"gpr={cfg.gpr} does not divide {c} columns")
    if cfg.k > c // cfg.gpr:
        raise ValueError(f"k={cfg.k} exceeds the group length {c // cfg.gpr}")
    if hf.dim != c:
        raise ShapeError(f"Hessian is {hf.dim}x{hf.dim} but rows have {c} columns")


def learn_to_sketch_row(w, hf: HessianFactor, cfg: SketchConfig, row_id: int = 0, compensate: bool = True):
    """Sketch a single row.

    Returns:
        ``(sketched, indices)`` with shapes (gpr, k) and (c,). ``row_id``
        picks the row's random stream (``cfg.seed ^ row_id``), which matters
        only for randomized k-means starts.
    """
    w = np.asarray(w, dtype=np.float64).ravel()
    if not np.all(np.isfinite(w)):
        raise ValueError("row contains non-finite values")
    _check(w.size, hf, cfg)
    sketched, indices = _sketch_rows(w[None, :], [row_id], hf, cfg, compensate)
    return sketched[0], indices[0]


def sketch_matrix(w, hf: HessianFactor, cfg: SketchConfig, threads: int | None = 1,
                  compensate: bool = True) -> SketchedMatrix:
    """Sketch every row of ``w``; the output is bit-identical for any thread count."""
    w = as_matrix(w, "weights")
    _check(w.shape[1], hf, cfg)
    parts = map_row_chunks(
        lambda lo, hi: _sketch_rows(w[lo:hi], range(lo, hi), hf, cfg, compensate), w.shape[0], threads
    )
    sketched = np.concatenate([p[0] for p in parts], axis=0)
    indices = np.concatenate([p[1] for p in parts], axis=0)
    return SketchedMatrix(sketched, indices, cfg.bits)


def count_trainable_params(layer_shapes, cfg_or_gpr, bits: int | None = None) -> int:
    """Total shared values: ``rows * gpr * 2**bits`` summed over ``(rows, cols)`` shapes.

    Accepts either a :class:`SketchConfig` or explicit ``gpr`` and ``bits``.
    """
    if isinstance(cfg_or_gpr, SketchConfig):
        gpr, bits = cfg_or_gpr.gpr, cfg_or_gpr.bits
    else:
        gpr = int(cfg_or_gpr)
    return sum(int(rows) * gpr * 2 ** bits for rows, _ in layer_shapes)


def row_objective(w, w_hat, x) -> float:
    """``||w X - w_hat X||^2`` for a row (or matrix) and calibration inputs."""
    diff = (np.asarray(w, dtype=np.float64) - np.asarray(w_hat, dtype=np.float64)) @ x
    return float(np.sum(diff ** 2))
