"""Sketched matrices at run time: reconstruction, products and gradients.

A sketched matrix stores ``k`` shared values per row group and, for every
original entry, the index of the shared value it maps to. The one-hot
mapping matrix is never materialized; lookups and scatter-adds stand in
for products with it.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .numerics import ShapeError, as_matrix

VALID_BITS = (2, 3, 4)
THREADS_ENV = "SKETCHKIT_THREADS"


def resolve_threads(threads: int | None) -> int:
    """``None`` reads ``SKETCHKIT_THREADS`` (default 1); ``0`` means all cores."""
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    if threads < 0:
        raise ValueError(f"thread count must be >= 0, got {threads}")
    if threads == 0:
        threads = os.cpu_count() or 1
    return threads


def row_chunks(rows: int, threads: int) -> list[tuple[int, int]]:
    n = max(1, min(threads, rows))
    edges = np.linspace(0, rows, n + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def map_row_chunks(fn, rows: int, threads: int | None):
    """Run ``fn(lo, hi)`` over contiguous row ranges; results come back in row order."""
    chunks = row_chunks(rows, resolve_threads(threads))
    if len(chunks) == 1:
        return [fn(*chunks[0])]
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        return list(pool.map(lambda ab: fn(*ab), chunks))


@dataclass
class SketchedMatrix:
    """Trainable sketch of an ``rows x cols`` weight matrix.

    Attributes:
        sketched: float64 array (rows, gpr, k) of shared values.
        indices: integer array (rows, cols); entry ``[i, j]`` selects
            ``sketched[i, group(j), indices[i, j]]``.
        bits: index width; ``k == 2**bits``.
    """

    sketched: np.ndarray
    indices: np.ndarray
    bits: int

    def __post_init__(self):
        self.sketched = np.asarray(self.sketched, dtype=np.float64)
        self.indices = np.asarray(self.indices)
        if self.bits not in VALID_BITS:
            raise ValueError(f"bits must be one of {VALID_BITS}, got {self.bits}")
        if self.sketched.ndim != 3 or self.indices.ndim != 2:
            raise ShapeError(f"sketched must be 3-D and indices 2-D, got {self.sketched.shape} and {self.indices.shape}")
        r, g, k = self.sketched.shape
        if k != 2 ** self.bits:
            raise ShapeError(f"sketched has {k} values per group but bits={self.bits} needs {2 ** self.bits}")
        if self.indices.shape[0] != r:
            raise ShapeError(f"indices have {self.indices.shape[0]} rows, sketched has {r}")
        if g < 1 or self.indices.shape[1] % g:
            raise ShapeError(f"gpr={g} does not divide {self.indices.shape[1]} columns")
        if not np.issubdtype(self.indices.dtype, np.integer):
            raise TypeError("indices must be integers")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= k):
            raise ValueError(f"indices must lie in [0, {k})")
        if not np.all(np.isfinite(self.sketched)):
            raise ValueError("sketched parameters must be finite")

    @property
    def rows(self) -> int:
        return self.sketched.shape[0]

    @property
    def cols(self) -> int:
        return self.indices.shape[1]

    @property
    def gpr(self) -> int:
        return self.sketched.shape[1]

    @property
    def k(self) -> int:
        return self.sketched.shape[2]

    @property
    def group_size(self) -> int:
        return self.cols // self.gpr

    def group_of_column(self) -> np.ndarray:
        return np.arange(self.cols) * self.gpr // self.cols

    def with_sketched(self, sketched) -> "SketchedMatrix":
        return SketchedMatrix(np.array(sketched, dtype=np.float64), self.indices, self.bits)

    def trainable_params(self) -> int:
        return self.rows * self.gpr * self.k


def _reconstruct_rows(sm: SketchedMatrix, lo: int, hi: int) -> np.ndarray:
    flat = sm.sketched[lo:hi].reshape(hi - lo, sm.gpr * sm.k)
    slot = sm.group_of_column()[None, :] * sm.k + sm.indices[lo:hi]
    return np.take_along_axis(flat, slot, axis=1)


def reconstruct(sm: SketchedMatrix, threads: int | None = 1) -> np.ndarray:
    """Dense ``rows x cols`` weights: a lookup of every index in its group's values."""
    parts = map_row_chunks(lambda lo, hi: _reconstruct_rows(sm, lo, hi), sm.rows, threads)
    return np.vstack(parts)


def forward(sm: SketchedMatrix, x, threads: int | None = 1) -> np.ndarray:
    """``reconstruct(sm) @ x``, reconstructing one row block at a time."""
    x = as_matrix(x, "x")
    if x.shape[0] != sm.cols:
        raise ShapeError(f"cannot multiply sketched {sm.rows}x{sm.cols} by {x.shape[0]}x{x.shape[1]}")
    parts = map_row_chunks(lambda lo, hi: _reconstruct_rows(sm, lo, hi) @ x, sm.rows, threads)
    return np.vstack(parts)


def _grad_rows(sm: SketchedMatrix, upstream: np.ndarray, lo: int, hi: int) -> np.ndarray:
    g, k = sm.gpr, sm.k
    slot = sm.group_of_column()[None, :] * k + sm.indices[lo:hi]
    out = np.empty((hi - lo, g, k))
    for i in range(hi - lo):
        # bincount accumulates in input order, i.e. ascending column
        out[i] = np.bincount(slot[i], weights=upstream[lo + i], minlength=g * k).reshape(g, k)
    return out


def grad_sketched(sm: SketchedMatrix, upstream, threads: int | None = 1) -> np.ndarray:
    """Gradient w.r.t. the sketched values given ``dL/dW_hat``.

    ``grad[i, g, m]`` sums ``upstream[i, j]`` over the columns ``j`` of group
    ``g`` whose index is ``m``. Each row accumulates privately, so the result
    does not depend on ``threads``.
    """
    upstream = as_matrix(upstream, "upstream")
    if upstream.shape != (sm.rows, sm.cols):
        raise ShapeError(f"upstream has shape {upstream.shape}, expected {(sm.rows, sm.cols)}")
    parts = map_row_chunks(lambda lo, hi: _grad_rows(sm, upstream, lo, hi), sm.rows, threads)
    return np.concatenate(parts, axis=0)


def row_bytes(cols: int, bits: int) -> int:
    return (cols * bits + 7) // 8


def pack_indices(indices, bits: int) -> bytes:
    """Pack an index matrix row by row into an LSB-first bit stream.

    Each row starts on a byte boundary and takes ``ceil(cols * bits / 8)``
    bytes; within a row, index ``j`` occupies bits ``j*bits`` to
    ``(j+1)*bits - 1`` counting from the least significant bit of byte 0.
    """
    if bits not in VALID_BITS:
        raise ValueError(f"bits must be one of {VALID_BITS}, got {bits}")
    idx = np.asarray(indices)
    if idx.ndim == 1:
        idx = idx[None, :]
    if idx.size and (idx.min() < 0 or idx.max() >= 1 << bits):
        raise ValueError(f"indices do not fit in {bits} bits")
    rows, cols = idx.shape
    nbytes = row_bytes(cols, bits)
    out = bytearray()
    step = max(1, (1 << 22) // max(cols * bits, 1))
    for lo in range(0, rows, step):
        block = idx[lo:lo + step].astype(np.uint8)
        bitplanes = (block[:, :, None] >> np.arange(bits, dtype=np.uint8)) & 1
        stream = np.zeros((block.shape[0], nbytes * 8), dtype=np.uint8)
        stream[:, :cols * bits] = bitplanes.reshape(block.shape[0], cols * bits)
        out += np.packbits(stream, axis=1, bitorder="little").tobytes()
    return bytes(out)


def unpack_indices(data: bytes, rows: int, cols: int, bits: int) -> np.ndarray:
    """Inverse of :func:`pack_indices`; returns a uint8 array (rows, cols)."""
    if bits not in VALID_BITS:
        raise ValueError(f"bits must be one of {VALID_BITS}, got {bits}")
    nbytes = row_bytes(cols, bits)
    expected = rows * nbytes
    if len(data) < expected:
        raise ValueError(f"truncated index stream: expected {expected} bytes, got {len(data)}")
    raw = np.frombuffer(data, dtype=np.uint8, count=expected).reshape(rows, nbytes)
    stream = np.unpackbits(raw, axis=1, bitorder="little")[:, :cols * bits].reshape(rows, cols, bits)
    weights = (1 << np.arange(bits)).astype(np.uint8)
    return (stream * weights).sum(axis=2, dtype=np.uint8)
