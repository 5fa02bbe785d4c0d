"""How well low-rank factors and sketch mappings can represent a weight update."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .calibration import HessianFactor
from .numerics import ShapeError, as_matrix, truncated_svd
from .runtime import SketchedMatrix
from .sketch import SketchConfig, sketch_matrix

ACCOUNTING = "lowrank=rank*(rows+cols); sketch=rows*gpr*2^bits + rows*cols*bits/32"


def _norm_or_raise(delta: np.ndarray) -> float:
    norm = np.linalg.norm(delta)
    if norm == 0:
        raise ValueError("undefined normalization: the update is zero")
    return norm


def lowrank_delta_error(delta, rank: int) -> float:
    """``||D - D_r||_F / ||D||_F`` for the best rank-``rank`` approximation ``D_r``."""
    delta = as_matrix(delta, "delta")
    norm = _norm_or_raise(delta)
    u, s, v = truncated_svd(delta, rank)
    return float(np.linalg.norm(delta - (u * s) @ v.T) / norm)


def project_onto_mapping(delta, sm: SketchedMatrix) -> np.ndarray:
    """Orthogonal projection of every row onto vectors constant on each mapping cluster.

    Each entry becomes the mean of the entries sharing its row, group and
    index. Means are taken relative to the first member of the cluster so
    that projecting twice returns identical bits.
    """
    delta = as_matrix(delta, "delta")
    if delta.shape != (sm.rows, sm.cols):
        raise ShapeError(f"delta {delta.shape} does not match sketch {(sm.rows, sm.cols)}")
    gk = sm.gpr * sm.k
    slot = (np.arange(sm.rows)[:, None] * gk + sm.group_of_column()[None, :] * sm.k + sm.indices).ravel()
    flat = delta.ravel()
    n_slots = sm.rows * gk
    first = np.full(n_slots, flat.size)
    np.minimum.at(first, slot, np.arange(flat.size))
    anchor = np.zeros(n_slots)
    live = first < flat.size
    anchor[live] = flat[first[live]]
    shifted = flat - anchor[slot]
    counts = np.bincount(slot, minlength=n_slots)
    sums = np.bincount(slot, weights=shifted, minlength=n_slots)
    means = anchor.copy()
    means[live] += sums[live] / counts[live]
    return means[slot].reshape(delta.shape)


def sketch_delta_error(delta, sm: SketchedMatrix) -> float:
    """``||D - P(D)||_F / ||D||_F`` with ``P`` the projection onto the mapping's span."""
    delta = as_matrix(delta, "delta")
    norm = _norm_or_raise(delta)
    return float(np.linalg.norm(delta - project_onto_mapping(delta, sm)) / norm)


def lowrank_rank_for(rows: int, cols: int, ratio: float) -> int:
    return int((rows * cols / ratio) // (rows + cols))


def sketch_params(rows: int, cols: int, gpr: int, bits: int) -> float:
    return rows * gpr * 2 ** bits + rows * cols * bits / 32


def sketch_layout_for(rows: int, cols: int, ratio: float) -> tuple[int, int]:
    """``(bits, gpr)`` whose parameter count is closest to ``rows * cols / ratio``.

    Ties go to the smaller count.
    """
    budget = rows * cols / ratio
    best = None
    for bits in (2, 3, 4):
        for gpr in range(1, cols + 1):
            if cols % gpr or 2 ** bits > cols // gpr:
                continue
            p = sketch_params(rows, cols, gpr, bits)
            key = (abs(p - budget), p)
            if best is None or key < best[0]:
                best = (key, bits, gpr)
    if best is None:
        raise ValueError(f"no sketch layout fits {cols} columns")
    return best[1], best[2]


@dataclass
class DeltaReport:
    compression_ratios: list
    lowrank_err: list
    sketch_err: list
    matrix_id: str = ""
    ranks: list = field(default_factory=list)
    layouts: list = field(default_factory=list)
    accounting: str = ACCOUNTING

    def to_csv(self, header_lines=()) -> str:
        lines = [f"# {line}" for line in header_lines]
        lines.append(f"# accounting: {self.accounting}")
        lines.append("ratio,lowrank_err,sketch_err")
        for a, lo, sk in zip(self.compression_ratios, self.lowrank_err, self.sketch_err):
            lines.append(f"{a:g},{lo:.12g},{sk:.12g}")
        return "\n".join(lines) + "\n"


def compare_sweep(w, w_prime, hf: HessianFactor, ratios, cfg: SketchConfig | None = None,
                  threads: int | None = 1, matrix_id: str = "") -> DeltaReport:
    """Low-rank vs sketch errors for ``delta = w_prime - w`` at each compression ratio.

    The sketch mapping comes from sketching the base ``w`` (it is fixed
    before the update exists). ``cfg`` supplies every sketch setting other
    than ``bits`` and ``gpr``, which are chosen per ratio. A ratio whose
    low-rank budget is below rank 1 reports a low-rank error of 1.
    """
    w = as_matrix(w, "base")
    w_prime = as_matrix(w_prime, "tuned")
    if w.shape != w_prime.shape:
        raise ShapeError(f"base {w.shape} and tuned {w_prime.shape} differ")
    ratios = [float(a) for a in ratios]
    if not ratios:
        raise ValueError("empty ratio list")
    delta = w_prime - w
    _norm_or_raise(delta)
    cfg = cfg or SketchConfig()
    rows, cols = w.shape
    sketches = {}
    report = DeltaReport(ratios, [], [], matrix_id)
    for a in ratios:
        if not a > 0:
            raise ValueError(f"compression ratio must be positive, got {a}")
        rank = min(lowrank_rank_for(rows, cols, a), min(rows, cols))
        report.ranks.append(rank)
        report.lowrank_err.append(lowrank_delta_error(delta, rank) if rank >= 1 else 1.0)
        layout = sketch_layout_for(rows, cols, a)
        report.layouts.append(layout)
        if layout not in sketches:
            bits, gpr = layout
            sketches[layout] = sketch_matrix(w, hf, replace(cfg, bits=bits, gpr=gpr), threads=threads)
        report.sketch_err.append(sketch_delta_error(delta, sketches[layout]))
    return report

