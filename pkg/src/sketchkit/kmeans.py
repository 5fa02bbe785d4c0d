"""Weighted one-dimensional k-means.

Lloyd iterations on the weighted squared error. The default start is the
globally optimal contiguous partition of the sorted values, found by
dynamic programming with divide-and-conquer row minima (1-D clusters are
contiguous at the optimum, and the segment cost satisfies the quadrangle
inequality). Weighted k-means++ seeding is kept as an alternative start.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np


@dataclass
class Assignment:
    """Result of :func:`weighted_kmeans`.

    ``centers`` are sorted ascending and ``labels`` index into them.
    ``history`` holds the objective after every Lloyd iteration.
    """

    labels: np.ndarray
    centers: np.ndarray
    objective: float
    history: list = field(default_factory=list)


def nearest(values: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Index of the closest center for every value; ties go to the lower index."""
    return np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)


def weighted_objective(values, weights, centers, labels) -> float:
    return float(np.sum(weights * (centers[labels] - values) ** 2))


@numba.njit(cache=True)
def _segment_cost(cw, cs, cq, j, i):
    w = cw[i] - cw[j]
    if w <= 0.0:
        return 0.0
    s = cs[i] - cs[j]
    c = cq[i] - cq[j] - s * s / w
    return c if c > 0.0 else 0.0


@numba.njit(cache=True)
def _fill_layer(prev, cur, arg, cw, cs, cq, ilo, ihi, jlo, jhi):
    # cur[i] = min_{jlo <= j <= min(i-1, jhi)} prev[j] + cost(j, i), argmin monotone in i
    stack = [(ilo, ihi, jlo, jhi)]
    while len(stack) > 0:
        a, b, lo, hi = stack.pop()
        if a > b:
            continue
        mid = (a + b) // 2
        best = np.inf
        best_j = lo
        top = min(mid - 1, hi)
        for j in range(lo, top + 1):
            v = prev[j] + _segment_cost(cw, cs, cq, j, mid)
            if v < best:
                best = v
                best_j = j
        cur[mid] = best
        arg[mid] = best_j
        stack.append((a, mid - 1, lo, best_j))
        stack.append((mid + 1, b, best_j, hi))


@numba.njit(cache=True)
def _optimal_breaks(v, w, k):
    n = v.size
    cw = np.zeros(n + 1)
    cs = np.zeros(n + 1)
    cq = np.zeros(n + 1)
    for i in range(n):
        cw[i + 1] = cw[i] + w[i]
        cs[i + 1] = cs[i] + w[i] * v[i]
        cq[i + 1] = cq[i] + w[i] * v[i] * v[i]
    prev = np.full(n + 1, np.inf)
    for i in range(1, n + 1):
        prev[i] = _segment_cost(cw, cs, cq, 0, i)
    args = np.zeros((k, n + 1), dtype=np.int64)
    for layer in range(1, k):
        cur = np.full(n + 1, np.inf)
        _fill_layer(prev, cur, args[layer], cw, cs, cq, layer + 1, n, layer, n - 1)
        prev = cur
    starts = np.zeros(k, dtype=np.int64)
    end = n
    for layer in range(k - 1, 0, -1):
        starts[layer] = args[layer, end]
        end = starts[layer]
    return starts


def optimal_centers(values: np.ndarray, weights: np.ndarray, k: int) -> np.ndarray:
    """Centers of the optimal weighted 1-D k-partition (length ``k``, ascending).

    When there are fewer points than ``k`` the surplus centers repeat the
    largest value.
    """
    order = np.argsort(values, kind="stable")
    v = values[order]
    w = weights[order]
    segments = min(k, v.size)
    starts = _optimal_breaks(v, w, segments)
    bounds = np.append(starts, v.size)
    centers = np.full(k, v[-1])
    for j in range(segments):
        lo, hi = bounds[j], bounds[j + 1]
        centers[j] = np.dot(w[lo:hi], v[lo:hi]) / w[lo:hi].sum()
    return np.sort(centers)


def _seed_plus_plus(values, weights, k, rng):
    n = values.size
    centers = np.empty(k)
    centers[0] = values[rng.choice(n, p=weights / weights.sum())]
    d2 = (values - centers[0]) ** 2
    for j in range(1, k):
        score = weights * d2
        total = score.sum()
        if total > 0:
            pick = rng.choice(n, p=score / total)
        else:
            pick = rng.choice(n, p=weights / weights.sum())
        centers[j] = values[pick]
        d2 = np.minimum(d2, (values - centers[j]) ** 2)
    return centers


def _centroids(values, weights, labels, k):
    # mean taken relative to each cluster's first member: a cluster of equal values maps back exactly
    _, first = np.unique(labels, return_index=True)
    anchor = np.zeros(k)
    anchor[labels[first]] = values[first]
    wsum = np.bincount(labels, weights=weights, minlength=k)
    shift = np.bincount(labels, weights=weights * (values - anchor[labels]), minlength=k)
    live = wsum > 0
    means = anchor.copy()
    means[live] += shift[live] / wsum[live]
    return live, means


def _lloyd(values, weights, centers, k, iters, tol):
    history = []
    labels = nearest(values, centers)
    prev = np.inf
    for _ in range(max(iters, 1)):
        wsum = np.bincount(labels, weights=weights, minlength=k)
        for j in np.flatnonzero(wsum == 0):
            resid = weights * (values - centers[labels]) ** 2
            p = int(np.argmax(resid))
            if resid[p] == 0:
                break
            centers[j] = values[p]
            labels = nearest(values, centers)
        live, means = _centroids(values, weights, labels, k)
        centers[live] = means[live]
        obj = weighted_objective(values, weights, centers, labels)
        history.append(obj)
        new_labels = nearest(values, centers)
        if np.array_equal(new_labels, labels) or prev - obj <= tol * prev:
            break
        labels = new_labels
        prev = obj
    return labels, centers, history


def weighted_kmeans(values, weights, k: int, rng: np.random.Generator | None = None,
                    iters: int = 100, tol: float = 1e-8, init: str = "optimal",
                    n_init: int = 1) -> Assignment:
    """Minimize ``sum_i weights[i] * (center[label[i]] - values[i])**2`` over ``k`` centers.

    Args:
        values, weights: 1-D arrays of equal length; weights strictly positive.
        k: number of centers.
        rng: generator for ``init="kmeans++"``; unused by the optimal start.
        iters: maximum Lloyd iterations per start.
        tol: stop once the relative objective decrease falls below this.
        init: ``"optimal"`` (exact dynamic program) or ``"kmeans++"``.
        n_init: number of k-means++ restarts; the lowest objective wins.

    Empty clusters are re-seeded at the point with the largest weighted
    residual. Centers come back as the weighted centroids of their
    clusters, sorted ascending, with labels remapped to match.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    weights = np.asarray(weights, dtype=np.float64).ravel()
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if values.size < 1 or values.size != weights.size:
        raise ValueError(f"values ({values.size}) and weights ({weights.size}) must be non-empty and equal length")
    if not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite")
    if np.any(weights <= 0):
        raise ValueError("weights must be strictly positive")
    if not np.all(np.isfinite(values)):
        raise ValueError("values must be finite")

    if init == "optimal":
        starts = [optimal_centers(values, weights, k)]
    elif init == "kmeans++":
        if rng is None:
            raise ValueError("kmeans++ initialization needs an rng")
        starts = [_seed_plus_plus(values, weights, k, rng) for _ in range(max(n_init, 1))]
    else:
        raise ValueError(f"unknown init {init!r}")

    best = None
    for centers in starts:
        labels, centers, history = _lloyd(values, weights, centers, k, iters, tol)
        if best is None or history[-1] < best[2]:
            best = (labels, centers, history[-1], history)

    labels, centers, obj, history = best
    order = np.argsort(centers, kind="stable")
    rank = np.empty(k, dtype=np.int64)
    rank[order] = np.arange(k)
    return Assignment(labels=rank[labels], centers=centers[order], objective=obj, history=history)
