"""Slow, obviously-correct reference implementations used only by the tests."""

import itertools

import numpy as np


def naive_matmul(a, b):
    n, m = a.shape
    p = b.shape[1]
    out = np.zeros((n, p))
    for i in range(n):
        for j in range(p):
            s = 0.0
            for t in range(m):
                s += a[i, t] * b[t, j]
            out[i, j] = s
    return out


def jacobi_svd(a, sweeps=60, tol=1e-15):
    """One-sided Jacobi SVD; returns singular values in descending order."""
    u = np.array(a, dtype=np.float64)
    n = u.shape[1]
    for _ in range(sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = u[:, p] @ u[:, p]
                beta = u[:, q] @ u[:, q]
                gamma = u[:, p] @ u[:, q]
                if abs(gamma) <= tol * np.sqrt(alpha * beta) or gamma == 0:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2 * gamma)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1 + zeta * zeta)) if zeta != 0 else 1.0
                c = 1 / np.sqrt(1 + t * t)
                s = c * t
                up = u[:, p].copy()
                u[:, p] = c * up - s * u[:, q]
                u[:, q] = s * up + c * u[:, q]
        if not rotated:
            break
    return np.sort(np.linalg.norm(u, axis=0))[::-1]


def best_contiguous_partition(values, weights, k):
    """Exhaustive search over contiguous partitions of the sorted values."""
    order = np.argsort(values, kind="stable")
    v = np.asarray(values, dtype=np.float64)[order]
    w = np.asarray(weights, dtype=np.float64)[order]
    n = v.size
    parts = min(k, n)
    best = np.inf
    for cuts in itertools.combinations(range(1, n), parts - 1):
        bounds = (0, *cuts, n)
        total = 0.0
        for lo, hi in zip(bounds, bounds[1:]):
            seg_v, seg_w = v[lo:hi], w[lo:hi]
            mean = np.dot(seg_w, seg_v) / seg_w.sum()
            total += np.dot(seg_w, (seg_v - mean) ** 2)
        best = min(best, total)
    return best


def pack_bitwise(indices, bits):
    """Bit-by-bit LSB-first packer for one row."""
    nbits = len(indices) * bits
    out = bytearray((nbits + 7) // 8)
    pos = 0
    for value in indices:
        for b in range(bits):
            if (int(value) >> b) & 1:
                out[pos // 8] |= 1 << (pos % 8)
            pos += 1
    return bytes(out)


def one_hot_mapping(indices_row, k):
    """Explicit k x c one-hot mapping for one group of one row."""
    m = np.zeros((k, len(indices_row)))
    m[np.asarray(indices_row), np.arange(len(indices_row))] = 1.0
    return m


def cluster_least_squares(delta_row, labels, k):
    """argmin_z ||delta - z M|| by explicit least squares on the one-hot design."""
    m = one_hot_mapping(labels, k)
    used = m.sum(axis=1) > 0
    z, *_ = np.linalg.lstsq(m[used].T, delta_row, rcond=None)
    return z @ m[used]
