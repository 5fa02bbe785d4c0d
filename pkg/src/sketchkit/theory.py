"""Low-rank vs random-fold sketch errors for updates with power-law spectra.

A square update ``D`` (n x n) has squared singular values ``i**-eta``.
Under compression factor ``alpha`` the best low-rank approximation keeps
``n / (2 alpha)`` singular values, while a balanced random fold (buckets
of ``alpha`` signed entries per row, averaged) keeps ``1 / alpha`` of the
energy in expectation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import make_rng, random_orthogonal


@dataclass(frozen=True)
class PowerLawSpec:
    n: int
    eta: float
    alpha: int

    def __post_init__(self):
        if self.n < 1 or self.alpha < 1:
            raise ValueError(f"n and alpha must be positive, got n={self.n}, alpha={self.alpha}")
        if self.n % self.alpha:
            raise ValueError(f"alpha={self.alpha} must divide n={self.n}")
        if not 0 <= self.eta < 1:
            raise ValueError(f"eta must lie in [0, 1), got {self.eta}")

    def spectrum_sq(self) -> np.ndarray:
        return np.arange(1, self.n + 1, dtype=np.float64) ** -self.eta

    @property
    def retained_rank(self) -> int:
        return self.n // (2 * self.alpha)


def energy(spec: PowerLawSpec) -> float:
    """``||D||_F^2 = sum_i i**-eta``."""
    return float(np.sum(spec.spectrum_sq()))


def lowrank_error_theory(spec: PowerLawSpec) -> float:
    """Squared error of the best rank ``n / (2 alpha)`` approximation (exact tail sum)."""
    if spec.n < 2 * spec.alpha:
        raise ValueError(f"n={spec.n} leaves no rank budget at alpha={spec.alpha}")
    return float(np.sum(spec.spectrum_sq()[spec.retained_rank:]))


def sketch_error_theory(spec: PowerLawSpec) -> float:
    """Expected squared error of a balanced random fold: ``(alpha - 1) / alpha * ||D||^2``."""
    return (spec.alpha - 1) / spec.alpha * energy(spec)


def crossover_eta(alpha: float) -> float:
    """``1 - log(alpha) / log(2 alpha)``; below it the fold wins for large n."""
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    return 1.0 - math.log(alpha) / math.log(2 * alpha)


def energy_bounds(n: int, eta: float) -> tuple[float, float]:
    """Integral bounds ``L(n) < sum_{i<=n} i**-eta < R(n)`` for ``0 <= eta < 1``."""
    p = 1.0 - eta
    lower = ((n + 1) ** p - 1) / p
    upper = 1 + (n ** p - 1) / p
    return lower, upper


def synth_powerlaw(rows: int, eta: float, rng: np.random.Generator, cols: int | None = None) -> np.ndarray:
    """``U diag(rho) V^T`` with Haar-random orthogonal factors and ``rho_i**2 = i**-eta``."""
    cols = rows if cols is None else cols
    r = min(rows, cols)
    u = random_orthogonal(rows, rng)[:, :r]
    v = random_orthogonal(cols, rng)[:, :r]
    rho = np.arange(1, r + 1, dtype=np.float64) ** (-eta / 2)
    return (u * rho) @ v.T


def random_fold(rows: int, n: int, alpha: int, rng: np.random.Generator):
    """Independent balanced folds for each of ``rows`` rows.

    Returns:
        ``(buckets, signs)``: ``buckets[r, i]`` in ``[0, n / alpha)`` with
        exactly ``alpha`` members per bucket, from a random permutation cut
        into consecutive runs; ``signs[r, i]`` in ``{-1, +1}``.
    """
    if n % alpha:
        raise ValueError(f"alpha={alpha} must divide n={n}")
    perm = rng.permuted(np.tile(np.arange(n, dtype=np.int32), (rows, 1)), axis=1)
    buckets = np.empty((rows, n), dtype=np.int32)
    np.put_along_axis(buckets, perm, np.broadcast_to(np.arange(n, dtype=np.int32) // alpha, (rows, n)), axis=1)
    signs = rng.choice(np.array([-1, 1], dtype=np.int8), size=(rows, n))
    return buckets, signs


def fold_estimate(delta: np.ndarray, buckets: np.ndarray, signs: np.ndarray, alpha: int) -> np.ndarray:
    """``d_s[i] = g(i) * sum_{h(j) = h(i)} g(j) d[j] / alpha`` row by row."""
    rows, n = delta.shape
    nb = n // alpha
    g = signs.astype(np.float64)
    slot = (np.arange(rows, dtype=np.int64)[:, None] * nb + buckets).ravel()
    sums = np.bincount(slot, weights=(g * delta).ravel(), minlength=rows * nb)
    return g * (sums[slot].reshape(rows, n) / alpha)


def fold_error(delta, buckets, signs, alpha) -> float:
    return float(np.sum((delta - fold_estimate(delta, buckets, signs, alpha)) ** 2))


@dataclass
class FoldResult:
    sketch_mean: float
    sketch_std: float
    lowrank_exact: float
    errors: list


def monte_carlo_fold(spec: PowerLawSpec, trials: int, seed: int = 0, flip_signs: bool = False) -> FoldResult:
    """Average empirical fold error over synthesized power-law updates.

    Trial ``t`` draws everything from ``make_rng(seed ^ t)``. ``flip_signs``
    negates every fold sign, which must leave each trial's error unchanged.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    errors = []
    for t in range(trials):
        rng = make_rng(seed ^ t)
        delta = synth_powerlaw(spec.n, spec.eta, rng)
        buckets, signs = random_fold(spec.n, spec.n, spec.alpha, rng)
        if flip_signs:
            signs = -signs
        errors.append(fold_error(delta, buckets, signs, spec.alpha))
    errors_arr = np.array(errors)
    std = float(errors_arr.std(ddof=1)) if trials > 1 else 0.0
    low = lowrank_error_theory(spec) if spec.n >= 2 * spec.alpha else float("nan")
    return FoldResult(float(errors_arr.mean()), std, low, errors)


def empirical_crossover(n: int, alpha: int, trials: int = 1, seed: int = 0,
                        lo: float = 0.0, hi: float = 0.95, tol: float = 1e-3) -> float:
    """Bisect for the eta where the mean empirical fold error meets the exact low-rank error.

    The orthogonal factors and folds of each trial are drawn once and
    reused for every eta, so the empirical curve is smooth in eta.
    """
    draws = []
    for t in range(trials):
        rng = make_rng(seed ^ t)
        u = random_orthogonal(n, rng)
        v = random_orthogonal(n, rng)
        buckets, signs = random_fold(n, n, alpha, rng)
        draws.append((u, v, buckets, signs))

    def gap(eta):
        spec = PowerLawSpec(n, eta, alpha)
        rho = spec.spectrum_sq() ** 0.5
        emp = np.mean([fold_error((u * rho) @ v.T, b, s, alpha) for u, v, b, s in draws])
        return emp - lowrank_error_theory(spec)

    g_lo, g_hi = gap(lo), gap(hi)
    if np.sign(g_lo) == np.sign(g_hi):
        raise ValueError(f"no crossover in [{lo}, {hi}]: gaps {g_lo:.4g}, {g_hi:.4g}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if np.sign(g_mid) == np.sign(g_lo):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def exact_crossover(n: int, alpha: int, lo: float = 0.0, hi: float = 0.95, tol: float = 1e-9) -> float:
    """Bisection on the exact partial sums at finite ``n``."""
    def gap(eta):
        spec = PowerLawSpec(n, eta, alpha)
        return sketch_error_theory(spec) - lowrank_error_theory(spec)

    g_lo = gap(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if np.sign(gap(mid)) == np.sign(g_lo):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
