"""Layer-input statistics: the Hessian ``2 X X^T`` and its factors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import NotPositiveDefiniteError, as_matrix, cholesky, spd_inverse

DEFAULT_DAMP = 0.01


class SingularHessianError(ValueError):
    pass


@dataclass(frozen=True)
class HessianFactor:
    """Hessian of the row objective plus the pieces the sketch learner reads.

    Attributes:
        h: ``2 X X^T + damp * mean(diag(2 X X^T)) * I``.
        h_inv: inverse of ``h``.
        chol_upper: upper Cholesky factor of ``h_inv`` (``U^T U = h_inv``).
        damp_lambda: the relative dampening used.
        inv_diag: ``diag(h_inv)``; drives the k-means weights.
    """

    h: np.ndarray
    h_inv: np.ndarray
    chol_upper: np.ndarray
    damp_lambda: float
    inv_diag: np.ndarray

    @property
    def dim(self) -> int:
        return self.h.shape[0]


def build_hessian(x, damp: float = DEFAULT_DAMP) -> HessianFactor:
    """Build a :class:`HessianFactor` from calibration inputs.

    Args:
        x: calibration matrix of shape (features, samples).
        damp: relative diagonal dampening, scaled by the mean Hessian diagonal.
    """
    x = as_matrix(x, "calibration")
    if damp < 0 or not np.isfinite(damp):
        raise ValueError(f"dampening must be a finite non-negative number, got {damp}")
    h = 2.0 * (x @ x.T)
    h = 0.5 * (h + h.T)
    if damp > 0:
        h = h + damp * np.mean(np.diag(h)) * np.eye(h.shape[0])
    try:
        h_inv = spd_inverse(h)
        chol_upper = cholesky(h_inv, upper=True)
    except NotPositiveDefiniteError as err:
        raise SingularHessianError(
            f"singular Hessian, increase dampening (pivot {err.pivot} failed with damp={damp})"
        ) from err
    inv_diag = np.diag(h_inv).copy()
    if np.any(inv_diag <= 0):  # pragma: no cover - excluded by a successful factorization
        raise SingularHessianError("singular Hessian, increase dampening")
    return HessianFactor(h=h, h_inv=h_inv, chol_upper=chol_upper, damp_lambda=float(damp), inv_diag=inv_diag)


def synth_calibration(c: int, m: int, rng: np.random.Generator, distribution: str = "gaussian") -> np.ndarray:
    """Synthetic calibration inputs of shape (c, m).

    ``heavy_tail`` scales 5% of the columns (at least one) by 10, which
    produces outliers in the inverse-Hessian diagonal.
    """
    if c < 1 or m < 1:
        raise ValueError(f"calibration dimensions must be positive, got c={c}, m={m}")
    x = rng.standard_normal((c, m))
    if distribution == "gaussian":
        return x
    if distribution == "heavy_tail":
        n_loud = max(1, int(round(0.05 * m)))
        loud = rng.choice(m, size=n_loud, replace=False)
        x[:, loud] *= 10.0
        return x
    raise ValueError(f"unknown calibration distribution {distribution!r}")
