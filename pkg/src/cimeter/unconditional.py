"""Unconditional dependence measures: kernel distance, HSIC, and distance
covariance, all as plug-in V-statistics.

With distance-induced kernels the HSIC value coincides with the distance
covariance built from the underlying semimetrics, for any choice of
anchor; the test suite asserts this as a finite-sample identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import InputError, NumericalIntegrityError

__all__ = ["PairedSample", "MeasureResult", "mmd_squared", "hsic_v", "dcov_v"]

# Squared measures may round slightly below zero; anything below this is a bug.
CLAMP_FLOOR = -1e-10


@dataclass(frozen=True)
class PairedSample:
    """Aligned samples: row ``i`` holds the pair ``(x[i], y[i])``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x.reshape(-1, 1) if x.ndim < 2 else x)
        object.__setattr__(self, "y", y.reshape(-1, 1) if y.ndim < 2 else y)
        if self.x.shape[0] != self.y.shape[0]:
            raise InputError(
                f"row count mismatch: x has {self.x.shape[0]}, y has {self.y.shape[0]}")
        if self.x.shape[0] == 0:
            raise InputError("empty sample")
        if not (np.isfinite(self.x).all() and np.isfinite(self.y).all()):
            raise InputError("sample contains non-finite values")

    @property
    def n(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class MeasureResult:
    """A computed measure value with the parameters that produced it."""

    value: float
    estimator: str
    n: int
    params: dict = field(default_factory=dict)


def clamp_squared(value: float, params: dict) -> float:
    """Clamp rounding-level negatives of squared measures to zero.

    Values at or below ``CLAMP_FLOOR`` indicate a genuine defect and raise
    :class:`NumericalIntegrityError`; clamping is recorded in ``params``.
    """
    if value < 0.0:
        if value <= CLAMP_FLOOR:
            raise NumericalIntegrityError(
                f"squared measure is {value}, below the {CLAMP_FLOOR} integrity floor")
        params["clamped"] = True
        return 0.0
    return value


def mmd_squared(k: geometry.KernelSpec, sample_p, sample_q) -> MeasureResult:
    """Squared kernel distance between two samples (V-statistic).

    ``E k(X,X') + E k(Y,Y') - 2 E k(X,Y)`` with all expectations replaced
    by empirical means over all pairs.
    """
    p = np.asarray(sample_p, dtype=float)
    q = np.asarray(sample_q, dtype=float)
    if p.size == 0 or q.size == 0:
        raise InputError("empty sample")
    p = p.reshape(-1, 1) if p.ndim < 2 else p
    q = q.reshape(-1, 1) if q.ndim < 2 else q
    if p.shape[1] != q.shape[1]:
        raise InputError(f"dimension mismatch: {p.shape[1]} vs {q.shape[1]}")
    k = geometry.resolve_kernel(k, np.concatenate([p, q], axis=0))
    kpp = geometry.pairwise_kernel(k, p)
    kqq = geometry.pairwise_kernel(k, q)
    kpq = geometry.pairwise_kernel(k, p, q)
    value = float(kpp.mean() + kqq.mean() - 2.0 * kpq.mean())
    params = {"kernel": repr(k)}
    value = clamp_squared(value, params)
    return MeasureResult(value=value, estimator="mmd_squared", n=p.shape[0], params=params)


def _three_term_vstat(a: np.ndarray, b: np.ndarray) -> float:
    """``mean(a*b) + mean(a)*mean(b) - 2*mean_i(rowmean(a)_i * rowmean(b)_i)``."""
    t1 = float((a * b).mean())
    t2 = float(a.mean()) * float(b.mean())
    t3 = float((a.mean(axis=1) * b.mean(axis=1)).mean())
    return t1 + t2 - 2.0 * t3


def hsic_v(kx: geometry.KernelSpec, ky: geometry.KernelSpec, s: PairedSample) -> MeasureResult:
    """HSIC of a paired sample (biased V-statistic, three-term expansion)."""
    kx = geometry.resolve_kernel(kx, s.x)
    ky = geometry.resolve_kernel(ky, s.y)
    gx = geometry.pairwise_kernel(kx, s.x)
    gy = geometry.pairwise_kernel(ky, s.y)
    value = _three_term_vstat(gx, gy)
    params = {"kernel_x": repr(kx), "kernel_y": repr(ky)}
    value = clamp_squared(value, params)
    return MeasureResult(value=value, estimator="hsic_v", n=s.n, params=params)


def dcov_v(rx: geometry.SemimetricSpec, ry: geometry.SemimetricSpec,
           s: PairedSample) -> MeasureResult:
    """Distance covariance of a paired sample (biased V-statistic).

    The Euclidean case is the classical statistic; other negative-type
    semimetrics generalize it.
    """
    dx = geometry.pairwise_semimetric(rx, s.x)
    dy = geometry.pairwise_semimetric(ry, s.y)
    value = _three_term_vstat(dx, dy)
    params = {"metric_x": repr(rx), "metric_y": repr(ry)}
    value = clamp_squared(value, params)
    return MeasureResult(value=value, estimator="dcov_v", n=s.n, params=params)
