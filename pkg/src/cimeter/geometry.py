"""Semimetrics, positive definite kernels, and the bridge between them.

A negative-type semimetric ``rho`` and a positive definite kernel ``k``
carry the same geometry:

* ``k(x, x') = rho(x, anchor) + rho(x', anchor) - rho(x, x')`` is a pd
  kernel for any fixed anchor point (the *distance-induced* kernel), and
* ``rho(x, x') = (k(x, x) + k(x', x'))/2 - k(x, x')`` is a negative-type
  semimetric (the *kernel-induced* semimetric).

The dependence measures elsewhere in this package are defined once in
distance form and once in kernel form; this module keeps the two
representations interconvertible and supplies the pairwise-matrix
plumbing they share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from .errors import InputError

__all__ = [
    "Euclidean",
    "EuclideanPower",
    "KernelInduced",
    "Gaussian",
    "Laplacian",
    "GaussianDensity",
    "DistanceInduced",
    "DiracDiscrete",
    "Product",
    "SemimetricSpec",
    "KernelSpec",
    "DistanceMatrix",
    "GramMatrix",
    "NegativeTypeCheck",
    "eval_semimetric",
    "eval_kernel",
    "distance_induced_kernel",
    "kernel_induced_semimetric",
    "distance_matrix",
    "gram_matrix",
    "pairwise_semimetric",
    "pairwise_kernel",
    "check_negative_type",
    "quadratic_form_check",
    "median_bandwidth",
    "resolve_kernel",
]

# Gram matrices of pd kernels may acquire tiny negative eigenvalues in
# finite precision; anything above this relative defect is a real failure.
PSD_RTOL = 1e-8


# ---------------------------------------------------------------------------
# spec types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Euclidean:
    """Euclidean distance ``||a - b||``."""


@dataclass(frozen=True)
class EuclideanPower:
    """``||a - b||**alpha``; of negative type for ``0 < alpha <= 2``."""

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise InputError(f"alpha must be in (0, 2], got {self.alpha}")


@dataclass(frozen=True)
class KernelInduced:
    """Semimetric ``(k(a,a) + k(b,b))/2 - k(a,b)`` derived from a pd kernel."""

    base: "KernelSpec"


@dataclass(frozen=True)
class Gaussian:
    """``exp(-||a - b||^2 / (2 * bandwidth^2))``.

    ``bandwidth=None`` defers to the median heuristic at the point of use.
    """

    bandwidth: float | None = None

    def __post_init__(self):
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise InputError(f"bandwidth must be > 0, got {self.bandwidth}")


@dataclass(frozen=True)
class Laplacian:
    """``exp(-||a - b|| / scale)``; ``scale=None`` uses the median heuristic."""

    scale: float | None = None

    def __post_init__(self):
        if self.scale is not None and not self.scale > 0:
            raise InputError(f"scale must be > 0, got {self.scale}")


@dataclass(frozen=True)
class GaussianDensity:
    """Gaussian kernel scaled to integrate to one over its input space.

    ``k(a, b) = (2*pi*t^2)^(-d/2) * exp(-||a - b||^2 / (2 t^2))`` with
    ``t = bandwidth`` and ``d`` the point dimension.  A positive multiple
    of a Gaussian kernel, hence pd.  This is the bandwidth-indexed family
    whose small-``t`` limit turns a kernel weighting into point evaluation.
    """

    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise InputError(f"bandwidth must be > 0, got {self.bandwidth}")


@dataclass(frozen=True)
class DistanceInduced:
    """Kernel ``rho(a, anchor) + rho(b, anchor) - rho(a, b)``.

    Positive definite whenever ``base`` is of negative type.  The anchor
    is any fixed point of the space (``None`` means the origin of
    whatever dimension the data has); measures built on zero-mass signed
    measures do not depend on it.
    """

    base: SemimetricSpec
    anchor: tuple | None = None

    def __post_init__(self):
        if self.anchor is not None:
            object.__setattr__(
                self, "anchor", tuple(float(v) for v in np.atleast_1d(self.anchor)))


@dataclass(frozen=True)
class DiracDiscrete:
    """``k(a, b) = 1`` if the labels are equal, else ``0``."""


@dataclass(frozen=True)
class Product:
    """Pointwise product of two kernels on a product space.

    Points are pairs ``(u, v)``; matrices are built from a pair of aligned
    point collections.
    """

    left: "KernelSpec"
    right: "KernelSpec"


SemimetricSpec = Union[Euclidean, EuclideanPower, KernelInduced]
KernelSpec = Union[Gaussian, Laplacian, GaussianDensity, DistanceInduced, DiracDiscrete, Product]


@dataclass(frozen=True)
class DistanceMatrix:
    """Pairwise semimetric evaluations: symmetric, zero diagonal, >= 0."""

    entries: np.ndarray
    spec: SemimetricSpec = field(compare=False, default=Euclidean())


@dataclass(frozen=True)
class GramMatrix:
    """Pairwise kernel evaluations: symmetric, PSD up to rounding."""

    entries: np.ndarray
    spec: KernelSpec = field(compare=False, default=Gaussian(1.0))

    def psd_defect(self) -> float:
        """Most negative eigenvalue, for checking the PSD invariant."""
        return float(np.linalg.eigvalsh(self.entries)[0])


class NegativeTypeCheck(NamedTuple):
    ok: bool
    worst: float


# ---------------------------------------------------------------------------
# point handling
# ---------------------------------------------------------------------------

def _as_points(points) -> np.ndarray:
    """Coerce to an (n, d) float array; scalars and flat arrays become columns."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise InputError(f"points must be at most 2-d, got shape {arr.shape}")
    if arr.size and not np.isfinite(arr).all():
        raise InputError("points contain non-finite values")
    return arr


def _as_labels(points) -> np.ndarray:
    arr = np.asarray(points)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        arr = arr.reshape(arr.shape[0], -1)[:, 0]
    return arr


def _check_same_dim(a: np.ndarray, b: np.ndarray):
    if a.shape[1] != b.shape[1]:
        raise InputError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")


def _sq_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Direct differences are exact for coincident points (needed so that
    # rho(x, x) == 0 and anchor identities hold bitwise); fall back to the
    # norm expansion only when the broadcast buffer would be large.
    if a.shape[0] * b.shape[0] * max(a.shape[1], 1) <= 2_000_000:
        diff = a[:, None, :] - b[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)
    na = np.sum(a * a, axis=1)[:, None]
    nb = np.sum(b * b, axis=1)[None, :]
    sq = na + nb - 2.0 * (a @ b.T)
    return np.maximum(sq, 0.0)


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0


# ---------------------------------------------------------------------------
# pairwise evaluation
# ---------------------------------------------------------------------------

def pairwise_semimetric(spec: SemimetricSpec, a, b=None) -> np.ndarray:
    """Matrix of ``rho(a_i, b_j)``.  With ``b=None`` the result is exactly
    symmetric with an exactly zero diagonal."""
    symmetric = b is None
    if isinstance(spec, KernelInduced):
        if symmetric:
            k = pairwise_kernel(spec.base, a)
            d = np.diag(k).copy()
            rho = (d[:, None] + d[None, :]) / 2.0 - k
        else:
            k = pairwise_kernel(spec.base, a, b)
            da = _kernel_diag(spec.base, a)
            db = _kernel_diag(spec.base, b)
            rho = (da[:, None] + db[None, :]) / 2.0 - k
        rho = np.maximum(rho, 0.0)
        if symmetric:
            np.fill_diagonal(rho, 0.0)
        return rho

    pa = _as_points(a)
    pb = pa if symmetric else _as_points(b)
    _check_same_dim(pa, pb)
    sq = _sq_distances(pa, pb)
    if symmetric:
        sq = _symmetrize(sq)
        np.fill_diagonal(sq, 0.0)
    if isinstance(spec, Euclidean):
        return np.sqrt(sq)
    if isinstance(spec, EuclideanPower):
        return sq ** (spec.alpha / 2.0)
    raise InputError(f"unknown semimetric spec {spec!r}")


def _kernel_diag(spec: KernelSpec, points) -> np.ndarray:
    if isinstance(spec, (Gaussian, Laplacian, DiracDiscrete)):
        n = _as_labels(points).shape[0] if isinstance(spec, DiracDiscrete) else _as_points(points).shape[0]
        return np.ones(n)
    if isinstance(spec, GaussianDensity):
        pts = _as_points(points)
        return np.full(pts.shape[0], _density_norm(spec.bandwidth, pts.shape[1]))
    if isinstance(spec, DistanceInduced):
        pts = _as_points(points)
        r = _anchor_distances(spec, pts)
        return 2.0 * r
    if isinstance(spec, Product):
        la, ra = points
        return _kernel_diag(spec.left, la) * _kernel_diag(spec.right, ra)
    raise InputError(f"unknown kernel spec {spec!r}")


def _density_norm(t: float, dim: int) -> float:
    return (2.0 * math.pi * t * t) ** (-dim / 2.0)


def _anchor_point(spec: DistanceInduced, dim: int) -> np.ndarray:
    if spec.anchor is None:
        return np.zeros((1, dim))
    anchor = np.asarray(spec.anchor, dtype=float).reshape(1, -1)
    if anchor.shape[1] != dim:
        raise InputError(
            f"anchor dimension {anchor.shape[1]} does not match points ({dim})")
    return anchor


def _anchor_distances(spec: DistanceInduced, pts: np.ndarray) -> np.ndarray:
    return pairwise_semimetric(spec.base, pts, _anchor_point(spec, pts.shape[1]))[:, 0]


def pairwise_kernel(spec: KernelSpec, a, b=None) -> np.ndarray:
    """Matrix of ``k(a_i, b_j)``; exactly symmetric when ``b=None``."""
    symmetric = b is None
    if isinstance(spec, DiracDiscrete):
        la = _as_labels(a)
        lb = la if symmetric else _as_labels(b)
        return (la[:, None] == lb[None, :]).astype(float)
    if isinstance(spec, Product):
        la, ra = a
        if symmetric:
            return pairwise_kernel(spec.left, la) * pairwise_kernel(spec.right, ra)
        lb, rb = b
        return pairwise_kernel(spec.left, la, lb) * pairwise_kernel(spec.right, ra, rb)
    if isinstance(spec, DistanceInduced):
        if symmetric:
            pts = _as_points(a)
            rho = pairwise_semimetric(spec.base, pts)
            r = _anchor_distances(spec, pts)
            return r[:, None] + r[None, :] - rho
        pa, pb = _as_points(a), _as_points(b)
        rho = pairwise_semimetric(spec.base, pa, pb)
        ra = _anchor_distances(spec, pa)
        rb = _anchor_distances(spec, pb)
        return ra[:, None] + rb[None, :] - rho

    pa = _as_points(a)
    pb = pa if symmetric else _as_points(b)
    _check_same_dim(pa, pb)
    if isinstance(spec, (Gaussian, GaussianDensity)):
        bw = spec.bandwidth
        if bw is None:
            raise InputError("Gaussian bandwidth unresolved; call resolve_kernel first")
        sq = _sq_distances(pa, pb)
        if symmetric:
            sq = _symmetrize(sq)
            np.fill_diagonal(sq, 0.0)
        k = np.exp(-sq / (2.0 * bw * bw))
        if isinstance(spec, GaussianDensity):
            k = _density_norm(bw, pa.shape[1]) * k
        return k
    if isinstance(spec, Laplacian):
        if spec.scale is None:
            raise InputError("Laplacian scale unresolved; call resolve_kernel first")
        d = pairwise_semimetric(Euclidean(), pa) if symmetric else pairwise_semimetric(Euclidean(), pa, pb)
        return np.exp(-d / spec.scale)
    raise InputError(f"unknown kernel spec {spec!r}")


# ---------------------------------------------------------------------------
# single-pair entries and the matrix wrappers
# ---------------------------------------------------------------------------

def eval_semimetric(spec: SemimetricSpec, a, b) -> float:
    """Evaluate ``rho(a, b)`` for a single pair of points."""
    if isinstance(spec, KernelInduced):
        kaa = eval_kernel(spec.base, a, a)
        kbb = eval_kernel(spec.base, b, b)
        kab = eval_kernel(spec.base, a, b)
        return max((kaa + kbb) / 2.0 - kab, 0.0)
    pa, pb = _as_points(a), _as_points(b)
    _check_same_dim(pa, pb)
    return float(pairwise_semimetric(spec, pa, pb)[0, 0])


def eval_kernel(spec: KernelSpec, a, b) -> float:
    """Evaluate ``k(a, b)`` for a single pair of points (labels for
    :class:`DiracDiscrete`, pairs for :class:`Product`)."""
    if isinstance(spec, DiracDiscrete):
        return 1.0 if np.all(np.asarray(a) == np.asarray(b)) else 0.0
    if isinstance(spec, Product):
        return eval_kernel(spec.left, a[0], b[0]) * eval_kernel(spec.right, a[1], b[1])
    if isinstance(spec, DistanceInduced):
        anchor = _anchor_point(spec, _as_points(a).shape[1])[0]
        ra = eval_semimetric(spec.base, a, anchor)
        rb = eval_semimetric(spec.base, b, anchor)
        return ra + rb - eval_semimetric(spec.base, a, b)
    pa, pb = _as_points(a), _as_points(b)
    _check_same_dim(pa, pb)
    return float(pairwise_kernel(spec, pa, pb)[0, 0])


def distance_induced_kernel(rho: SemimetricSpec, anchor) -> DistanceInduced:
    """Kernel induced by a negative-type semimetric and an anchor point."""
    return DistanceInduced(base=rho, anchor=tuple(np.atleast_1d(np.asarray(anchor, dtype=float))))


def kernel_induced_semimetric(k: KernelSpec) -> KernelInduced:
    """Negative-type semimetric induced by a pd kernel."""
    return KernelInduced(base=k)


def distance_matrix(spec: SemimetricSpec, points) -> DistanceMatrix:
    """Pairwise :class:`DistanceMatrix` over a nonempty point collection."""
    entries = pairwise_semimetric(spec, _require_nonempty(spec, points))
    return DistanceMatrix(entries=entries, spec=spec)


def gram_matrix(spec: KernelSpec, points) -> GramMatrix:
    """Pairwise :class:`GramMatrix` over a nonempty point collection."""
    entries = pairwise_kernel(spec, _require_nonempty(spec, points))
    return GramMatrix(entries=entries, spec=spec)


def _require_nonempty(spec, points):
    if isinstance(spec, Product):
        if len(points[0]) == 0:
            raise InputError("empty point collection")
        return points
    if isinstance(spec, DiracDiscrete) or (
            isinstance(spec, KernelInduced) and isinstance(spec.base, DiracDiscrete)):
        labels = _as_labels(points)
        if labels.shape[0] == 0:
            raise InputError("empty point collection")
        return labels
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise InputError("empty point collection")
    return points


# ---------------------------------------------------------------------------
# negative-type checking
# ---------------------------------------------------------------------------

def quadratic_form_check(dist: np.ndarray, trials: int, rng_seed: int,
                         tol: float | None = None) -> NegativeTypeCheck:
    """Probe ``sum_ij a_i a_j dist[i, j] <= tol`` over random zero-sum weights.

    A randomized falsifier, not a proof: ``ok=True`` means no violation was
    found among ``trials`` unit-norm zero-sum weight vectors.
    """
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    if n < 2:
        raise InputError("need at least 2 points to probe negative type")
    if trials < 1:
        raise InputError("trials must be >= 1")
    if tol is None:
        tol = 1e-9 * (1.0 + float(np.abs(dist).max()))
    rng = np.random.Generator(np.random.Philox(rng_seed))
    worst = -np.inf
    for _ in range(trials):
        alpha = rng.standard_normal(n)
        alpha -= alpha.mean()
        norm = np.linalg.norm(alpha)
        if norm == 0.0:
            continue
        alpha /= norm
        worst = max(worst, float(alpha @ dist @ alpha))
    return NegativeTypeCheck(ok=worst <= tol, worst=worst)


def check_negative_type(spec: SemimetricSpec, points, trials: int = 50,
                        rng_seed: int = 0) -> NegativeTypeCheck:
    """Randomized negative-type probe of a semimetric on a point set."""
    d = distance_matrix(spec, points)
    return quadratic_form_check(d.entries, trials=trials, rng_seed=rng_seed)


# ---------------------------------------------------------------------------
# bandwidth defaults
# ---------------------------------------------------------------------------

def median_bandwidth(points) -> float:
    """Median of the nonzero pairwise Euclidean distances (1.0 if all zero)."""
    d = pairwise_semimetric(Euclidean(), points)
    vals = d[np.triu_indices_from(d, k=1)]
    nz = vals[vals > 0]
    return float(np.median(nz)) if nz.size else 1.0


def resolve_kernel(spec: KernelSpec, points) -> KernelSpec:
    """Fill in deferred bandwidths from the data (median heuristic)."""
    if isinstance(spec, Gaussian) and spec.bandwidth is None:
        return Gaussian(bandwidth=median_bandwidth(points))
    if isinstance(spec, Laplacian) and spec.scale is None:
        return Laplacian(scale=median_bandwidth(points))
    if isinstance(spec, Product):
        la, ra = points
        return Product(resolve_kernel(spec.left, la), resolve_kernel(spec.right, ra))
    return spec
