"""Independent brute-force and quadrature validators.

Everything here recomputes a quantity estimated elsewhere through a
deliberately different route: characteristic-function quadrature instead
of closed-form distances, explicit operator coordinates instead of the
simplified trace formula, literal nested-loop sums instead of matrix
algebra.  Apart from pairwise kernel/distance matrix construction these
functions share no code with the estimators they validate; small pieces
of arithmetic are duplicated locally on purpose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .data import Dataset
from .errors import InputError

__all__ = [
    "QuadratureGrid",
    "cp_constant",
    "weight_identity_check",
    "cf_h_oracle",
    "cf_h_oracle_grid",
    "operator_hs_oracle",
    "loop_weight_rows",
    "avg_hscic_naive",
    "hscic_vstat_naive",
]

_OPERATOR_ORACLE_MAX_N = 256
_VSTAT_NAIVE_MAX_N = 8
_AVG_NAIVE_MAX_N = 12


@dataclass(frozen=True)
class QuadratureGrid:
    """Log-spaced truncation of the singular frequency weight.

    Each axis carries ``points_per_axis`` nodes from ``singularity_cutoff``
    to ``half_width`` (mirrored to the negative side where needed).  The
    integrand's ``1 - cos`` factor kills the singularity at the origin, so
    the excluded ball contributes O(cutoff).
    """

    half_width: float = 1e4
    points_per_axis: int = 65536
    singularity_cutoff: float = 1e-6

    def __post_init__(self):
        if not self.half_width > self.singularity_cutoff > 0:
            raise InputError("need half_width > singularity_cutoff > 0")
        if self.points_per_axis < 16:
            raise InputError("points_per_axis must be >= 16")

    def nodes(self) -> np.ndarray:
        return np.geomspace(self.singularity_cutoff, self.half_width, self.points_per_axis)

    def trapezoid_weights(self, nodes: np.ndarray) -> np.ndarray:
        w = np.zeros_like(nodes)
        step = np.diff(nodes)
        w[:-1] += step / 2.0
        w[1:] += step / 2.0
        return w


def cp_constant(p: int) -> float:
    """The frequency-weight constant ``pi^((p+1)/2) / Gamma((p+1)/2)``."""
    if p < 1:
        raise InputError(f"dimension must be >= 1, got {p}")
    return math.pi ** ((p + 1) / 2.0) / math.gamma((p + 1) / 2.0)


def weight_identity_check(x: float, grid: QuadratureGrid | None = None) -> float:
    """Trapezoid value of ``(1 - cos(t x)) / (pi t^2)`` over the symmetric
    truncated axis; approximates ``|x|``."""
    grid = grid or QuadratureGrid()
    t = grid.nodes()
    w = grid.trapezoid_weights(t)
    f = (1.0 - np.cos(t * x)) / (math.pi * t * t)
    return 2.0 * float(w @ f)


def _univariate_columns(d: Dataset) -> tuple[np.ndarray, np.ndarray]:
    p, q, _ = d.dims
    if p != 1 or q != 1:
        raise InputError(f"characteristic-function oracle supports p=q=1 only, got p={p}, q={q}")
    return d.x[:, 0], d.y[:, 0]


def _oracle_weights(w, n: int) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (n,):
        raise InputError(f"weight vector has shape {w.shape}, expected ({n},)")
    if abs(w.sum() - 1.0) > 1e-8:
        raise InputError("weights must sum to 1")
    return w


def cf_h_oracle(d: Dataset, w1, w2, grid: QuadratureGrid | None = None) -> float:
    """Weighted-L2 inner product of empirical conditional CF differences.

    The target is ``integral of D1(t,s) * conj(D2(t,s)) / (pi^2 t^2 s^2)``
    over the symmetric truncated grid, where
    ``Dk(t,s) = phi_XY(t,s) - phi_X(t) phi_Y(s)`` under weights ``wk``.
    The tensor-product trapezoid sum is evaluated here in factored form:
    on a sign-symmetric grid the odd (sine) terms cancel pairwise and the
    remaining cosine terms factor per atom pair, so the sum collapses to
    combinations of the one-axis quadrature ``weight_identity_check``
    applied to pairwise coordinate differences.  This is the same sum
    reorganized, not an approximation; :func:`cf_h_oracle_grid` evaluates
    it unfactored for cross-checking.
    """
    grid = grid or QuadratureGrid()
    x, y = _univariate_columns(d)
    n = d.n
    w1 = _oracle_weights(w1, n)
    w2 = _oracle_weights(w2, n)
    t = grid.nodes()
    tw = grid.trapezoid_weights(t) / (math.pi * t * t)

    def one_axis(vals: np.ndarray) -> np.ndarray:
        diffs = np.abs(vals[:, None] - vals[None, :])
        out = np.empty((n, n))
        for i in range(n):
            out[i] = 2.0 * ((1.0 - np.cos(np.outer(diffs[i], t))) @ tw)
        return out

    ix = one_axis(x)
    iy = one_axis(y)
    t1 = w1 @ (ix * iy) @ w2
    t2 = w1 @ ((ix @ w2) * (iy @ w2))
    t3 = w2 @ ((ix @ w1) * (iy @ w1))
    t4 = (w1 @ ix @ w2) * (w1 @ iy @ w2)
    return float(t1 - t2 - t3 + t4)


def cf_h_oracle_grid(d: Dataset, w1, w2, grid: QuadratureGrid | None = None,
                     chunk: int = 256) -> float:
    """Unfactored evaluation of the :func:`cf_h_oracle` sum: the complex
    CF-difference fields are materialized on the full sign-symmetric 2-D
    grid and contracted with trapezoid weights.  Quadratic in
    ``points_per_axis``; intended for small grids."""
    grid = grid or QuadratureGrid()
    x, y = _univariate_columns(d)
    n = d.n
    w1 = _oracle_weights(w1, n)
    w2 = _oracle_weights(w2, n)
    pos = grid.nodes()
    half_w = grid.trapezoid_weights(pos)
    t = np.concatenate([-pos[::-1], pos])
    tw = np.concatenate([half_w[::-1], half_w]) / (math.pi * t * t)

    ey = np.exp(1j * np.outer(t, y))
    phi1_y = ey @ w1
    phi2_y = ey @ w2
    total = 0.0
    for lo in range(0, t.size, chunk):
        ts = t[lo:lo + chunk]
        ex = np.exp(1j * np.outer(ts, x))
        phi1_xy = (ex * w1) @ ey.T
        phi2_xy = (ex * w2) @ ey.T
        d1 = phi1_xy - np.outer(ex @ w1, phi1_y)
        d2 = phi2_xy - np.outer(ex @ w2, phi2_y)
        integrand = (d1 * d2.conj()).real
        total += float(tw[lo:lo + chunk] @ integrand @ tw)
    return total


# ---------------------------------------------------------------------------
# explicit operator-coordinates norm
# ---------------------------------------------------------------------------

def operator_hs_oracle(kx: geometry.KernelSpec, ky: geometry.KernelSpec,
                       kz: geometry.KernelSpec, d: Dataset,
                       reg) -> float:
    """Squared HS norm of the regularized conditional cross-covariance
    plug-in, computed in explicit sample coordinates.

    The four empirical covariance operators are represented through the
    sampling operators ``S_*`` as ``S*_A H S_B`` with
    ``H = (I - 11^T/n)/n``; the regularized inverse is realized with the
    finite-rank inversion identity
    ``(S* M S + lam I)^{-1} = (I - S* M (K M + lam I)^{-1} S) / lam``,
    which is verified by direct multiplication and makes the whole
    difference operator an n x n coordinate matrix ``C`` between Gram
    factors.  The returned value is ``Tr[C^T K_Y C (K_X o K_Z)]``; the
    simplified centered-trace formula is never used here.
    """
    n = d.n
    if n > _OPERATOR_ORACLE_MAX_N:
        raise InputError(f"operator oracle is limited to n <= {_OPERATOR_ORACLE_MAX_N}")
    lam = float(reg.lam if hasattr(reg, "lam") else reg)
    if not lam > 0:
        raise InputError(f"lambda must be > 0, got {lam}")
    kx = geometry.resolve_kernel(kx, d.x)
    ky = geometry.resolve_kernel(ky, d.y)
    kz = geometry.resolve_kernel(kz, d.z)
    gx = geometry.pairwise_kernel(kx, d.x)
    gy = geometry.pairwise_kernel(ky, d.y)
    gz = geometry.pairwise_kernel(kz, d.z)
    gxz = gx * gz
    if n == 1:
        return 0.0
    h = (np.eye(n) - np.full((n, n), 1.0 / n)) / n
    # m_lam = S_Z (Sigma_ZZ + lam I)^{-1} S*_Z, in coordinates
    solve_part = np.linalg.solve(gz @ h + lam * np.eye(n), gz)
    m_lam = (gz - gz @ h @ solve_part) / lam
    c = h - h @ m_lam @ h
    return float(((c.T @ gy @ c) * gxz).sum())


# ---------------------------------------------------------------------------
# literal nested-loop references
# ---------------------------------------------------------------------------

def loop_weight_rows(shape: str, bandwidth: float, z: np.ndarray,
                      z_discrete: bool) -> np.ndarray:
    """Smoothing weights rebuilt with explicit loops (kept separate from
    the production weight code on purpose)."""
    n = z.shape[0]
    w = np.zeros((n, n))
    for j in range(n):
        theta = np.zeros(n)
        for i in range(n):
            if z_discrete:
                dist = 0.0 if z[j] == z[i] else 1.0
            else:
                dist = math.sqrt(float(np.sum((z[j] - z[i]) ** 2)))
            u = dist / bandwidth
            if shape == "gaussian":
                theta[i] = math.exp(-0.5 * u * u)
            elif shape == "box":
                theta[i] = 1.0 if u <= 1.0 else 0.0
            elif shape == "epanechnikov":
                theta[i] = max(1.0 - u * u, 0.0)
            else:
                raise InputError(f"unknown smoothing shape {shape!r}")
        w[j] = theta / theta.sum()
    return w


def avg_hscic_naive(gx: np.ndarray, gy: np.ndarray, w: np.ndarray) -> float:
    """Literal four-index sum for the averaged pointwise measure:
    ``(1/n) sum_j [sum_ab KxKy w w - 2 sum_abc ... + sum_abcd ...]``."""
    n = gx.shape[0]
    if n > _AVG_NAIVE_MAX_N:
        raise InputError(f"naive-loop oracle is limited to n <= {_AVG_NAIVE_MAX_N}")
    total = 0.0
    for j in range(n):
        wj = w[j]
        term1 = 0.0
        for a in range(n):
            for b in range(n):
                term1 += gx[a, b] * gy[a, b] * wj[a] * wj[b]
        term2 = 0.0
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    term2 += gx[a, c] * gy[a, b] * wj[a] * wj[b] * wj[c]
        term3 = 0.0
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    for e in range(n):
                        term3 += gx[a, c] * gy[b, e] * wj[a] * wj[b] * wj[c] * wj[e]
        total += term1 - 2.0 * term2 + term3
    return total / n


def hscic_vstat_naive(gx: np.ndarray, gy: np.ndarray, gz: np.ndarray,
                      w: np.ndarray) -> float:
    """Literal expanded sum for the smoothed augmented-variable
    V-statistic (six nested indices at worst); capped at n = 8."""
    n = gx.shape[0]
    if n > _VSTAT_NAIVE_MAX_N:
        raise InputError(f"naive-loop oracle is limited to n <= {_VSTAT_NAIVE_MAX_N}")
    term1 = 0.0
    for j in range(n):
        for jp in range(n):
            for a in range(n):
                for b in range(n):
                    term1 += (gx[a, b] * gy[a, b] * gz[j, jp] * w[j, a] * w[jp, b])
    term2 = 0.0
    for j in range(n):
        for jp in range(n):
            for a in range(n):
                for b in range(n):
                    for c in range(n):
                        term2 += (gx[a, b] * gy[a, c] * gz[j, jp]
                                  * w[j, a] * w[jp, b] * w[jp, c])
    term3 = 0.0
    for j in range(n):
        for jp in range(n):
            for a in range(n):
                for b in range(n):
                    for c in range(n):
                        for e in range(n):
                            term3 += (gx[a, c] * gy[b, e] * gz[j, jp]
                                      * w[j, a] * w[j, b] * w[jp, c] * w[jp, e])
    return (term1 - 2.0 * term2 + term3) / (n * n)
