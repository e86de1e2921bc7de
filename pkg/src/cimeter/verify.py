"""Self-contained identity battery.

Runs the finite-sample identities that tie the estimators together on
seeded random data and reports the worst deviation per identity.  The
identities hold exactly in exact arithmetic, so the tolerances here are
rounding allowances, not statistical ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import conditional, geometry, oracles, unconditional
from .data import Dataset, GeneratorSpec, generate

__all__ = ["IdentityResult", "run_identity_suite"]


@dataclass(frozen=True)
class IdentityResult:
    name: str
    max_dev: float
    tol: float
    passed: bool

    @staticmethod
    def from_dev(name: str, max_dev: float, tol: float) -> "IdentityResult":
        max_dev = float(max_dev)
        return IdentityResult(name=name, max_dev=max_dev, tol=tol, passed=bool(max_dev <= tol))


def _random_dataset(rng, n=None, p=None, q=None, r=None) -> Dataset:
    n = n or int(rng.integers(6, 24))
    spec = GeneratorSpec(model="gaussian_dep", n=n,
                         p=p or int(rng.integers(1, 3)),
                         q=q or int(rng.integers(1, 3)),
                         r=r or int(rng.integers(1, 3)),
                         seed=int(rng.integers(0, 2 ** 31)),
                         coupling=float(rng.uniform(-1, 1)))
    return generate(spec)


def _random_weights(rng, n: int) -> np.ndarray:
    w = rng.dirichlet(np.ones(n))
    return w / w.sum()


def run_identity_suite(seed: int = 0, fault: bool = False) -> list[IdentityResult]:
    """Evaluate every identity; ``fault=True`` flips one sign to prove
    the suite can fail (negative control for CI of this repository)."""
    rng = np.random.default_rng(seed)
    results = []
    sign = -1.0 if fault else 1.0

    # distance-induced kernels: pointwise kernel measure == distance measure
    dev = 0.0
    for _ in range(8):
        d = _random_dataset(rng)
        rx, ry = geometry.Euclidean(), geometry.EuclideanPower(alpha=1.5)
        for _ in range(3):
            w = _random_weights(rng, d.n)
            anchor_x = tuple(rng.normal(size=d.x.shape[1]))
            anchor_y = tuple(rng.normal(size=d.y.shape[1]))
            kx = geometry.distance_induced_kernel(rx, anchor_x)
            ky = geometry.distance_induced_kernel(ry, anchor_y)
            a = conditional.hscic_at(kx, ky, d, w).value
            b = conditional.gcdcov_at(rx, ry, d, w).value
            dev = max(dev, abs(sign * a - b) / (1.0 + abs(b)))
    results.append(IdentityResult.from_dev("pointwise-identity-distance-induced", dev, 1e-8))

    # kernel-induced semimetrics: reverse direction
    dev = 0.0
    for _ in range(8):
        d = _random_dataset(rng)
        kx = geometry.Gaussian(bandwidth=float(rng.uniform(0.5, 2.0)))
        ky = geometry.Laplacian(scale=float(rng.uniform(0.5, 2.0)))
        rx = geometry.kernel_induced_semimetric(kx)
        ry = geometry.kernel_induced_semimetric(ky)
        w = _random_weights(rng, d.n)
        a = conditional.hscic_at(kx, ky, d, w).value
        b = conditional.gcdcov_at(rx, ry, d, w).value
        dev = max(dev, abs(a - b) / (1.0 + abs(b)))
    results.append(IdentityResult.from_dev("pointwise-identity-kernel-induced", dev, 1e-8))

    # unconditional: HSIC with distance-induced kernels == distance covariance
    dev = 0.0
    for _ in range(8):
        d = _random_dataset(rng)
        s = unconditional.PairedSample(x=d.x, y=d.y)
        kx = geometry.distance_induced_kernel(geometry.Euclidean(), np.zeros(d.x.shape[1]))
        ky = geometry.distance_induced_kernel(geometry.Euclidean(), np.zeros(d.y.shape[1]))
        a = unconditional.hsic_v(kx, ky, s).value
        b = unconditional.dcov_v(geometry.Euclidean(), geometry.Euclidean(), s).value
        dev = max(dev, abs(a - b) / max(abs(b), 1e-12))
    two = unconditional.PairedSample(x=np.array([0.0, 1.0]), y=np.array([0.0, 1.0]))
    b2 = unconditional.dcov_v(geometry.Euclidean(), geometry.Euclidean(), two).value
    dev = max(dev, abs(b2 - 0.25))
    results.append(IdentityResult.from_dev("unconditional-equivalence", dev, 1e-8))

    # smoothed V-statistic == its literal expanded sum (n <= 8)
    dev = 0.0
    for _ in range(2):
        d = _random_dataset(rng, n=6)
        s = conditional.SmoothingSpec()
        s_res = conditional.resolve_smoothing(s, d)
        kx = geometry.Gaussian(bandwidth=1.0)
        ky = geometry.Gaussian(bandwidth=0.7)
        kz = geometry.Gaussian(bandwidth=1.3)
        fast = conditional.hscic_vstat(kx, ky, kz, d, s_res).value
        w = oracles.loop_weight_rows(s_res.shape, s_res.bandwidth, d.z, d.z_discrete)
        gx = geometry.pairwise_kernel(kx, d.x)
        gy = geometry.pairwise_kernel(ky, d.y)
        gz = geometry.pairwise_kernel(kz, d.z)
        naive = oracles.hscic_vstat_naive(gx, gy, gz, w)
        dev = max(dev, abs(fast - naive) / max(abs(naive), 1e-12))
    results.append(IdentityResult.from_dev("vstat-expanded-sum", dev, 1e-9))

    # trace formula == explicit operator-coordinates norm
    dev = 0.0
    for lam in (1e-4, 1e-2, 1.0):
        d = _random_dataset(rng, n=16)
        kx = geometry.Gaussian(bandwidth=1.0)
        ky = geometry.Gaussian(bandwidth=1.0)
        kz = geometry.Gaussian(bandwidth=1.0)
        reg = conditional.RegularizationSpec(lam=lam)
        a = conditional.hscic_trace(kx, ky, kz, d, reg).value
        b = oracles.operator_hs_oracle(kx, ky, kz, d, reg)
        dev = max(dev, abs(a - b) / max(abs(b), 1e-14))
    results.append(IdentityResult.from_dev("trace-vs-operator-coordinates", dev, 1e-8))

    # frequency-weight constants
    dev = max(abs(oracles.cp_constant(1) - math.pi),
              abs(oracles.cp_constant(2) - 2.0 * math.pi),
              abs(oracles.cp_constant(3) - math.pi ** 2))
    results.append(IdentityResult.from_dev("cp-constants", dev, 1e-12))

    # quadrature of the frequency weight reproduces |x|
    dev = max(abs(oracles.weight_identity_check(x) - x) for x in (0.5, 1.0, 2.0))
    results.append(IdentityResult.from_dev("weight-identity-quadrature", dev, 1e-4))

    # characteristic-function quadrature == distance-form cross product
    dev = 0.0
    for _ in range(2):
        d = _random_dataset(rng, n=5, p=1, q=1, r=1)
        w1 = _random_weights(rng, d.n)
        w2 = _random_weights(rng, d.n)
        kx = geometry.distance_induced_kernel(geometry.Euclidean(), (0.0,))
        ky = geometry.distance_induced_kernel(geometry.Euclidean(), (0.0,))
        a = oracles.cf_h_oracle(d, w1, w2)
        b = conditional.h_hat(kx, ky, d, w1, w2)
        dev = max(dev, abs(a - b) / max(abs(b), 1e-12))
    results.append(IdentityResult.from_dev("cf-quadrature-vs-distance-form", dev, 1e-3))

    # anchors do not matter for distance-induced kernel measures
    dev = 0.0
    d = _random_dataset(rng)
    w = _random_weights(rng, d.n)
    rx = geometry.Euclidean()
    vals = []
    for _ in range(3):
        kx = geometry.distance_induced_kernel(rx, tuple(rng.normal(size=d.x.shape[1])))
        ky = geometry.distance_induced_kernel(rx, tuple(rng.normal(size=d.y.shape[1])))
        vals.append(conditional.hscic_at(kx, ky, d, w).value)
    dev = (max(vals) - min(vals)) / (1.0 + abs(vals[0]))
    results.append(IdentityResult.from_dev("anchor-independence", dev, 1e-10))

    # cross product is symmetric and its diagonal is the pointwise measure
    dev = 0.0
    d = _random_dataset(rng)
    kx = geometry.Gaussian(bandwidth=1.0)
    ky = geometry.Gaussian(bandwidth=1.0)
    w1 = _random_weights(rng, d.n)
    w2 = _random_weights(rng, d.n)
    h12 = conditional.h_hat(kx, ky, d, w1, w2)
    h21 = conditional.h_hat(kx, ky, d, w2, w1)
    h11 = conditional.h_hat(kx, ky, d, w1, w1)
    at11 = conditional.hscic_at(kx, ky, d, w1).value
    dev = max(abs(h12 - h21), abs(h11 - at11), max(0.0, -h11))
    results.append(IdentityResult.from_dev("cross-product-symmetry", dev, 1e-10))

    return results
