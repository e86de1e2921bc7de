"""Conditional-independence testing by local permutation.

Null calibration permutes Y rows only within neighborhoods of similar Z
(a full permutation would test joint, not conditional, independence).
Every supported statistic is linear in the Y gram/distance matrix once
X and Z are fixed, so each is prepared once as a coefficient matrix
``A`` with replicate value ``sum(A * GY[perm][:, perm])``; replicates
then cost O(n^2) after an O(n^3) setup.  Per-replicate RNG streams are
derived from ``(seed, replicate index)``, so results do not depend on
evaluation order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import conditional, geometry
from .data import Dataset, GeneratorSpec, generate
from .errors import CimeterError, InputError
from .unconditional import clamp_squared

__all__ = ["TestConfig", "TestReport", "local_permutation_test",
           "size_power_experiment", "z_neighborhoods"]

STATISTICS = ("avg_hscic", "hscic_vstat", "hscic_trace", "gcdcov_avg")


@dataclass(frozen=True)
class TestConfig:
    statistic: str = "hscic_trace"
    B: int = 199
    knn: int = 10
    alpha: float = 0.05
    seed: int = 0
    kernel_x: geometry.KernelSpec = geometry.Gaussian()
    kernel_y: geometry.KernelSpec = geometry.Gaussian()
    kernel_z: geometry.KernelSpec = geometry.Gaussian()
    metric_x: geometry.SemimetricSpec = geometry.Euclidean()
    metric_y: geometry.SemimetricSpec = geometry.Euclidean()
    smoothing: conditional.SmoothingSpec = conditional.SmoothingSpec()
    reg: conditional.RegularizationSpec | None = None

    def __post_init__(self):
        if self.statistic not in STATISTICS:
            raise InputError(f"unknown statistic {self.statistic!r}; choose from {STATISTICS}")
        if self.B < 19:
            raise InputError(f"need B >= 19 replicates, got {self.B}")
        if self.knn < 2:
            raise InputError(f"need knn >= 2, got {self.knn}")
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"alpha must be in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class TestReport:
    statistic_value: float
    p_value: float
    B: int
    scheme: str
    seed: int
    replicate_values: tuple

    def rejected(self, alpha: float) -> bool:
        return self.p_value <= alpha


def z_neighborhoods(d: Dataset, knn: int) -> list[np.ndarray]:
    """Greedy partition of rows into blocks of ``knn`` nearest Z values.

    The unassigned row with the smallest index seeds each block and takes
    its ``knn - 1`` nearest unassigned neighbors (distance ties broken by
    ascending row index); a final short remainder joins the last block.
    """
    n = d.n
    if n < 2 * knn:
        raise InputError(f"need n >= 2*knn rows, got n={n}, knn={knn}")
    if d.z_discrete:
        dist = (d.z[:, None] != d.z[None, :]).astype(float)
    else:
        dist = geometry.pairwise_semimetric(geometry.Euclidean(), d.z)
    unassigned = np.ones(n, dtype=bool)
    blocks: list[np.ndarray] = []
    while unassigned.sum() >= knn:
        seed_row = int(np.flatnonzero(unassigned)[0])
        order = np.argsort(dist[seed_row], kind="stable")
        pick = [i for i in order if unassigned[i]][:knn]
        block = np.asarray(sorted(pick), dtype=int)
        unassigned[block] = False
        blocks.append(block)
    rest = np.flatnonzero(unassigned)
    if rest.size:
        blocks[-1] = np.sort(np.concatenate([blocks[-1], rest]))
    return blocks


class _PreparedStatistic:
    """Statistic reduced to ``sum(coeff * GY[perm][:, perm])``."""

    def __init__(self, coeff: np.ndarray, gy: np.ndarray):
        self.coeff = coeff
        self.gy = gy

    def value(self, perm: np.ndarray | None = None) -> float:
        gy = self.gy if perm is None else self.gy[np.ix_(perm, perm)]
        return clamp_squared(float((self.coeff * gy).sum()), {})


def _prepare(cfg: TestConfig, d: Dataset) -> _PreparedStatistic:
    n = d.n
    if cfg.statistic == "gcdcov_avg":
        gy = geometry.pairwise_semimetric(cfg.metric_y, d.y)
        gx = geometry.pairwise_semimetric(cfg.metric_x, d.x)
    else:
        gy = geometry.pairwise_kernel(geometry.resolve_kernel(cfg.kernel_y, d.y), d.y)
        gx = geometry.pairwise_kernel(geometry.resolve_kernel(cfg.kernel_x, d.x), d.x)

    if cfg.statistic == "hscic_trace":
        gz = geometry.pairwise_kernel(geometry.resolve_kernel(cfg.kernel_z, d.z), d.z)
        lam = cfg.reg.lam if cfg.reg is not None else conditional.default_lambda(gz)
        h = conditional.centering(n)
        m = n * h - np.linalg.solve(gz @ h + lam * np.eye(n), gz @ h)
        coeff = (h @ m @ ((gx * gz) @ h) @ m).T
        return _PreparedStatistic(coeff, gy)

    w = conditional.conditional_weights(cfg.smoothing, d).w
    if cfg.statistic in ("avg_hscic", "gcdcov_avg"):
        p = w @ gx
        s = w.T @ w
        u = w.T @ (w * p)
        v = w.T @ ((w * p).sum(axis=1)[:, None] * w)
        coeff = ((s * gx) - 2.0 * u + v) / n
        return _PreparedStatistic(coeff, gy)

    # hscic_vstat
    gz = geometry.pairwise_kernel(geometry.resolve_kernel(cfg.kernel_z, d.z), d.z)
    p = gx @ w.T
    c = w.T @ gz
    smat = c @ w
    f = (c * p) @ w
    e = w.T @ ((gz * (w @ p)) @ w)
    coeff = ((smat * gx) - 2.0 * f + e) / (n * n)
    return _PreparedStatistic(coeff, gy)


def _replicate_perm(seed: int, index: int, blocks: list[np.ndarray], n: int) -> np.ndarray:
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(index,))))
    perm = np.arange(n)
    for block in blocks:
        perm[block] = block[rng.permutation(block.size)]
    return perm


def local_permutation_test(cfg: TestConfig, d: Dataset) -> TestReport:
    """Permutation p-value for conditional dependence.

    Y rows are permuted within Z-neighborhoods only; the add-one p-value
    ``(1 + #{replicates >= observed}) / (B + 1)`` is valid at any finite
    B.  Deterministic given ``cfg.seed``.
    """
    blocks = z_neighborhoods(d, cfg.knn)
    prepared = _prepare(cfg, d)
    observed = prepared.value()
    reps = np.empty(cfg.B)
    for b in range(cfg.B):
        perm = _replicate_perm(cfg.seed, b, blocks, d.n)
        try:
            reps[b] = prepared.value(perm)
        except CimeterError as exc:
            raise type(exc)(f"replicate {b}: {exc}") from exc
    p_value = (1.0 + int((reps >= observed).sum())) / (cfg.B + 1.0)
    return TestReport(
        statistic_value=observed,
        p_value=p_value,
        B=cfg.B,
        scheme=f"local-permutation-knn{cfg.knn}",
        seed=cfg.seed,
        replicate_values=tuple(float(v) for v in reps),
    )


def size_power_experiment(cfg: TestConfig, model: GeneratorSpec, runs: int) -> dict:
    """Repeated generate-and-test; rejection frequency plus per-run detail.

    Run ``i`` uses dataset seed ``model.seed + i`` and test seed
    ``cfg.seed + i``, so the whole experiment is a pure function of the
    two master seeds.
    """
    if runs < 1:
        raise InputError("runs must be >= 1")
    rows = []
    for i in range(runs):
        d = generate(replace(model, seed=model.seed + i))
        t0 = time.perf_counter()
        report = local_permutation_test(replace(cfg, seed=cfg.seed + i), d)
        ms = (time.perf_counter() - t0) * 1e3
        rows.append({
            "run": i,
            "statistic": report.statistic_value,
            "p_value": report.p_value,
            "rejected": int(report.rejected(cfg.alpha)),
            "runtime_ms": ms,
        })
    return {
        "statistic": cfg.statistic,
        "model": model.model,
        "runs": runs,
        "alpha": cfg.alpha,
        "rejection_rate": float(np.mean([r["rejected"] for r in rows])),
        "mean_statistic": float(np.mean([r["statistic"] for r in rows])),
        "mean_runtime_ms": float(np.mean([r["runtime_ms"] for r in rows])),
        "p_values": [r["p_value"] for r in rows],
        "per_run": rows,
    }
