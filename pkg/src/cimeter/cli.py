"""Command-line interface.

Subcommands: ``generate`` (synthetic datasets to CSV), ``compute``
(measures over a CSV), ``test`` (local-permutation conditional
independence test), ``verify`` (identity suite), ``bench`` (runtime
table).  All outputs are JSON documents carrying ``"schema":
"cimeter/1"`` with every resolved default echoed back, except
``generate`` which writes CSV.

Exit codes: 0 success, 1 identity-suite failure, 2 input error,
3 numerical-integrity error.  ``CIMETER_THREADS`` caps thread pools.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import conditional, geometry, verify
from .citest import TestConfig, local_permutation_test
from .data import ColumnRoleMap, GeneratorSpec, generate, load_csv, save_csv
from .errors import InputError, NumericalIntegrityError

SCHEMA = "cimeter/1"
MEASURES = ("dcov", "hsic", "gcdcov_avg", "avg_hscic", "hscic_vstat", "hscic_trace")


def _apply_thread_cap():
    cap = os.environ.get("CIMETER_THREADS")
    if not cap:
        return
    try:
        limit = int(cap)
    except ValueError:
        raise InputError(f"CIMETER_THREADS must be an integer, got {cap!r}") from None
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=limit)
    except ImportError:
        pass


# ---------------------------------------------------------------------------
# spec grammars
# ---------------------------------------------------------------------------

def parse_metric(text: str) -> geometry.SemimetricSpec:
    """``euclidean`` | ``euclidean-power:A`` | ``kernind:<kernel>``"""
    parts = text.split(":")
    if parts[0] == "euclidean":
        return geometry.Euclidean()
    if parts[0] == "euclidean-power":
        if len(parts) != 2:
            raise InputError(f"euclidean-power needs an exponent, got {text!r}")
        return geometry.EuclideanPower(alpha=float(parts[1]))
    if parts[0] == "kernind":
        return geometry.kernel_induced_semimetric(parse_kernel(":".join(parts[1:])))
    raise InputError(f"unknown metric spec {text!r}")


def parse_kernel(text: str) -> geometry.KernelSpec:
    """``gaussian[:BW]`` | ``laplacian[:S]`` | ``gaussian-density:T`` |
    ``dirac`` | ``distind:<metric>``"""
    parts = text.split(":")
    head = parts[0]
    if head == "gaussian":
        return geometry.Gaussian(bandwidth=float(parts[1]) if len(parts) > 1 else None)
    if head == "laplacian":
        return geometry.Laplacian(scale=float(parts[1]) if len(parts) > 1 else None)
    if head == "gaussian-density":
        if len(parts) != 2:
            raise InputError(f"gaussian-density needs a bandwidth, got {text!r}")
        return geometry.GaussianDensity(bandwidth=float(parts[1]))
    if head == "dirac":
        return geometry.DiracDiscrete()
    if head == "distind":
        if len(parts) < 2:
            raise InputError(f"distind needs a base metric, got {text!r}")
        return geometry.DistanceInduced(base=parse_metric(":".join(parts[1:])), anchor=None)
    raise InputError(f"unknown kernel spec {text!r}")


def parse_roles(text: str) -> ColumnRoleMap:
    """``x=a,b;y=c;z=d[;ztype=discrete]``"""
    parts = dict(kv.split("=", 1) for kv in text.split(";") if "=" in kv)
    missing = [k for k in ("x", "y", "z") if k not in parts]
    if missing:
        raise InputError(f"roles string lacks {missing}: {text!r}")
    return ColumnRoleMap(
        x_cols=tuple(parts["x"].split(",")),
        y_cols=tuple(parts["y"].split(",")),
        z_cols=tuple(parts["z"].split(",")),
        z_discrete=parts.get("ztype") == "discrete",
    )


def _load(args) -> "Dataset":
    roles = parse_roles(args.roles) if args.roles else None
    return load_csv(args.input, roles)


def _emit(doc: dict, args) -> None:
    if getattr(args, "format", "json") == "csv":
        text = _doc_to_csv(doc)
    else:
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _doc_to_csv(doc: dict) -> str:
    rows = doc.get("bench") or doc.get("identities")
    if rows is None:
        flat = {k: v for k, v in doc.items() if not isinstance(v, (dict, list))}
        header = ",".join(flat)
        return header + "\n" + ",".join(str(v) for v in flat.values()) + "\n"
    header = ",".join(rows[0])
    lines = [",".join(str(r[k]) for k in rows[0]) for r in rows]
    return header + "\n" + "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    spec = GeneratorSpec(model=args.model, n=args.n, p=args.p, q=args.q, r=args.r,
                         seed=args.seed, coupling=args.coupling, levels=args.levels)
    d = generate(spec)
    save_csv(d, args.out)
    return 0


def cmd_compute(args) -> int:
    d = _load(args)
    t0 = time.perf_counter()
    kx = parse_kernel(args.kernel_x)
    ky = parse_kernel(args.kernel_y)
    if d.z_discrete and args.kernel_z == "gaussian":
        kz = geometry.DiracDiscrete()
    else:
        kz = parse_kernel(args.kernel_z)
    mx = parse_metric(args.metric_x)
    my = parse_metric(args.metric_y)
    smoothing = conditional.SmoothingSpec(shape=args.smoothing, bandwidth=args.bandwidth)
    reg = conditional.RegularizationSpec(lam=args.lam) if args.lam is not None else None

    if args.measure == "dcov":
        from .unconditional import PairedSample, dcov_v

        res = dcov_v(mx, my, PairedSample(x=d.x, y=d.y))
    elif args.measure == "hsic":
        from .unconditional import PairedSample, hsic_v

        res = hsic_v(kx, ky, PairedSample(x=d.x, y=d.y))
    elif args.measure == "gcdcov_avg":
        res = conditional.gcdcov_avg(mx, my, d, smoothing)
    elif args.measure == "avg_hscic":
        res = conditional.avg_hscic(kx, ky, d, smoothing)
    elif args.measure == "hscic_vstat":
        res = conditional.hscic_vstat(kx, ky, kz, d, smoothing)
    elif args.measure == "hscic_trace":
        res = conditional.hscic_trace(kx, ky, kz, d, reg)
    else:
        raise InputError(f"unknown measure {args.measure!r}; choose from {MEASURES}")
    runtime_ms = (time.perf_counter() - t0) * 1e3
    doc = {
        "schema": SCHEMA,
        "measure": res.estimator,
        "value": res.value,
        "n": res.n,
        "params": dict(res.params, seed=args.seed),
        "runtime_ms": runtime_ms,
    }
    _emit(doc, args)
    return 0


def cmd_test(args) -> int:
    d = _load(args)
    kz = parse_kernel(args.kernel_z)
    if d.z_discrete and args.kernel_z == "gaussian":
        kz = geometry.DiracDiscrete()
    cfg = TestConfig(
        statistic=args.measure,
        B=args.B,
        knn=args.knn,
        alpha=args.alpha,
        seed=args.seed,
        kernel_x=parse_kernel(args.kernel_x),
        kernel_y=parse_kernel(args.kernel_y),
        kernel_z=kz,
        metric_x=parse_metric(args.metric_x),
        metric_y=parse_metric(args.metric_y),
        smoothing=conditional.SmoothingSpec(shape=args.smoothing, bandwidth=args.bandwidth),
        reg=conditional.RegularizationSpec(lam=args.lam) if args.lam is not None else None,
    )
    t0 = time.perf_counter()
    report = local_permutation_test(cfg, d)
    runtime_ms = (time.perf_counter() - t0) * 1e3
    doc = {
        "schema": SCHEMA,
        "test": {
            "statistic": cfg.statistic,
            "statistic_value": report.statistic_value,
            "p_value": report.p_value,
            "B": report.B,
            "knn": cfg.knn,
            "alpha": cfg.alpha,
            "scheme": report.scheme,
            "seed": report.seed,
            "rejected": report.rejected(cfg.alpha),
            "replicate_values": list(report.replicate_values),
        },
        "n": d.n,
        "runtime_ms": runtime_ms,
    }
    _emit(doc, args)
    return 0


def cmd_verify(args) -> int:
    results = verify.run_identity_suite(seed=args.seed, fault=args.inject_fault)
    rows = [{"identity": r.name, "max_deviation": r.max_dev, "tolerance": r.tol,
             "passed": r.passed} for r in results]
    ok = all(r.passed for r in results)
    doc = {"schema": SCHEMA, "identities": rows, "all_passed": ok, "seed": args.seed}
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        sys.stderr.write(f"{status}  {r.name}  (max dev {r.max_dev:.3e}, tol {r.tol:.0e})\n")
    _emit(doc, args)
    return 0 if ok else 1


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = []
    for measure in args.measures.split(","):
        if measure not in ("gcdcov_avg", "avg_hscic", "hscic_vstat", "hscic_trace"):
            raise InputError(f"unknown bench measure {measure!r}")
        for n in sizes:
            d = generate(GeneratorSpec(model="gaussian_ci", n=n, seed=args.seed))
            smoothing = conditional.SmoothingSpec()
            best = float("inf")
            for _ in range(max(args.repeats, 1)):
                t0 = time.perf_counter()
                if measure == "gcdcov_avg":
                    conditional.gcdcov_avg(geometry.Euclidean(), geometry.Euclidean(), d, smoothing)
                elif measure == "avg_hscic":
                    conditional.avg_hscic(geometry.Gaussian(), geometry.Gaussian(), d, smoothing)
                elif measure == "hscic_vstat":
                    conditional.hscic_vstat(geometry.Gaussian(), geometry.Gaussian(),
                                            geometry.Gaussian(), d, smoothing)
                else:
                    conditional.hscic_trace(geometry.Gaussian(), geometry.Gaussian(),
                                            geometry.Gaussian(), d)
                best = min(best, (time.perf_counter() - t0) * 1e3)
            rows.append({"measure": measure, "n": n, "runtime_ms": best})
    doc = {"schema": SCHEMA, "bench": rows, "seed": args.seed, "repeats": args.repeats}
    _emit(doc, args)
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cimeter",
                                 description="distance and kernel (conditional) dependence measures")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def add_common(p, with_measure=True):
        p.add_argument("--input", required=True, help="input CSV path")
        p.add_argument("--roles", default=None,
                       help="x=a,b;y=c;z=d[;ztype=discrete] (default: #roles sidecar)")
        if with_measure:
            p.add_argument("--measure", default="hscic_trace",
                           help=f"one of {', '.join(MEASURES)}")
        p.add_argument("--kernel-x", dest="kernel_x", default="gaussian")
        p.add_argument("--kernel-y", dest="kernel_y", default="gaussian")
        p.add_argument("--kernel-z", dest="kernel_z", default="gaussian")
        p.add_argument("--metric-x", dest="metric_x", default="euclidean")
        p.add_argument("--metric-y", dest="metric_y", default="euclidean")
        p.add_argument("--smoothing", default="gaussian",
                       help="smoothing shape: gaussian|epanechnikov|box")
        p.add_argument("--bandwidth", type=float, default=None,
                       help="smoothing bandwidth (default: median heuristic)")
        p.add_argument("--lambda", dest="lam", type=float, default=None,
                       help="ridge for hscic_trace (default: 1e-3 * mean diag KZ)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("compute", help="compute one measure on a dataset")
    add_common(p)
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("test", help="local-permutation conditional independence test")
    add_common(p)
    p.add_argument("--B", type=int, default=199, help="permutation replicates")
    p.add_argument("--knn", type=int, default=10, help="Z-neighborhood size")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("verify", help="run the identity suite on seeded random data")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="runtime table per estimator and sample size")
    p.add_argument("--sizes", default="128,256,512,1024")
    p.add_argument("--measures", default="gcdcov_avg,avg_hscic,hscic_vstat,hscic_trace")
    p.add_argument("--repeats", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", help="write a synthetic dataset to CSV")
    p.add_argument("--model", required=True,
                   help="gaussian_ci|gaussian_dep|postnonlinear_ci|discrete_z_mixture")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--coupling", type=float, default=0.0)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _apply_thread_cap()
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return 2
    except NumericalIntegrityError as exc:
        sys.stderr.write(f"numerical-integrity error: {exc}\n")
        return 3
    except FileNotFoundError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
