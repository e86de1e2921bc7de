"""Datasets: aligned (X, Y, Z) samples, CSV ingestion, and seeded
synthetic generators with known conditional-independence status.

All randomness flows through ``numpy.random.Philox`` (a counter-based
64-bit generator), so every generated dataset is a pure function of its
:class:`GeneratorSpec`.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

__all__ = ["Dataset", "ColumnRoleMap", "GeneratorSpec", "generate", "load_csv", "save_csv"]

_MODELS = ("gaussian_ci", "gaussian_dep", "postnonlinear_ci", "discrete_z_mixture")


@dataclass(frozen=True)
class Dataset:
    """Aligned samples with fixed roles: ``x`` (n, p), ``y`` (n, q), and
    ``z`` either (n, r) real or a flat array of discrete labels."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    z_discrete: bool = False

    def __post_init__(self):
        x = _as_2d(self.x, "x")
        y = _as_2d(self.y, "y")
        if self.z_discrete:
            z = np.asarray(self.z)
            if z.ndim != 1:
                z = z.reshape(z.shape[0])
        else:
            z = _as_2d(self.z, "z")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)
        n = x.shape[0]
        if n < 1:
            raise InputError("dataset must contain at least one row")
        if y.shape[0] != n or z.shape[0] != n:
            raise InputError(
                f"row count mismatch: x={n}, y={y.shape[0]}, z={z.shape[0]}")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dims(self) -> tuple[int, int, int]:
        r = 1 if self.z_discrete else self.z.shape[1]
        return self.x.shape[1], self.y.shape[1], r

    def permute_y(self, perm: np.ndarray) -> "Dataset":
        """Dataset with Y rows rearranged by ``perm`` (X, Z untouched)."""
        return Dataset(x=self.x, y=self.y[perm], z=self.z, z_discrete=self.z_discrete)


def _as_2d(arr, name: str) -> np.ndarray:
    out = np.asarray(arr, dtype=float)
    if out.ndim < 2:
        out = out.reshape(-1, 1)
    if not np.isfinite(out).all():
        raise InputError(f"{name} contains non-finite values")
    return out


@dataclass(frozen=True)
class ColumnRoleMap:
    """Disjoint column-name lists assigning CSV columns to roles."""

    x_cols: tuple
    y_cols: tuple
    z_cols: tuple
    z_discrete: bool = False

    def __post_init__(self):
        object.__setattr__(self, "x_cols", tuple(self.x_cols))
        object.__setattr__(self, "y_cols", tuple(self.y_cols))
        object.__setattr__(self, "z_cols", tuple(self.z_cols))
        groups = (self.x_cols, self.y_cols, self.z_cols)
        if any(len(g) == 0 for g in groups):
            raise InputError("each of x, y, z needs at least one column")
        flat = [c for g in groups for c in g]
        if len(set(flat)) != len(flat):
            raise InputError("role column lists must be disjoint")


@dataclass(frozen=True)
class GeneratorSpec:
    """Synthetic model description.

    Models: ``gaussian_ci`` (X and Y linear in Z plus independent noise,
    so X indep Y given Z), ``gaussian_dep`` (adds ``coupling`` times the
    first X coordinate to the first Y coordinate, breaking conditional
    independence for ``coupling != 0``), ``postnonlinear_ci`` (tanh of the
    gaussian_ci X and Y, preserving conditional independence), and
    ``discrete_z_mixture`` (Z uniform over ``levels`` labels; X and Y
    drawn independently per level).
    """

    model: str
    n: int
    p: int = 1
    q: int = 1
    r: int = 1
    seed: int = 0
    coupling: float = 0.0
    levels: int = 3

    def __post_init__(self):
        if self.model not in _MODELS:
            raise InputError(f"unknown model {self.model!r}; choose from {_MODELS}")
        if self.n < 1 or self.p < 1 or self.q < 1 or self.r < 1:
            raise InputError("n and all dims must be >= 1")
        if self.model == "discrete_z_mixture" and self.levels < 1:
            raise InputError("levels must be >= 1")


def generate(spec: GeneratorSpec) -> Dataset:
    """Draw a dataset from a synthetic model, deterministically in ``spec``.

    Draw order is fixed (coefficients, then Z, then X noise, then Y
    noise) so that ``gaussian_dep`` with ``coupling=0`` reproduces
    ``gaussian_ci`` bit for bit.
    """
    rng = np.random.Generator(np.random.Philox(spec.seed))
    n, p, q, r = spec.n, spec.p, spec.q, spec.r

    if spec.model == "discrete_z_mixture":
        mu = 2.0 * rng.standard_normal((spec.levels, p))
        nu = 2.0 * rng.standard_normal((spec.levels, q))
        labels = rng.integers(0, spec.levels, size=n)
        x = mu[labels] + rng.standard_normal((n, p))
        y = nu[labels] + rng.standard_normal((n, q))
        return Dataset(x=x, y=y, z=labels, z_discrete=True)

    a = rng.standard_normal((p, r)) / np.sqrt(r)
    b = rng.standard_normal((q, r)) / np.sqrt(r)
    z = rng.standard_normal((n, r))
    x = z @ a.T + rng.standard_normal((n, p))
    y = z @ b.T + rng.standard_normal((n, q))
    if spec.model == "gaussian_dep" and spec.coupling != 0.0:
        y = y.copy()
        y[:, 0] += spec.coupling * x[:, 0]
    if spec.model == "postnonlinear_ci":
        x = np.tanh(x)
        y = np.tanh(y)
    return Dataset(x=x, y=y, z=z)


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------

def save_csv(d: Dataset, path) -> None:
    """Write a dataset with a ``#roles:`` sidecar line and generated
    column names (``x0..``, ``y0..``, ``z0..``); floats carry 17
    significant digits so the round trip is exact."""
    p, q, _ = d.dims
    r = 1 if d.z_discrete else d.z.shape[1]
    xn = [f"x{i}" for i in range(p)]
    yn = [f"y{i}" for i in range(q)]
    zn = [f"z{i}" for i in range(r)]
    roles = f"#roles: x={','.join(xn)};y={','.join(yn)};z={','.join(zn)}"
    if d.z_discrete:
        roles += ";ztype=discrete"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(roles + "\n")
        fh.write(",".join(xn + yn + zn) + "\n")
        for i in range(d.n):
            cells = [_fmt(v) for v in d.x[i]] + [_fmt(v) for v in d.y[i]]
            if d.z_discrete:
                cells.append(str(d.z[i]))
            else:
                cells.extend(_fmt(v) for v in d.z[i])
            fh.write(",".join(cells) + "\n")


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _parse_roles_line(line: str) -> ColumnRoleMap:
    body = line[len("#roles:"):].strip()
    parts = dict(kv.split("=", 1) for kv in body.split(";") if "=" in kv)
    try:
        return ColumnRoleMap(
            x_cols=tuple(parts["x"].split(",")),
            y_cols=tuple(parts["y"].split(",")),
            z_cols=tuple(parts["z"].split(",")),
            z_discrete=parts.get("ztype") == "discrete",
        )
    except KeyError as exc:
        raise InputError(f"roles line is missing the {exc} role") from exc


def load_csv(path, roles: ColumnRoleMap | None = None) -> Dataset:
    """Load a dataset from CSV.

    ``roles`` may be omitted when the file carries a ``#roles:`` sidecar
    line.  Cells in role columns must parse as finite numbers; failures
    are reported with their row and column.
    """
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first:
            raise InputError(f"{path}: empty file")
        if first.startswith("#roles:"):
            sidecar = _parse_roles_line(first)
            header_line = fh.readline()
        else:
            sidecar = None
            header_line = first
        if roles is None:
            roles = sidecar
        if roles is None:
            raise InputError(f"{path}: no roles given and no #roles: sidecar line")
        if not header_line or not header_line.strip():
            raise InputError(f"{path}: missing header row")
        header = [c.strip() for c in header_line.rstrip("\n").split(",")]
        col_index = {name: i for i, name in enumerate(header)}
        for col in roles.x_cols + roles.y_cols + roles.z_cols:
            if col not in col_index:
                raise InputError(f"{path}: column {col!r} not found in header {header}")

        rows = []
        for lineno, line in enumerate(fh, start=3 if sidecar else 2):
            if not line.strip():
                continue
            cells = line.rstrip("\n").split(",")
            if len(cells) != len(header):
                raise InputError(
                    f"{path}:{lineno}: expected {len(header)} cells, got {len(cells)}")
            rows.append((lineno, cells))
        if not rows:
            raise InputError(f"{path}: no data rows")

        def pull(cols, discrete=False):
            out = []
            for lineno, cells in rows:
                vals = []
                for col in cols:
                    raw = cells[col_index[col]].strip()
                    if discrete:
                        vals.append(raw)
                        continue
                    try:
                        v = float(raw)
                    except ValueError:
                        raise InputError(
                            f"{path}:{lineno}: column {col!r}: non-numeric cell {raw!r}") from None
                    if not np.isfinite(v):
                        raise InputError(
                            f"{path}:{lineno}: column {col!r}: non-finite value {raw!r}")
                    vals.append(v)
                out.append(vals)
            return out

        x = np.asarray(pull(roles.x_cols), dtype=float)
        y = np.asarray(pull(roles.y_cols), dtype=float)
        if roles.z_discrete:
            raw = pull(roles.z_cols, discrete=True)
            flat = [row[0] for row in raw]
            try:
                z = np.asarray([int(v) for v in flat])
            except ValueError:
                z = np.asarray(flat)
            return Dataset(x=x, y=y, z=z, z_discrete=True)
        z = np.asarray(pull(roles.z_cols), dtype=float)
        return Dataset(x=x, y=y, z=z)
