"""File schemas, dataset loading, bundled experiment generators, atomic writes.

Two CSV input schemas are supported, both with a mandatory header, UTF-8
encoding and '.' decimal separator:

    samples: t,x1[,x2,...]         one row per particle
    atoms:   t,weight,x1[,x2,...]  weighted Dirac atoms per timestamp

Gaussian-mixture datasets use a JSON schema (documented in the README):
a "basis" list of {mean, covariance} atoms and a "snapshots" list of
{t, weights[, lambda]} rows over that basis.
"""

import csv
import json
import logging
import os
import tempfile
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .measures import (
    DiscreteMeasure,
    GaussianMeasure,
    SnapshotDataset,
    SupportGrid,
    measure_from_samples,
    normalize_timestamps,
)
from .gmm_regression import AtomSet
from .pfo_estimation import iterate_map_particles, logistic_map

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 50


class SchemaError(ValueError):
    """Input file does not match a supported schema."""


def _parse_float(token: str, path: str, line_no: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise SchemaError(f"{path}:{line_no}: cannot parse {token!r} as a number") from None


def read_snapshot_rows(path: str) -> Tuple[str, List[Tuple[float, float, np.ndarray]]]:
    """Parse a snapshot CSV; returns (schema, rows of (t, weight, position)).

    Sample-schema rows get weight 1 per particle. Malformed rows are rejected
    with their line number.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        header = [h.strip().lower() for h in header]
        if len(header) >= 2 and header[0] == "t" and header[1] == "weight":
            schema = "atoms"
            dim = len(header) - 2
            expected = [f"x{i + 1}" for i in range(dim)]
            if dim < 1 or header[2:] != expected:
                raise SchemaError(f"{path}: atom header must be t,weight,x1..xd")
        elif len(header) >= 2 and header[0] == "t":
            schema = "samples"
            dim = len(header) - 1
            expected = [f"x{i + 1}" for i in range(dim)]
            if header[1:] != expected:
                raise SchemaError(f"{path}: sample header must be t,x1..xd")
        else:
            raise SchemaError(f"{path}: unrecognized header {header!r}")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}")
            vals = [_parse_float(c, path, line_no) for c in row]
            if schema == "atoms":
                t, weight, pos = vals[0], vals[1], np.array(vals[2:])
                if weight < 0:
                    raise SchemaError(f"{path}:{line_no}: negative weight")
            else:
                t, weight, pos = vals[0], 1.0, np.array(vals[1:])
            rows.append((t, weight, pos))
        if not rows:
            raise SchemaError(f"{path}: no data rows")
    return schema, rows


def _grid_from_rows(rows: Sequence[Tuple[float, float, np.ndarray]], n_points: int) -> SupportGrid:
    pos = np.stack([r[2] for r in rows])
    lo = pos.min(axis=0)
    hi = pos.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    axes = [np.linspace(lo[a] - 1e-9 * span[a], hi[a] + 1e-9 * span[a], n_points) for a in range(pos.shape[1])]
    if pos.shape[1] == 1:
        return SupportGrid(axes[0][:, None])
    mesh = np.meshgrid(*axes, indexing="ij")
    return SupportGrid(np.stack([m.ravel() for m in mesh], axis=1))


def load_snapshots(
    path: str,
    grid: Optional[SupportGrid] = None,
    grid_points: int = DEFAULT_GRID_POINTS,
    lambdas: Optional[Dict[float, float]] = None,
) -> SnapshotDataset:
    """Load a snapshot dataset from either CSV schema, time-normalized.

    Sample rows are quantized onto the grid (auto-built over the data range
    with grid_points per axis when not given); atom rows become weighted
    Diracs on the union of atom positions. Per-timestamp atom weights must
    sum to 1 within 1e-6 and are renormalized exactly.
    """
    schema, rows = read_snapshot_rows(path)
    times = sorted({r[0] for r in rows})
    snapshots = []
    if schema == "samples":
        the_grid = grid if grid is not None else _grid_from_rows(rows, grid_points)
        for t in times:
            pts = np.stack([r[2] for r in rows if r[0] == t])
            lam = lambdas.get(t) if lambdas else None
            snapshots.append((t, measure_from_samples(pts, the_grid), lam))
    else:
        if grid is not None:
            the_grid = grid
        else:
            pos = np.unique(np.stack([r[2] for r in rows]), axis=0)
            the_grid = SupportGrid(pos)
        key_of = {tuple(p): i for i, p in enumerate(np.asarray(the_grid.points))}
        for t in times:
            weights = np.zeros(len(the_grid))
            total = 0.0
            for rt, w, p in rows:
                if rt != t:
                    continue
                idx = key_of.get(tuple(p))
                if idx is None:
                    # off-grid atom: quantize to the nearest grid point
                    d2 = ((the_grid.points - p[None, :]) ** 2).sum(axis=1)
                    idx = int(np.argmin(d2))
                weights[idx] += w
                total += w
            if abs(total - 1.0) > 1e-6:
                raise SchemaError(f"{path}: atom weights at t={t} sum to {total!r}, expected 1")
            lam = lambdas.get(t) if lambdas else None
            snapshots.append((t, DiscreteMeasure(the_grid, weights / total), lam))
    dataset = SnapshotDataset.from_snapshots(snapshots)
    return normalize_timestamps(dataset)


def load_lambda_file(path: str) -> Dict[float, float]:
    """Per-timestamp regression weights from a 't,lambda' CSV."""
    out: Dict[float, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader, [])]
        if header != ["t", "lambda"]:
            raise SchemaError(f"{path}: lambda file header must be t,lambda")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise SchemaError(f"{path}:{line_no}: expected 2 fields")
            out[_parse_float(row[0], path, line_no)] = _parse_float(row[1], path, line_no)
    if not out:
        raise SchemaError(f"{path}: no weights")
    return out


def load_mixture_dataset(path: str):
    """Gaussian-mixture dataset from JSON: (AtomSet, [(t, lambda, weights)])."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    try:
        basis = [GaussianMeasure(np.asarray(b["mean"], dtype=float), np.asarray(b["covariance"], dtype=float)) for b in doc["basis"]]
        snaps = doc["snapshots"]
        rows = []
        n = len(snaps)
        for s in snaps:
            lam = float(s.get("lambda", 1.0 / n))
            rows.append((float(s["t"]), lam, np.asarray(s["weights"], dtype=float)))
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{path}: mixture schema needs 'basis' and 'snapshots' ({exc})") from None
    return AtomSet.from_atoms(basis), rows


# ---------------------------------------------------------------------------
# Bundled generators reproducing the reference experiments
# ---------------------------------------------------------------------------


def generate_ou_rows(
    n_times: int = 20,
    n_samples: int = 1000,
    seed: int = 0,
) -> List[Tuple[float, float]]:
    """Samples from the spring-relaxation process variance law 2(1 - exp(-2t)).

    Snapshots at n_times equal steps from t=0.1 to t=1; each snapshot draws
    n_samples i.i.d. centered normals with the process variance at its time.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for t in np.linspace(0.1, 1.0, n_times):
        sigma = np.sqrt(2.0 * (1.0 - np.exp(-2.0 * t)))
        for x in rng.normal(0.0, sigma, size=n_samples):
            rows.append((float(t), float(x)))
    return rows


def generate_logistic_rows(
    r: float = 3.0,
    n_snapshots: int = 6,
    n_particles: int = 1000,
    seed: int = 0,
) -> List[Tuple[float, float]]:
    """Particle snapshots of the logistic map from a uniform start on [0, 1]."""
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(0.0, 1.0, size=n_particles)
    paths = iterate_map_particles(lambda x: logistic_map(x, r), x0, n_snapshots)
    timestamps = np.arange(n_snapshots) / (n_snapshots - 1)
    rows = []
    for t, xs in zip(timestamps, paths):
        for x in xs:
            rows.append((float(t), float(x)))
    return rows


def generate_mixture_toy() -> dict:
    """Fixed four-atom basis with four drifting-weight snapshots (deterministic)."""
    means = [-3.0, -1.0, 1.0, 3.0]
    stds = [0.40, 0.50, 0.45, 0.55]
    basis = [{"mean": [m], "covariance": [[s * s]]} for m, s in zip(means, stds)]
    snapshots = [
        {"t": 0.1, "weights": [0.70, 0.20, 0.07, 0.03]},
        {"t": 1.0 / 3.0, "weights": [0.45, 0.30, 0.15, 0.10]},
        {"t": 2.0 / 3.0, "weights": [0.10, 0.15, 0.30, 0.45]},
        {"t": 0.9, "weights": [0.03, 0.07, 0.20, 0.70]},
    ]
    return {"basis": basis, "snapshots": snapshots}


# ---------------------------------------------------------------------------
# Atomic, deterministic file writes
# ---------------------------------------------------------------------------


def _atomic_write(path: str, payload: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, obj) -> None:
    """Write JSON deterministically (sorted keys, repr floats) via temp+rename."""
    _atomic_write(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    """Write a CSV deterministically via temp+rename."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_sample_csv(path: str, rows: Sequence[Tuple[float, float]], dim: int = 1) -> None:
    header = ["t"] + [f"x{i + 1}" for i in range(dim)]
    write_csv(path, header, [(t,) + tuple(np.atleast_1d(x)) for t, x in rows])


def write_atom_csv(path: str, rows: Sequence[Tuple[float, float, np.ndarray]]) -> None:
    dim = len(np.atleast_1d(rows[0][2]))
    header = ["t", "weight"] + [f"x{i + 1}" for i in range(dim)]
    write_csv(path, header, [(t, w) + tuple(np.atleast_1d(x)) for t, w, x in rows])
