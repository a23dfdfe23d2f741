"""File formats: CSV tables, JSON manifests, Matrix Market matrices, state dumps.

Floats are written with 17 significant digits so that files round-trip
exactly and reruns can be compared byte for byte.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .lattice import MomentumGrid, QuantumState

CSV_SCHEMA_VERSION = 1
CSV_SCHEMAS = {
    "timeseries.csv": ["t", "C", "mu", "p2", "leakage"],
    "profiles.csv": ["t", "n0", "n1", "..."],
    "subdiag.csv": ["n", "h_n_nm1"],
    "spacing_histogram.csv": ["bin_center", "density"],
    "eigenstate_profile.csv": ["offset", "density"],
    "quasienergies.csv": ["index", "quasienergy"],
    "points.csv": ["orbit", "x", "p"],
    "state.csv": ["m", "re", "im"],
    "sweep_<observable>.csv": ["value", "<observable>"],
}


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return format(float(v), ".17g")


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


# -- states -------------------------------------------------------------------


def save_state(state: QuantumState, path, binary: bool = False) -> Path:
    """Write ``(re, im)`` pairs in ascending-m order plus a JSON sidecar.

    The binary form is little-endian float64 pairs; the sidecar carries
    ``N`` and ``hbar_s``.
    """
    path = Path(path)
    amps = state.amplitudes
    if binary:
        np.column_stack([amps.real, amps.imag]).astype("<f8").tofile(path)
    else:
        m = state.grid.m_values
        write_csv(path, ["m", "re", "im"], zip(m, amps.real, amps.imag))
    write_json(path.with_name(path.name + ".json"), {
        **state.grid.to_json(),
        "format": "binary-f8le" if binary else "csv",
        "order": "ascending m",
    })
    return path


def load_state(path) -> QuantumState:
    path = Path(path)
    meta = read_json(path.with_name(path.name + ".json"))
    grid = MomentumGrid(meta["N"], meta["hbar_s"])
    if meta["format"] == "binary-f8le":
        pairs = np.fromfile(path, dtype="<f8").reshape(-1, 2)
    else:
        _, data = read_csv(path)
        pairs = data[:, 1:3]
    return QuantumState(pairs[:, 0] + 1j * pairs[:, 1], grid)


# -- operators and Krylov data -------------------------------------------------


def write_matrix_market(path, matrix, comment: str = "") -> Path:
    path = Path(path)
    scipy.io.mmwrite(str(path), scipy.sparse.coo_array(matrix), comment=comment, precision=17)
    return path


def read_matrix_market(path) -> np.ndarray:
    return np.asarray(scipy.io.mmread(str(path)).toarray())


def export_operator(U, path) -> Path:
    """Dense operator as complex Matrix Market plus ``<name>.json`` manifest."""
    path = Path(path)
    write_matrix_market(path, U.dense(), comment=f"Floquet operator {U.params.model}")
    write_json(path.with_suffix(".json"), U.manifest())
    return path


def write_subdiag(path, sub) -> Path:
    return write_csv(path, ["n", "h_n_nm1"], ((n + 1, h) for n, h in enumerate(sub)))


def write_hessenberg(path, decomp) -> Path:
    return write_matrix_market(path, decomp.hess, comment="Arnoldi coefficients h[j,k]")


def write_profiles(path, densities) -> Path:
    """Dense matrix of ``|phi_n(t)|^2`` with rows t and columns n."""
    d = np.asarray(densities)
    header = ["t"] + [f"n{n}" for n in range(d.shape[1])]
    return write_csv(path, header, ([t, *row] for t, row in enumerate(d)))


def write_timeseries(path, series) -> Path:
    rows = zip(series.t, series.complexity, series.ipr, series.p2, series.leakage)
    return write_csv(path, CSV_SCHEMAS["timeseries.csv"], rows)


def write_histogram(path, stats) -> Path:
    return write_csv(path, ["bin_center", "density"], zip(stats.bin_centers, stats.histogram))
