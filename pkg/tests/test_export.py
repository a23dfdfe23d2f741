import numpy as np
import pytest

from qkrylov.analysis import haar_random_state
from qkrylov.export import (
    export_operator,
    fmt,
    load_state,
    read_csv,
    read_json,
    read_matrix_market,
    save_state,
    write_csv,
    write_json,
    write_matrix_market,
    write_profiles,
    write_subdiag,
    write_timeseries,
)
from qkrylov.floquet import RotorParams, floquet_operator, from_matrix, make_grid
from qkrylov.krylov import complexity_series
from qkrylov.lattice import MomentumGrid, delta_state

from conftest import random_unitary


def test_fmt_round_trips():
    for v in (0.1, 1 / 3, 1e-300, -2.5e17, np.float64(np.pi)):
        assert float(fmt(v)) == v
    assert fmt(3) == "3"
    assert fmt(np.int64(-4)) == "-4"
    assert fmt(None) == ""


def test_csv_round_trip(tmp_path):
    rows = np.random.default_rng(0).normal(size=(7, 3))
    path = write_csv(tmp_path / "a.csv", ["x", "y", "z"], rows)
    header, data = read_csv(path)
    assert header == ["x", "y", "z"]
    assert np.array_equal(data, rows)


def test_json_handles_numpy_and_nan(tmp_path):
    obj = {"a": np.arange(3), "b": np.float64(0.5), "c": float("nan"), 4: (1, 2)}
    back = read_json(write_json(tmp_path / "o.json", obj))
    assert back == {"a": [0, 1, 2], "b": 0.5, "c": None, "4": [1, 2]}


@pytest.mark.parametrize("binary", [False, True])
def test_state_round_trip(tmp_path, binary):
    psi = haar_random_state(MomentumGrid(32, 0.7), 3)
    path = save_state(psi, tmp_path / ("s.bin" if binary else "s.csv"), binary=binary)
    back = load_state(path)
    assert back.grid == psi.grid
    assert np.array_equal(back.amplitudes, psi.amplitudes)


def test_matrix_market_round_trip(tmp_path, rng):
    U = random_unitary(10, rng)
    back = read_matrix_market(write_matrix_market(tmp_path / "u.mtx", U))
    assert np.array_equal(back, U)


def test_exported_operator_reloads(tmp_path):
    p = RotorParams(K=2.0, hbar_s=1.0)
    U = floquet_operator(make_grid(64, p), p)
    path = export_operator(U, tmp_path / "U.mtx")
    V = from_matrix(read_matrix_market(path), hbar_s=1.0)
    assert np.array_equal(V.dense(), U.dense())
    assert read_json(tmp_path / "U.json")["K"] == 2.0
    psi = delta_state(U.grid, 0)
    a = complexity_series(U, psi, 20).complexity
    b = complexity_series(V, psi, 20).complexity
    assert np.allclose(a, b, atol=1e-12)  # band vs dense application


def test_krylov_tables(tmp_path):
    p = RotorParams(K=2.0, hbar_s=1.0)
    U = floquet_operator(make_grid(64, p), p)
    cs = complexity_series(U, delta_state(U.grid, 0), 10)
    header, data = read_csv(write_timeseries(tmp_path / "ts.csv", cs))
    assert header == ["t", "C", "mu", "p2", "leakage"]
    assert data.shape == (11, 5)
    assert np.array_equal(data[:, 1], cs.complexity)
    header, data = read_csv(write_subdiag(tmp_path / "sub.csv", [0.5, 0.25]))
    assert header == ["n", "h_n_nm1"] and data.tolist() == [[1, 0.5], [2, 0.25]]
    header, data = read_csv(write_profiles(tmp_path / "pr.csv", np.eye(3)))
    assert header == ["t", "n0", "n1", "n2"]
    assert np.array_equal(data[:, 1:], np.eye(3))
