import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qkrylov.floquet import RotorParams, floquet_operator, from_matrix, make_grid
from qkrylov.spectral import (
    R_GOE,
    R_POISSON,
    SpectralError,
    averaged_eigenstate_profile,
    diagonalize,
    goe_phases,
    poisson_phases,
    spacing_stats,
    spacing_stats_from_phases,
    wigner_cdf,
    wigner_pdf,
    poisson_cdf,
)

from conftest import random_unitary


def test_diagonal_operator():
    theta = np.array([0.3, -2.0, 1.1, 2.9, -0.4, 0.0])
    spec = diagonalize(from_matrix(np.diag(np.exp(1j * theta))))
    order = np.argsort(theta)
    assert np.allclose(spec.quasienergies, theta[order], atol=1e-12)
    # eigenvectors are the permuted identity, up to a phase per column
    assert np.allclose(np.abs(spec.eigenvectors), np.eye(6)[:, order], atol=1e-12)
    assert spec.residual < 1e-12


def test_free_rotor_quasienergies():
    p = RotorParams(K=0.0, hbar_s=0.7)
    grid = make_grid(64, p)
    spec = diagonalize(floquet_operator(grid, p))
    expected = np.angle(np.exp(-1j * 0.7 * grid.m_values.astype(float) ** 2 / 2))
    assert np.allclose(np.sort(expected), spec.quasienergies, atol=1e-10)


def test_delta_eigenvectors_give_central_delta_profile():
    theta = np.linspace(-3, 3, 8)
    spec = diagonalize(from_matrix(np.diag(np.exp(1j * theta))))
    prof = averaged_eigenstate_profile(spec)
    expected = np.zeros(8)
    expected[4] = 1.0
    assert np.allclose(prof, expected)


def test_profile_sums_to_one(rng):
    spec = diagonalize(from_matrix(random_unitary(40, rng)))
    prof = averaged_eigenstate_profile(spec)
    assert prof.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.argmax(prof) == 20


def test_random_unitary_residual(rng):
    spec = diagonalize(from_matrix(random_unitary(50, rng)))
    assert spec.residual < 1e-8
    assert np.all(np.diff(spec.quasienergies) >= 0)
    assert np.all(spec.quasienergies > -np.pi) and np.all(spec.quasienergies <= np.pi)
    V = spec.eigenvectors
    assert np.allclose(V.conj().T @ V, np.eye(50), atol=1e-10)


def test_refuses_non_unitary():
    with pytest.raises(SpectralError, match="not unitary"):
        diagonalize(from_matrix(np.diag([1.0, 2.0, 1.0, 1.0])))


def test_refuses_matrix_free():
    p = RotorParams(K=2.0, hbar_s=1.0)
    U = dataclasses.replace(floquet_operator(make_grid(64, p), p, "split"), matrix=None)
    with pytest.raises(SpectralError, match="refused"):
        diagonalize(U)


def test_picket_fence():
    st_ = spacing_stats_from_phases(np.linspace(-np.pi, np.pi, 200, endpoint=False))
    assert st_.r_mean == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(st_.spacings, 1.0)


def test_degenerate_levels_are_merged():
    base = np.linspace(-3, 3, 10)
    phases = np.concatenate([base, base[[2, 6]] + 1e-12])
    st_ = spacing_stats_from_phases(phases)
    assert st_.n_degenerate == 2
    assert st_.n_levels == phases.size - 2


def test_too_few_levels():
    with pytest.raises(ValueError):
        spacing_stats_from_phases([0.0, 1.0])
    with pytest.raises(ValueError, match="degenerate"):
        spacing_stats_from_phases([0.0, 0.0, 0.0, 1.0])


@given(st.lists(st.floats(-np.pi, np.pi), min_size=5, max_size=60, unique=True))
def test_spacings_unit_mean(phases):
    phases = np.asarray(phases)
    gaps = np.diff(np.sort(np.mod(phases, 2 * np.pi)))
    if np.any(gaps <= 1e-9):
        return
    s = spacing_stats_from_phases(phases)
    assert s.spacings.sum() == pytest.approx(s.n_levels, rel=1e-9)
    assert np.mean(s.spacings) == pytest.approx(1.0, abs=1e-6)
    assert np.all((s.ratios >= 0) & (s.ratios <= 1))


def test_histogram_is_density():
    s = spacing_stats_from_phases(poisson_phases(2000, np.random.default_rng(3)))
    width = np.diff(s.bin_edges)
    assert float(s.histogram @ width) == pytest.approx(1.0, abs=1e-12)


def test_synthetic_poisson_and_goe():
    rng = np.random.default_rng(11)
    rp = spacing_stats_from_phases(poisson_phases(10_000, rng))
    rg = spacing_stats_from_phases(goe_phases(10_000, rng))
    assert abs(rp.r_mean - R_POISSON) < 0.01
    assert abs(rg.r_mean - R_GOE) < 0.01
    assert rp.ks_poisson() < rp.ks_wigner()
    assert rg.ks_wigner() < rg.ks_poisson()


def test_reference_distributions():
    s = np.linspace(0, 20, 200001)
    ds = s[1] - s[0]
    assert np.sum(wigner_pdf(s)) * ds == pytest.approx(1.0, abs=1e-4)
    assert np.sum(s * wigner_pdf(s)) * ds == pytest.approx(1.0, abs=1e-4)
    assert wigner_cdf(20.0) == pytest.approx(1.0)
    assert poisson_cdf(np.log(2)) == pytest.approx(0.5)


def test_spacing_stats_on_operator():
    p = RotorParams(K=5.0, hbar_s=1.0)
    U = floquet_operator(make_grid(128, p), p, "split")
    s = spacing_stats(diagonalize(U))
    assert s.n_levels + s.n_degenerate == 128
