"""Quasienergy spectra, averaged eigenstate profiles and level statistics."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import stats

from .floquet import DENSE_LIMIT, FloquetOperator

logger = logging.getLogger(__name__)

R_POISSON = 0.38629
R_GOE = 0.53590
UNITARITY_TOL = 1e-8


class SpectralError(ValueError):
    """Operator unsuitable for dense diagonalization."""


@dataclass(frozen=True, eq=False)
class SpectralData:
    quasienergies: np.ndarray  # ascending, in (-pi, pi]
    eigenvectors: np.ndarray  # columns aligned with quasienergies
    residual: float

    @property
    def N(self) -> int:
        return self.quasienergies.size


@dataclass(frozen=True, eq=False)
class SpacingStats:
    spacings: np.ndarray
    ratios: np.ndarray
    r_mean: float
    bin_edges: np.ndarray
    histogram: np.ndarray
    n_levels: int
    n_degenerate: int

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    def ks_poisson(self) -> float:
        return float(stats.kstest(self.spacings, poisson_cdf).statistic)

    def ks_wigner(self) -> float:
        return float(stats.kstest(self.spacings, wigner_cdf).statistic)


def poisson_pdf(s):
    return np.exp(-np.asarray(s, dtype=float))


def poisson_cdf(s):
    return 1.0 - np.exp(-np.asarray(s, dtype=float))


def wigner_pdf(s):
    s = np.asarray(s, dtype=float)
    return 0.5 * np.pi * s * np.exp(-0.25 * np.pi * s * s)


def wigner_cdf(s):
    s = np.asarray(s, dtype=float)
    return 1.0 - np.exp(-0.25 * np.pi * s * s)


def diagonalize(U: FloquetOperator) -> SpectralData:
    """Eigen-decomposition of a unitary Floquet matrix.

    Uses the complex Schur form: for a normal matrix it is diagonal and the
    Schur vectors are orthonormal eigenvectors, degenerate levels included.
    """
    if U.matrix is None or U.N > DENSE_LIMIT:
        raise SpectralError(f"dense diagonalization refused for N={U.N} (limit {DENSE_LIMIT})")
    unitarity = U.unitarity_residual()
    if unitarity > UNITARITY_TOL:
        raise SpectralError(
            f"operator is not unitary (max |U^H U - I| = {unitarity:.3e}); "
            "use the split-operator construction for spectral studies"
        )
    T, Z = scipy.linalg.schur(U.matrix, output="complex")
    lam = np.diag(T)
    phases = np.angle(lam)
    order = np.argsort(phases, kind="stable")
    vecs = Z[:, order]
    lam = lam[order]
    resid = np.linalg.norm(U.matrix @ vecs - vecs * np.exp(1j * phases[order]), axis=0).max()
    if resid > UNITARITY_TOL:
        logger.warning("eigen-residual %.3e exceeds %.0e", resid, UNITARITY_TOL)
    return SpectralData(phases[order], vecs, float(resid))


def averaged_eigenstate_profile(spec: SpectralData) -> np.ndarray:
    """Mean eigenvector density with each density's maximum shifted to index N/2."""
    dens = np.abs(spec.eigenvectors) ** 2
    dens /= dens.sum(axis=0, keepdims=True)
    N = dens.shape[0]
    shift = np.argmax(dens, axis=0) - N // 2
    idx = (np.arange(N)[:, None] + shift[None, :]) % N
    centered = np.take_along_axis(dens, idx, axis=0)
    profile = centered.mean(axis=1)
    return profile / profile.sum()


def spacing_stats_from_phases(
    phases,
    bin_width: float = 0.25,
    degeneracy_tol: float = 1e-9,
) -> SpacingStats:
    """Unfolded spacings, their histogram and the mean consecutive-spacing ratio.

    Phases are points on the circle.  Levels closer than ``degeneracy_tol``
    (in radians) are merged into one and counted in ``n_degenerate``; the
    wrap-around gap closes the circle, so ``sum(spacings) == n_levels``.
    """
    phi = np.sort(np.mod(np.asarray(phases, dtype=float), 2 * np.pi))
    if phi.size < 3:
        raise ValueError("need at least three levels")
    gaps = np.diff(np.append(phi, phi[0] + 2 * np.pi))
    keep = gaps > degeneracy_tol
    n_degenerate = int(np.count_nonzero(~keep))
    if n_degenerate:
        logger.info("merged %d degenerate quasienergies", n_degenerate)
    levels = phi[keep]
    if levels.size < 3:
        raise ValueError("spectrum is degenerate: fewer than three distinct levels")
    raw = np.diff(np.append(levels, levels[0] + 2 * np.pi))
    spacings = raw * levels.size / (2 * np.pi)
    prev = np.roll(spacings, 1)
    ratios = np.minimum(spacings, prev) / np.maximum(spacings, prev)
    top = max(4.0, float(np.ceil(spacings.max() / bin_width)) * bin_width)
    edges = np.arange(0.0, top + 0.5 * bin_width, bin_width)
    hist, edges = np.histogram(spacings, bins=edges, density=True)
    return SpacingStats(
        spacings=spacings,
        ratios=ratios,
        r_mean=float(ratios.mean()),
        bin_edges=edges,
        histogram=hist,
        n_levels=int(levels.size),
        n_degenerate=n_degenerate,
    )


def spacing_stats(spec: SpectralData, bin_width: float = 0.25, degeneracy_tol: float = 1e-9) -> SpacingStats:
    if spec.N < 100:
        logger.warning("spacing statistics from only %d levels", spec.N)
    return spacing_stats_from_phases(spec.quasienergies, bin_width, degeneracy_tol)


def poisson_phases(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uncorrelated levels on the circle (Poisson statistics)."""
    return rng.uniform(-np.pi, np.pi, size=n)


def goe_phases(n: int, rng: np.random.Generator) -> np.ndarray:
    """GOE levels mapped onto the circle through the semicircle CDF.

    Eigenvalues come from the beta = 1 tridiagonal model, which has the GOE
    joint eigenvalue density and diagonalizes in O(n^2).
    """
    diag = rng.normal(0.0, np.sqrt(2.0), size=n)
    off = np.sqrt(rng.chisquare(np.arange(n - 1, 0, -1)))
    ev = scipy.linalg.eigvalsh_tridiagonal(diag, off)
    u = np.clip(ev / (2 * np.sqrt(n)), -1.0, 1.0)
    cdf = 0.5 + (u * np.sqrt(1 - u * u) + np.arcsin(u)) / np.pi
    return 2 * np.pi * cdf - np.pi
