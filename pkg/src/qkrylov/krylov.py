"""Krylov basis of a Floquet operator by Arnoldi iteration.

The chain ``|K_0> = psi0``, ``h_{k+1,k} |K_{k+1}> = U|K_k> - sum_i h_{i,k}|K_i>``
is built with classical Gram-Schmidt applied twice per step.  The state
``psi(t) = U^t psi0`` lies in ``span{K_0..K_t}``; its amplitudes on the chain
give the spread complexity ``C(t) = sum n |phi_n|^2`` and the chain IPR.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .floquet import FloquetOperator, apply_array, evolve
from .lattice import GridError, QuantumState

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
MAX_DIM_CAP = 4000
LEAKAGE_LIMIT = 1e-6


class KrylovError(ValueError):
    """Invalid Arnoldi input or a projection that lost too much weight."""


@dataclass(frozen=True, eq=False)
class KrylovDecomposition:
    basis: np.ndarray  # N x D, column n is |K_n>
    hess: np.ndarray  # (D + 1) x D, h[j, k] = <K_j|U|K_k>
    closure_residual: float
    tol: float = DEFAULT_TOL

    @property
    def D_k(self) -> int:
        return self.basis.shape[1]

    @property
    def closed(self) -> bool:
        """True when an invariant subspace was found before ``max_dim``."""
        return self.closure_residual < self.tol

    def vector(self, n: int) -> np.ndarray:
        return self.basis[:, n]


@dataclass(frozen=True, eq=False)
class KrylovProfile:
    t: int
    phi: np.ndarray
    leakage: float

    @property
    def density(self) -> np.ndarray:
        return self.phi.real**2 + self.phi.imag**2


def default_max_dim(N: int, t_max: int) -> int:
    return min(N, t_max + 1, MAX_DIM_CAP)


def arnoldi(
    U: FloquetOperator,
    psi0: QuantumState,
    max_dim: int | None = None,
    tol: float = DEFAULT_TOL,
) -> KrylovDecomposition:
    """Build the Krylov chain of ``psi0`` under ``U``.

    Stops when the next subdiagonal norm falls below ``tol`` (an invariant
    subspace was found) or when ``max_dim`` vectors exist.  ``hess`` then
    holds the last subdiagonal norm in ``hess[D, D-1]`` when the chain was cut
    by ``max_dim``, and 0 when it closed.
    """
    N = U.N
    if psi0.grid.N != N:
        raise GridError(f"dimension mismatch: operator N={N}, state N={psi0.grid.N}")
    if max_dim is None:
        max_dim = min(N, MAX_DIM_CAP)
    if not 1 <= max_dim <= N:
        raise KrylovError(f"max_dim must lie in [1, {N}], got {max_dim}")
    if not tol > 0:
        raise KrylovError("tol must be positive")
    v0 = psi0.amplitudes
    if abs(np.linalg.norm(v0) - 1.0) > 1e-10:
        raise KrylovError(f"initial state not normalized (norm {np.linalg.norm(v0)!r})")

    V = np.zeros((N, max_dim), dtype=complex, order="F")
    H = np.zeros((max_dim + 1, max_dim), dtype=complex)
    V[:, 0] = v0
    dim = max_dim
    residual = 0.0
    for k in range(max_dim):
        w = apply_array(U, V[:, k])
        Vk = V[:, : k + 1]
        # (w^H V)^H avoids materializing conj(V)
        h = (w.conj() @ Vk).conj()
        w = w - Vk @ h
        # second pass removes what the first one missed
        h2 = (w.conj() @ Vk).conj()
        w = w - Vk @ h2
        H[: k + 1, k] = h + h2
        beta = float(np.linalg.norm(w))
        residual = beta
        if beta < tol:
            dim = k + 1
            break
        H[k + 1, k] = beta
        if k + 1 < max_dim:
            V[:, k + 1] = w / beta
    if dim < max_dim:
        logger.debug("Krylov chain closed at D_k=%d (residual %.3e)", dim, residual)
    basis = np.ascontiguousarray(V[:, :dim])
    hess = H[: dim + 1, :dim].copy()
    return KrylovDecomposition(basis, hess, residual, tol)


def project(decomp: KrylovDecomposition, psi_t: QuantumState, t: int = 0) -> KrylovProfile:
    """Amplitudes ``phi_n = <K_n|psi(t)>`` and the weight left outside the basis."""
    if psi_t.grid.N != decomp.basis.shape[0]:
        raise GridError("dimension mismatch between state and Krylov basis")
    phi = decomp.basis.conj().T @ psi_t.amplitudes
    return KrylovProfile(t, phi, _leakage(phi))


def _leakage(phi: np.ndarray) -> float:
    return float(1.0 - np.sum(phi.real**2 + phi.imag**2))


def _check_leakage(profile: KrylovProfile):
    if profile.leakage > LEAKAGE_LIMIT:
        raise KrylovError(
            f"state at t={profile.t} has weight {profile.leakage:.3e} outside the "
            f"{profile.phi.size}-vector Krylov basis; the basis was truncated too early"
        )


def k_complexity(profile: KrylovProfile) -> float:
    _check_leakage(profile)
    n = np.arange(profile.phi.size)
    return float(n @ profile.density)


def k_ipr(profile: KrylovProfile) -> float:
    _check_leakage(profile)
    p = profile.density
    return float(p @ p)


def subdiag(decomp: KrylovDecomposition) -> np.ndarray:
    """``h_{n,n-1}`` for ``n = 1..D_k-1`` (the terminal closure norm excluded)."""
    return np.array([decomp.hess[n, n - 1].real for n in range(1, decomp.D_k)])


def variance_arnoldi(sub) -> float:
    """Population variance of the subdiagonal sequence."""
    h = np.asarray(sub, dtype=float)
    if h.size < 2:
        raise KrylovError("variance of Arnoldi coefficients needs at least two entries")
    return float(np.mean((h - h.mean()) ** 2))


@dataclass(frozen=True, eq=False)
class ComplexitySeries:
    """Per-kick complexity record of one initial state."""

    decomp: KrylovDecomposition
    phi: np.ndarray  # (t_max + 1) x D_k
    complexity: np.ndarray
    ipr: np.ndarray
    leakage: np.ndarray
    p2: np.ndarray = field(default=None)

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.complexity.size)

    def profile(self, t: int) -> KrylovProfile:
        return KrylovProfile(t, self.phi[t], float(self.leakage[t]))

    @property
    def densities(self) -> np.ndarray:
        return self.phi.real**2 + self.phi.imag**2


def complexity_series(
    U: FloquetOperator,
    psi0: QuantumState,
    t_max: int,
    max_dim: int | None = None,
    tol: float = DEFAULT_TOL,
) -> ComplexitySeries:
    """One Arnoldi decomposition, then ``C(t)`` and ``mu(t)`` for every kick."""
    if max_dim is None:
        max_dim = default_max_dim(U.N, t_max)
    decomp = arnoldi(U, psi0, max_dim, tol)
    states = evolve(U, psi0, t_max)
    phi = states.amplitudes @ decomp.basis.conj()
    dens = phi.real**2 + phi.imag**2
    leakage = 1.0 - dens.sum(axis=1)
    bad = np.flatnonzero(leakage > LEAKAGE_LIMIT)
    if bad.size:
        t0 = int(bad[0])
        raise KrylovError(
            f"state at t={t0} has weight {leakage[t0]:.3e} outside the "
            f"{decomp.D_k}-vector Krylov basis; raise max_dim"
        )
    n = np.arange(decomp.D_k)
    return ComplexitySeries(
        decomp=decomp,
        phi=phi,
        complexity=dens @ n,
        ipr=np.sum(dens * dens, axis=1),
        leakage=leakage,
        p2=states.p2(),
    )
