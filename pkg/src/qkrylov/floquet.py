"""One-period evolution operators for the canonical and singular kicked rotors.

``U_F = exp(-i hbar_s m^2 / 2) exp(-i V(x) / hbar_s)``: the kick acts first,
then free evolution.  The canonical rotor (``V = K cos x``) has the analytic
banded Bessel matrix; any potential can be built with the split-operator
route, which is exactly unitary on the discrete grid.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .bessel import bessel_j_all, max_order
from .lattice import GridError, MomentumGrid, QuantumState, renormalize

logger = logging.getLogger(__name__)

DENSE_LIMIT = 4096
# Bessel entries below this magnitude are left out of the sparse band
SPARSE_DROP = 1e-22


class FloquetError(ValueError):
    """Misuse or unsafe construction of a Floquet operator."""


class Construction(str, enum.Enum):
    ANALYTIC_BESSEL = "AnalyticBessel"
    SPLIT_OPERATOR = "SplitOperator"
    EXTERNAL = "External"  # dense matrix supplied by the caller


@dataclass(frozen=True)
class RotorParams:
    K: float
    hbar_s: float = 1.0
    alpha: float | None = None
    T: float = 1.0

    def __post_init__(self):
        if self.K < 0:
            raise FloquetError(f"K must be non-negative, got {self.K}")
        if not self.hbar_s > 0:
            raise FloquetError(f"hbar_s must be positive, got {self.hbar_s}")
        if self.T != 1.0:
            raise FloquetError("kick period is fixed to T = 1")
        if self.alpha is not None and not 0 < self.alpha <= 1:
            raise FloquetError(f"alpha must lie in (0, 1], got {self.alpha}")

    @property
    def model(self) -> str:
        return "cqkr" if self.alpha is None else "sqkr"

    def to_json(self) -> dict:
        return {"K": self.K, "hbar_s": self.hbar_s, "alpha": self.alpha, "T": self.T}


@dataclass(frozen=True, eq=False)
class FloquetOperator:
    matrix: np.ndarray | None
    params: RotorParams
    grid: MomentumGrid
    construction: Construction
    kick_phase: np.ndarray | None = field(default=None, repr=False)
    band: scipy.sparse.csr_array | None = field(default=None, repr=False)
    oversample: int = 1

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def free_phase(self) -> np.ndarray:
        return free_phase(self.grid)

    def dense(self) -> np.ndarray:
        if self.matrix is None:
            raise FloquetError(
                f"dense matrix not materialized for N={self.N} > {DENSE_LIMIT}; "
                "only matrix-free application is available"
            )
        return self.matrix

    def unitarity_residual(self) -> float:
        U = self.dense()
        return float(np.abs(U.conj().T @ U - np.eye(self.N)).max())

    def manifest(self) -> dict:
        out = {
            "N": self.N,
            **self.params.to_json(),
            "construction": self.construction.value,
            "oversample": self.oversample,
            "position_branch": "x in [0, 2pi), |x| = x on grid",
        }
        if self.matrix is not None:
            out["unitarity_residual"] = self.unitarity_residual()
        return out


def from_matrix(matrix, hbar_s: float = 1.0) -> FloquetOperator:
    """Wrap a caller-supplied dense matrix, e.g. one read back from Matrix Market."""
    M = np.asarray(matrix, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise FloquetError(f"square matrix expected, got shape {M.shape}")
    return FloquetOperator(M, RotorParams(K=0.0, hbar_s=hbar_s), MomentumGrid(M.shape[0], hbar_s),
                           Construction.EXTERNAL)


def free_phase(grid: MomentumGrid) -> np.ndarray:
    m = grid.m_values.astype(float)
    return np.exp(-0.5j * grid.hbar_s * m * m)


def bessel_band(kappa: float) -> int:
    """Half-width beyond which ``J_k(kappa)`` is negligible at double precision.

    At least ``4 ceil(kappa)``; widened for small ``kappa`` until the
    discarded tail ``sum_{|k|>band} J_k^2`` is below 1e-17.
    """
    band = 4 * math.ceil(kappa)
    if kappa == 0:
        return 0
    n = min(max_order(kappa), band + 60)
    j = bessel_j_all(n, kappa)
    tail = 2 * np.cumsum((j**2)[::-1])[::-1]
    while band < n and tail[band + 1] > 1e-17:
        band += 1
    return band


def _check_grid(grid: MomentumGrid, params: RotorParams):
    if grid.hbar_s != params.hbar_s:
        raise FloquetError(f"grid hbar_s={grid.hbar_s} differs from rotor hbar_s={params.hbar_s}")


def make_grid(N: int, params: RotorParams) -> MomentumGrid:
    return MomentumGrid(N, params.hbar_s)


def cqkr_floquet_matrix(grid: MomentumGrid, params: RotorParams) -> FloquetOperator:
    """Banded Bessel matrix of the canonical rotor on the truncated momentum basis.

    ``U[m2, m1] = exp(-i hbar m2^2 / 2) (-i)^(m2-m1) J_{m2-m1}(K / hbar)``, the
    momentum matrix element of ``exp(-i K cos(x) / hbar)`` followed by free
    evolution.
    """
    if params.alpha is not None:
        raise FloquetError("cqkr_floquet_matrix requires alpha to be absent")
    _check_grid(grid, params)
    if grid.N > DENSE_LIMIT:
        raise FloquetError(f"analytic matrix limited to N <= {DENSE_LIMIT}")
    kappa = params.K / params.hbar_s
    band = 4 * math.ceil(kappa)
    if band > grid.N // 4:
        raise FloquetError(
            f"truncation unsafe: Bessel band {band} exceeds N/4 = {grid.N // 4} "
            f"(K/hbar_s = {kappa:.4g})"
        )
    n_max = min(grid.N - 1, max_order(kappa))
    j_pos = bessel_j_all(n_max, kappa)
    d = np.arange(-(grid.N - 1), grid.N)
    absd = np.abs(d)
    jd = np.zeros(d.size)
    ok = absd <= n_max
    jd[ok] = j_pos[absd[ok]]
    jd[(d < 0) & (absd % 2 == 1)] *= -1.0
    # (-i)^d without floating-point powers
    phase = np.array([1, -1j, -1, 1j])[d % 4]
    coupling = phase * jd
    rows = np.arange(grid.N)[:, None]
    cols = np.arange(grid.N)[None, :]
    kick = coupling[rows - cols + grid.N - 1]
    matrix = free_phase(grid)[:, None] * kick
    band_matrix = scipy.sparse.csr_array(np.where(np.abs(kick) >= SPARSE_DROP, matrix, 0))
    return FloquetOperator(matrix, params, grid, Construction.ANALYTIC_BESSEL, band=band_matrix)


def kick_potential(params: RotorParams, x: np.ndarray, potential: str | None = None) -> np.ndarray:
    """Kick potential on the position grid.

    ``potential`` is "cos" or "singular"; by default it follows the model
    implied by ``params.alpha``.
    """
    if potential is None:
        potential = "cos" if params.alpha is None else "singular"
    if potential == "cos":
        return params.K * np.cos(x)
    if potential == "singular":
        if params.alpha is None:
            raise FloquetError("singular potential requires alpha")
        # branch x in [0, 2pi): |x| = x, finite at x = 0
        return params.K * np.abs(x) ** params.alpha
    raise FloquetError(f"unknown potential {potential!r}")


def split_operator_matrix(
    grid: MomentumGrid,
    params: RotorParams,
    potential: str | None = None,
    oversample: int = 1,
) -> FloquetOperator:
    """Floquet operator built column by column with FFTs.

    Each basis state ``|m_j>`` is taken to the position grid, multiplied by
    the kick phase, transformed back and multiplied by the free phase.  The
    kick block is circulant in momentum so all columns come from one FFT.

    With ``oversample=1`` the position grid has N points and the matrix is
    exactly unitary, with momenta ``m`` and ``m + N`` identified.  A finer
    grid (``oversample >= 2``) removes that wrap-around and yields the
    truncated cylinder operator, equal to the analytic Bessel matrix for the
    cosine kick; it is then no longer exactly unitary at the band edges.
    """
    if potential is None and params.alpha is None:
        raise FloquetError("split-operator construction of the singular rotor requires alpha")
    if int(oversample) != oversample or oversample < 1:
        raise FloquetError(f"oversample must be a positive integer, got {oversample!r}")
    _check_grid(grid, params)
    matrix = None
    if grid.N <= DENSE_LIMIT:
        M = grid.N * int(oversample)
        x = 2 * np.pi * np.arange(M) / M
        fine_kick = np.exp(-1j * kick_potential(params, x, potential) / params.hbar_s)
        # c[d] = (1/M) sum_k kick_k exp(-i d x_k), d taken mod M
        c = np.fft.fft(fine_kick) / M
        m = grid.m_values
        kick = c[(m[:, None] - m[None, :]) % M]
        matrix = free_phase(grid)[:, None] * kick
    kick_phase = None
    if oversample == 1:
        kick_phase = np.exp(-1j * kick_potential(params, grid.x_values, potential) / params.hbar_s)
    return FloquetOperator(
        matrix, params, grid, Construction.SPLIT_OPERATOR, kick_phase, oversample=int(oversample)
    )


def sqkr_floquet_matrix(grid: MomentumGrid, params: RotorParams) -> FloquetOperator:
    if params.alpha is None:
        raise FloquetError("sqkr_floquet_matrix requires alpha")
    return split_operator_matrix(grid, params, "singular")


def floquet_operator(
    grid: MomentumGrid, params: RotorParams, construction: str | None = None
) -> FloquetOperator:
    """Operator for ``params`` with the default construction for its model.

    ``construction="split"`` forces the split-operator route, which is the
    only option for the singular rotor and gives an exactly unitary matrix
    for the canonical one.
    """
    if params.alpha is not None:
        return sqkr_floquet_matrix(grid, params)
    if construction in (None, "bessel", Construction.ANALYTIC_BESSEL):
        return cqkr_floquet_matrix(grid, params)
    if construction in ("split", Construction.SPLIT_OPERATOR):
        return split_operator_matrix(grid, params, "cos")
    raise FloquetError(f"unknown construction {construction!r}")


def _apply_split(U: FloquetOperator, amps: np.ndarray) -> np.ndarray:
    # momentum (ascending m) -> position
    psi_x = np.fft.ifft(np.fft.ifftshift(amps, axes=0), axis=0, norm="ortho")
    kicked = U.kick_phase.reshape((-1,) + (1,) * (amps.ndim - 1)) * psi_x
    back = np.fft.fftshift(np.fft.fft(kicked, axis=0, norm="ortho"), axes=0)
    return U.free_phase.reshape((-1,) + (1,) * (amps.ndim - 1)) * back


def apply_array(U: FloquetOperator, amps: np.ndarray, matrix_free: bool | None = None) -> np.ndarray:
    """``U @ amps`` for a vector or a column stack, without renormalizing.

    ``matrix_free=None`` picks the cheapest exact route: FFTs for
    split-operator matrices, the sparse band for Bessel matrices.
    ``False`` forces the dense product.
    """
    if amps.shape[0] != U.N:
        raise GridError(f"dimension mismatch: operator N={U.N}, state length {amps.shape[0]}")
    if matrix_free is None:
        matrix_free = U.kick_phase is not None or U.band is not None or U.matrix is None
    if not matrix_free:
        return U.dense() @ amps
    if U.kick_phase is not None:
        return _apply_split(U, amps)
    if U.band is not None:
        return U.band @ amps
    raise FloquetError("no matrix-free route for this operator")


def apply(U: FloquetOperator, psi: QuantumState, matrix_free: bool | None = None) -> QuantumState:
    out = apply_array(U, psi.amplitudes, matrix_free)
    return QuantumState(renormalize(out, context="after kick"), psi.grid)


@dataclass(frozen=True, eq=False)
class StateSeries:
    """Snapshots ``psi(t)`` for ``t = 0..t_max`` stored row-wise."""

    amplitudes: np.ndarray
    grid: MomentumGrid

    @property
    def t_max(self) -> int:
        return self.amplitudes.shape[0] - 1

    def __len__(self):
        return self.amplitudes.shape[0]

    def __getitem__(self, t: int) -> QuantumState:
        return QuantumState(self.amplitudes[t], self.grid)

    def densities(self) -> np.ndarray:
        a = self.amplitudes
        return a.real**2 + a.imag**2

    def p2(self) -> np.ndarray:
        """``<p^2>(t) = hbar_s^2 sum_m m^2 |c_m(t)|^2``."""
        m = self.grid.m_values.astype(float)
        return self.grid.hbar_s**2 * (self.densities() @ (m * m))


def evolve(U: FloquetOperator, psi0: QuantumState, t_max: int) -> StateSeries:
    if t_max < 0:
        raise ValueError("t_max must be non-negative")
    if psi0.grid.N != U.N:
        raise GridError(f"dimension mismatch: operator N={U.N}, state N={psi0.grid.N}")
    out = np.empty((t_max + 1, U.N), dtype=complex)
    out[0] = psi0.amplitudes
    for t in range(1, t_max + 1):
        out[t] = renormalize(apply_array(U, out[t - 1]), context=f"at t={t}")
    return StateSeries(out, psi0.grid)
