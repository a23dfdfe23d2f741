"""Momentum-basis bookkeeping and basic state observables.

States live on a truncated momentum basis ``m = -N/2 .. N/2 - 1`` with the
conjugate position grid ``x_j = 2 pi j / N``.  Amplitudes are stored in
ascending-``m`` order.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

NORM_TOL = 1e-12


class GridError(ValueError):
    """Invalid grid construction or mismatched grids."""


@dataclass(frozen=True)
class MomentumGrid:
    N: int
    hbar_s: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise GridError(f"N must be an integer >= 2, got {self.N!r}")
        if self.N % 2:
            raise GridError(f"N must be even, got {self.N}")
        if not self.hbar_s > 0:
            raise GridError(f"hbar_s must be positive, got {self.hbar_s!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "hbar_s", float(self.hbar_s))

    @property
    def m_values(self) -> np.ndarray:
        return np.arange(-(self.N // 2), self.N - self.N // 2)

    @property
    def x_values(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.N) / self.N

    def index_of(self, m: int) -> int:
        """Array position of momentum index ``m``."""
        if int(m) != m:
            raise GridError(f"momentum index must be an integer, got {m!r}")
        idx = int(m) + self.N // 2
        if not 0 <= idx < self.N:
            raise IndexError(
                f"momentum index {m} outside [{-(self.N // 2)}, {self.N - self.N // 2 - 1}]"
            )
        return idx

    def to_json(self) -> dict:
        return {"N": self.N, "hbar_s": self.hbar_s}


@dataclass(frozen=True, eq=False)
class QuantumState:
    amplitudes: np.ndarray
    grid: MomentumGrid = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.N,):
            raise GridError(f"amplitude vector has shape {amps.shape}, expected ({self.grid.N},)")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "QuantumState":
        return QuantumState(self.amplitudes / self.norm, self.grid)


def renormalize(amplitudes: np.ndarray, tol: float = NORM_TOL, context: str = "") -> np.ndarray:
    """Rescale to unit norm if the drift exceeds ``tol``; the drift is logged."""
    norm = np.linalg.norm(amplitudes)
    drift = abs(norm - 1.0)
    if drift > tol:
        logger.debug("norm drift %.3e %s; renormalizing", drift, context)
        return amplitudes / norm
    return amplitudes


def delta_state(grid: MomentumGrid, m0: int = 0) -> QuantumState:
    amps = np.zeros(grid.N, dtype=complex)
    amps[grid.index_of(m0)] = 1.0
    return QuantumState(amps, grid)


def uniform_state(grid: MomentumGrid, support: int | None = None) -> QuantumState:
    """Equal-weight superposition over the ``support`` lowest momenta (all if None)."""
    k = grid.N if support is None else support
    amps = np.zeros(grid.N, dtype=complex)
    amps[:k] = 1 / np.sqrt(k)
    return QuantumState(amps, grid)


def momentum_density(state: QuantumState) -> np.ndarray:
    """Probability ``|c_m|^2`` in ascending-m order."""
    a = state.amplitudes
    return a.real**2 + a.imag**2


def ipr(density, tol: float = 1e-8) -> float:
    """Inverse participation ratio ``sum p_n^2`` of a normalized density."""
    p = np.asarray(density, dtype=float)
    if np.any(p < 0):
        raise ValueError("density has negative entries")
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"density sums to {total!r}, not 1 within {tol:g}")
    return float(np.dot(p, p))


def inner(a: QuantumState, b: QuantumState) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    if a.grid.N != b.grid.N:
        raise GridError(f"grid mismatch: N={a.grid.N} vs N={b.grid.N}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))
