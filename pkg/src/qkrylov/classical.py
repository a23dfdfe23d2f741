"""Classical kicked-rotor maps on the cylinder and phase portraits.

Both maps kick first and then rotate::

    p' = p + F(x),   x' = (x + p') mod 2pi

with ``F = K sin x`` for the standard map and ``F = -K alpha x^(alpha-1)``
(the force of ``K |x|^alpha`` on the branch ``x in [0, 2pi)``) for the
singular one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2 * np.pi
EPS_REG = 1e-9

MAPS = ("standard", "singular")


@dataclass(frozen=True)
class PhasePoint:
    x: float
    p: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(np.mod(self.x, TWO_PI)))


def standard_force(x, K: float):
    return K * np.sin(x)


def singular_force(x, K: float, alpha: float):
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    x = np.mod(x, TWO_PI)
    if alpha < 1:
        x = np.maximum(x, EPS_REG)
    return -K * alpha * x ** (alpha - 1)


def standard_map_step(pt: PhasePoint, K: float) -> PhasePoint:
    p = pt.p + standard_force(pt.x, K)
    return PhasePoint(pt.x + p, p)


def singular_map_step(pt: PhasePoint, K: float, alpha: float) -> PhasePoint:
    p = pt.p + singular_force(pt.x, K, alpha)
    return PhasePoint(pt.x + p, p)


def iterate(x, p, n_steps: int, K: float, alpha: float | None = None, kind: str = "standard"):
    """Vectorized orbits; returns arrays of shape ``(n_steps + 1, n)``.

    ``x`` is reduced mod 2pi, ``p`` is left unbounded.
    """
    x = np.mod(np.atleast_1d(np.asarray(x, dtype=float)), TWO_PI)
    p = np.atleast_1d(np.asarray(p, dtype=float)).copy()
    xs = np.empty((n_steps + 1, x.size))
    ps = np.empty((n_steps + 1, x.size))
    xs[0], ps[0] = x, p
    for t in range(1, n_steps + 1):
        if kind == "standard":
            p = p + standard_force(x, K)
        elif kind == "singular":
            p = p + singular_force(x, K, alpha)
        else:
            raise ValueError(f"unknown map {kind!r}; expected one of {MAPS}")
        x = np.mod(x + p, TWO_PI)
        xs[t], ps[t] = x, p
    return xs, ps


def fold_momentum(p, center: float = 0.0):
    """Fold momentum into ``[center - pi, center + pi)`` for display."""
    return np.mod(np.asarray(p) - center + np.pi, TWO_PI) + center - np.pi


@dataclass(frozen=True, eq=False)
class PhasePortrait:
    kind: str
    K: float
    alpha: float | None
    seed: int
    x: np.ndarray  # (n_steps + 1) x n_orbits
    p: np.ndarray  # unfolded momenta
    p_display: np.ndarray

    @property
    def n_orbits(self) -> int:
        return self.x.shape[1]

    def excursions(self) -> np.ndarray:
        """Peak-to-peak momentum range of every orbit."""
        return self.p.max(axis=0) - self.p.min(axis=0)

    def points(self) -> np.ndarray:
        """``(x, p_display)`` pairs, orbit by orbit."""
        return np.column_stack([self.x.T.ravel(), self.p_display.T.ravel()])

    def manifest(self) -> dict:
        return {
            "map": self.kind,
            "K": self.K,
            "alpha": self.alpha,
            "seed": self.seed,
            "n_orbits": self.n_orbits,
            "n_steps": self.x.shape[0] - 1,
            "p_display_window": [-np.pi, np.pi],
            "singular_branch": f"x in [0, 2pi), x <- max(x, {EPS_REG:g}) when alpha < 1",
        }


def initial_conditions(n_orbits: int, seed: int, jitter: float = 0.02):
    """Uniform grid over ``[0, 2pi) x [-pi, pi)`` with seeded jitter.

    The grid is ``ceil(sqrt(n))`` cells wide and the first ``n`` cells are
    used; cell centers sit at odd multiples of half a cell, so an odd grid
    width puts a point on ``(pi, 0)``.
    """
    side = int(np.ceil(np.sqrt(n_orbits)))
    cell = TWO_PI / side
    i, j = np.divmod(np.arange(n_orbits), side)
    rng = np.random.default_rng(seed)
    x = (j + 0.5) * cell + jitter * cell * rng.uniform(-0.5, 0.5, n_orbits)
    p = -np.pi + (i + 0.5) * cell + jitter * cell * rng.uniform(-0.5, 0.5, n_orbits)
    return np.mod(x, TWO_PI), p


def phase_portrait(
    kind: str,
    K: float,
    alpha: float | None = None,
    n_orbits: int = 49,
    n_steps: int = 500,
    seed: int = 0,
) -> PhasePortrait:
    if n_orbits < 1 or n_steps < 1:
        raise ValueError("n_orbits and n_steps must be >= 1")
    if kind == "singular" and alpha is None:
        raise ValueError("singular map needs alpha")
    x0, p0 = initial_conditions(n_orbits, seed)
    xs, ps = iterate(x0, p0, n_steps, K, alpha, kind)
    return PhasePortrait(kind, K, alpha, seed, xs, ps, fold_momentum(ps))


def ensemble_p2(K: float, t_max: int, n: int = 10_000, seed: int = 0,
                alpha: float | None = None, kind: str = "standard") -> np.ndarray:
    """``<(p - p0)^2>(t)`` over ``n`` uniform-``x`` points starting at ``p = 0``."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, TWO_PI, n)
    _, ps = iterate(x, np.zeros(n), t_max, K, alpha, kind)
    return np.mean(ps**2, axis=1)


def diffusion_coefficient(K: float, t_max: int = 200, n: int = 10_000, seed: int = 0,
                          alpha: float | None = None, kind: str = "standard") -> float:
    """Least-squares ``D`` in ``<p^2> = D t`` through the origin."""
    p2 = ensemble_p2(K, t_max, n, seed, alpha, kind)
    t = np.arange(t_max + 1)
    return float(t @ p2 / (t @ t))


def quasilinear_diffusion(K: float) -> float:
    return 0.5 * K * K


def occupation_fraction(x, p_display, bins: int = 50) -> float:
    """Share of cells of a ``bins x bins`` grid over the displayed torus that are visited."""
    h, _, _ = np.histogram2d(
        np.ravel(x), np.ravel(p_display), bins=bins, range=[[0, TWO_PI], [-np.pi, np.pi]]
    )
    return float(np.count_nonzero(h) / h.size)


def jacobian_determinant(step, x: float, p: float, h: float = 1e-6) -> float:
    """Central-difference Jacobian determinant of ``step(x, p) -> (x', p')``.

    ``x'`` is unwrapped relative to the unperturbed image so the mod 2pi cut
    does not enter the difference.
    """
    def f(xx, pp):
        return np.array(step(xx, pp), dtype=float)

    base = f(x, p)

    def unwrap(v):
        out = v.copy()
        out[0] = base[0] + (np.mod(v[0] - base[0] + np.pi, TWO_PI) - np.pi)
        return out

    dx = (unwrap(f(x + h, p)) - unwrap(f(x - h, p))) / (2 * h)
    dp = (unwrap(f(x, p + h)) - unwrap(f(x, p - h))) / (2 * h)
    return float(dx[0] * dp[1] - dx[1] * dp[0])
