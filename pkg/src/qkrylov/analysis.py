"""Regime presets, ensemble averages, fits and parameter sweeps."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classical
from .floquet import RotorParams, evolve, floquet_operator, make_grid
from .krylov import DEFAULT_TOL, complexity_series, default_max_dim, subdiag, variance_arnoldi
from .lattice import MomentumGrid, QuantumState, delta_state

logger = logging.getLogger(__name__)

PRESETS = {
    "AR": RotorParams(K=0.5, hbar_s=2 * np.pi),
    "CIL": RotorParams(K=0.5, hbar_s=1.0),
    "DL": RotorParams(K=8.0, hbar_s=1.0),
    "PL": RotorParams(K=1.0, hbar_s=1.0, alpha=0.5),
}
DEFAULT_T_MAX = {"AR": 200, "CIL": 1000, "DL": 1000, "PL": 1000}
DEFAULT_DELTAS = (-2, -1, 0, 1, 2)
BREAK_FACTOR = 0.5
BREAK_SERIES_LENGTH = 4000


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class RegimePreset:
    name: str
    params: RotorParams

    @classmethod
    def get(cls, name: str) -> "RegimePreset":
        key = name.upper()
        if key not in PRESETS:
            raise AnalysisError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
        return cls(key, PRESETS[key])


def haar_random_state(grid: MomentumGrid, seed: int) -> QuantumState:
    """Normalized vector of i.i.d. standard complex Gaussians.

    Distributed as a column of a Haar unitary, i.e. a Haar rotation of a
    delta state.
    """
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(grid.N) + 1j * rng.standard_normal(grid.N)
    return QuantumState(z / np.linalg.norm(z), grid)


# -- fits ---------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    model: str  # "Exponential" or "PowerLaw"
    amplitude: float
    slope: float  # d log y / d n, or d log y / d log n
    r_squared: float
    window: tuple[int, int]

    @property
    def rate_or_exponent(self) -> float:
        """Decay rate ``1/n_l`` (exponential) or decay exponent ``gamma`` (power law)."""
        return -self.slope

    @property
    def localization_length(self) -> float:
        return 1.0 / self.rate_or_exponent

    @property
    def exponent(self) -> float:
        return self.slope

    def to_json(self) -> dict:
        return {**dataclasses.asdict(self), "window": list(self.window)}


def _linear_fit(x, y):
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), min(max(r2, 0.0), 1.0)


def _window_values(profile, window):
    y = np.asarray(profile, dtype=float)
    lo, hi = window if window is not None else (0, y.size)
    if not 0 <= lo < hi <= y.size:
        raise AnalysisError(f"window {window} invalid for length {y.size}")
    seg = y[lo:hi]
    if np.any(seg <= 0):
        raise AnalysisError("fit window contains non-positive values")
    return np.arange(lo, hi, dtype=float), seg, (int(lo), int(hi))


def fit_exponential(profile, window=None) -> FitResult:
    """Least squares of ``log y`` against ``n`` over ``window = (lo, hi)``."""
    n, y, w = _window_values(profile, window)
    c, s, r2 = _linear_fit(n, np.log(y))
    return FitResult("Exponential", float(np.exp(c)), s, r2, w)


def fit_powerlaw(profile, window=None) -> FitResult:
    """Least squares of ``log y`` against ``log n``; ``n`` must start at 1 or more."""
    n, y, w = _window_values(profile, window)
    if n[0] <= 0:
        raise AnalysisError("power-law fit needs n >= 1")
    c, s, r2 = _linear_fit(np.log(n), np.log(y))
    return FitResult("PowerLaw", float(np.exp(c)), s, r2, w)


def folded_profile(profile) -> np.ndarray:
    """Centered profile averaged over both sides, indexed by distance from the center."""
    p = np.asarray(profile, dtype=float)
    c = p.size // 2
    right = p[c:]
    left = p[c::-1][: right.size]
    out = right.copy()
    out[1 : left.size] = 0.5 * (right[1 : left.size] + left[1:])
    return out


def auto_window(profile, skip: int = 5, floor_factor: float = 2.0) -> tuple[int, int]:
    """Decay window: drop the first ``skip`` points and stop at the plateau.

    The plateau level is the median of the outer quarter of the profile;
    the window ends before the first value under ``floor_factor`` times it.
    """
    y = np.asarray(profile, dtype=float)
    if not np.any(y > 0):
        raise AnalysisError("profile has no positive values")
    floor = floor_factor * float(np.median(y[-max(1, y.size // 4):]))
    below = np.flatnonzero(y[skip:] < floor)
    hi = skip + int(below[0]) if below.size else y.size
    if hi - skip < 3:
        raise AnalysisError("decay window shorter than three points")
    return skip, hi


def scaling_fit(sweep: "SweepResult", quantity: str, vs: str | None = None) -> FitResult:
    """Log-log fit of a sweep observable against the swept parameter."""
    if vs is not None and vs != sweep.axis:
        raise AnalysisError(f"sweep is over {sweep.axis!r}, not {vs!r}")
    x = np.asarray(sweep.values, dtype=float)
    y = np.asarray(sweep.column(quantity), dtype=float)
    ok = np.isfinite(y)
    x, y = x[ok], y[ok]
    if x.size < 4:
        raise AnalysisError("scaling fit needs at least four grid points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise AnalysisError("scaling fit needs positive values")
    c, s, r2 = _linear_fit(np.log(x), np.log(y))
    return FitResult("PowerLaw", float(np.exp(c)), s, r2, (0, int(x.size)))


def sign_changes(values) -> int:
    """Number of sign changes of the discrete derivative."""
    d = np.sign(np.diff(np.asarray(values, dtype=float)))
    d = d[d != 0]
    return int(np.count_nonzero(d[1:] != d[:-1]))


# -- break time ---------------------------------------------------------------


def classical_diffusion(K: float, alpha: float | None = None, t_max: int = 200,
                        n: int = 10_000, seed: int = 0) -> float:
    kind = "standard" if alpha is None else "singular"
    return classical.diffusion_coefficient(K, t_max, n, seed, alpha, kind)


def _is_stationary(p2: np.ndarray, tol: float = 0.05) -> bool:
    q = p2[-(p2.size // 4):]
    h = q.size // 2
    if h < 1:
        return False
    a, b = q[:h].mean(), q[h:].mean()
    return abs(a - b) <= tol * max(abs(a), abs(b))


def break_time(
    p2,
    K: float,
    hbar_s: float = 1.0,
    alpha: float | None = None,
    factor: float = BREAK_FACTOR,
    window: int = 10,
    diffusion: float | None = None,
) -> int | None:
    """First kick where quantum momentum growth falls behind classical diffusion.

    The growth rate over the trailing ``window`` kicks,
    ``(<p^2>(t) - <p^2>(t - window)) / window``, is compared with
    ``factor * D_cl``; ``D_cl`` is the classical ensemble diffusion
    coefficient unless ``diffusion`` is given.  ``p2`` is in units of the
    physical momentum ``p = hbar_s m``.  Returns None when the rate never drops.
    """
    p2 = np.asarray(p2, dtype=float)
    if p2.size <= window:
        raise AnalysisError(f"series of length {p2.size} too short for window {window}")
    D = classical_diffusion(K, alpha) if diffusion is None else diffusion
    rate = (p2[window:] - p2[:-window]) / window
    hits = np.flatnonzero(rate < factor * D)
    if hits.size == 0:
        return None
    if not _is_stationary(p2):
        raise AnalysisError("series too short: late-time <p^2> is not stationary")
    return int(hits[0] + window)


def break_time_sensitivity(p2, K, hbar_s=1.0, alpha=None, factors=(0.3, 0.4, 0.5, 0.6, 0.7),
                           diffusion=None) -> dict:
    D = classical_diffusion(K, alpha) if diffusion is None else diffusion
    return {f: break_time(p2, K, hbar_s, alpha, f, diffusion=D) for f in factors}


def break_time_for(U, psi0: QuantumState, factor: float = BREAK_FACTOR,
                   t_max: int = BREAK_SERIES_LENGTH) -> tuple[int | None, dict]:
    """Break time of ``psi0`` under ``U`` from a dedicated ``<p^2>`` series.

    The series runs ``t_max`` kicks, long enough for the late-time
    stationarity check in localized regimes.  Returns ``(t_b, info)``;
    ``t_b`` is None when no crossing is found or the series is rejected.
    """
    p = U.params
    p2 = evolve(U, psi0, t_max).p2()
    info = {"series_length": t_max, "factor": factor}
    try:
        D = classical_diffusion(p.K, p.alpha)
        info["D_cl"] = D
        t_b = break_time(p2, p.K, p.hbar_s, p.alpha, factor, diffusion=D)
        info["sensitivity"] = {str(k): v for k, v in
                               break_time_sensitivity(p2, p.K, p.hbar_s, p.alpha, diffusion=D).items()}
    except AnalysisError as exc:
        info["note"] = str(exc)
        t_b = None
    return t_b, info


# -- ensemble averages --------------------------------------------------------


@dataclass(frozen=True)
class InitialStates:
    """Initial-state ensemble: delta states at given momenta plus Haar states."""

    deltas: tuple[int, ...] = DEFAULT_DELTAS
    n_haar: int = 0
    seed: int = 0

    def build(self, grid: MomentumGrid) -> list[tuple[str, QuantumState]]:
        out = [(f"delta:{m}", delta_state(grid, m)) for m in self.deltas]
        out += [(f"haar:{self.seed + i}", haar_random_state(grid, self.seed + i))
                for i in range(self.n_haar)]
        if not out:
            raise AnalysisError("empty initial-state ensemble")
        return out

    def to_json(self) -> dict:
        return {"deltas": list(self.deltas), "n_haar": self.n_haar, "seed": self.seed}


def default_window(t_max: int) -> tuple[int, int]:
    return (t_max // 2, t_max)


def mean_kcomplexity(U, initial_states, t_window, max_dim=None, tol=DEFAULT_TOL) -> float:
    """Complexity averaged over ``t in [t1, t2]`` and over the initial states."""
    t1, t2 = t_window
    if not 0 <= t1 < t2:
        raise AnalysisError(f"invalid window {t_window}")
    vals = []
    for psi0 in initial_states:
        cs = complexity_series(U, psi0, t2, max_dim, tol)
        vals.append(cs.complexity[t1 : t2 + 1].mean())
    return float(np.mean(vals))


def point_observables(
    params: RotorParams,
    N: int,
    t_max: int,
    window: tuple[int, int] | None = None,
    states: InitialStates = InitialStates(),
    construction: str | None = None,
    tol: float = DEFAULT_TOL,
) -> dict:
    """``C_bar``, ``sigma2`` and ``mu_mean`` at one parameter point.

    Each initial state gets its own Krylov chain; the complexity and IPR are
    averaged over the window, then everything over the ensemble.
    """
    t1, t2 = window if window is not None else default_window(t_max)
    if not 0 <= t1 < t2 <= t_max:
        raise AnalysisError(f"window ({t1}, {t2}) outside [0, {t_max}]")
    grid = make_grid(N, params)
    U = floquet_operator(grid, params, construction)
    per_state = {}
    for label, psi0 in states.build(grid):
        cs = complexity_series(U, psi0, t_max, default_max_dim(N, t_max), tol)
        sub = subdiag(cs.decomp)
        per_state[label] = {
            "C_bar": float(cs.complexity[t1 : t2 + 1].mean()),
            "mu_mean": float(cs.ipr[t1 : t2 + 1].mean()),
            "sigma2": variance_arnoldi(sub) if sub.size >= 2 else 0.0,
            "D_k": cs.decomp.D_k,
        }
    keys = ("C_bar", "mu_mean", "sigma2")
    out = {k: float(np.mean([s[k] for s in per_state.values()])) for k in keys}
    out["per_state"] = per_state
    return out


# -- sweeps -------------------------------------------------------------------

AXES = ("K", "hbar_s", "alpha", "N")
OBSERVABLES = ("C_bar", "sigma2", "mu_mean")


@dataclass
class SweepResult:
    axis: str
    values: list
    points: list[dict]
    metadata: dict = field(default_factory=dict)

    def column(self, quantity: str) -> list:
        return [p.get(quantity, float("nan")) if p["status"] == "ok" else float("nan")
                for p in self.points]

    @property
    def partial(self) -> bool:
        return any(p["status"] != "ok" for p in self.points)

    def to_json(self) -> dict:
        return {
            "axis": self.axis,
            "values": list(self.values),
            "points": self.points,
            "partial": self.partial,
            "metadata": self.metadata,
        }


def resolve_point(template: RotorParams, axis: str, value) -> tuple[RotorParams, int | None]:
    if axis not in AXES:
        raise AnalysisError(f"unknown sweep axis {axis!r}; expected one of {AXES}")
    if axis == "N":
        return template, int(value)
    return dataclasses.replace(template, **{axis: float(value)}), None


def _point_key(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _run_point(task: dict) -> dict:
    params = RotorParams(**task["params"])
    try:
        obs = point_observables(
            params,
            task["N"],
            task["t_max"],
            tuple(task["window"]),
            InitialStates(**task["states"]),
            task["construction"],
        )
        return {"status": "ok", **obs}
    except Exception as exc:  # recorded per point; the sweep carries on
        logger.warning("sweep point %s failed: %s", task["value"], exc)
        return {"status": "failed", "error": f"{type(exc).__name__}: {exc}"}


def sweep_workers() -> int:
    env = os.environ.get("QKR_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sweep(
    axis: str,
    values,
    template: RotorParams,
    N: int = 1024,
    t_max: int = 1000,
    window: tuple[int, int] | None = None,
    states: InitialStates = InitialStates(),
    construction: str | None = None,
    workers: int | None = None,
    cache_dir: str | Path | None = None,
) -> SweepResult:
    """Run ``point_observables`` at every grid value of ``axis``.

    Points are independent tasks; results are keyed by grid index so the
    payload does not depend on completion order.  With ``cache_dir`` each
    finished point is stored and reused, so an interrupted sweep resumes.
    """
    values = list(values)
    if not values:
        raise AnalysisError("empty sweep grid")
    window = tuple(window) if window is not None else default_window(t_max)
    tasks = []
    for v in values:
        params, n_override = resolve_point(template, axis, v)
        tasks.append({
            "value": v,
            "params": dataclasses.asdict(params),
            "N": n_override or N,
            "t_max": t_max,
            "window": list(window),
            "states": states.to_json(),
            "construction": construction,
        })
    cache = Path(cache_dir) if cache_dir is not None else None
    if cache is not None:
        cache.mkdir(parents=True, exist_ok=True)
    results: dict[int, dict] = {}
    todo = []
    for i, task in enumerate(tasks):
        path = cache / f"point_{_point_key(task)}.json" if cache else None
        if path is not None and path.exists():
            results[i] = json.loads(path.read_text())
        else:
            todo.append(i)

    def store(i, res):
        results[i] = res
        if cache is not None and res["status"] == "ok":
            (cache / f"point_{_point_key(tasks[i])}.json").write_text(json.dumps(res, sort_keys=True))

    n_workers = min(workers or sweep_workers(), max(1, len(todo)))
    if n_workers <= 1:
        for i in todo:
            store(i, _run_point(tasks[i]))
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for i, res in zip(todo, pool.map(_run_point, [tasks[i] for i in todo])):
                store(i, res)

    points = []
    for i, task in enumerate(tasks):
        points.append({"value": task["value"], "params": task["params"], "N": task["N"], **results[i]})
    metadata = {
        "template": dataclasses.asdict(template),
        "N": N,
        "t_max": t_max,
        "window": list(window),
        "initial_states": states.to_json(),
        "construction": construction or "default",
    }
    return SweepResult(axis, values, points, metadata)
