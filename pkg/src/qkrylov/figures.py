"""One-shot pipelines that regenerate every published figure panel.

Each entry writes its data tables and an SVG into its own directory and
returns a record of the parameters and default choices it applied.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, classical, export, krylov, plotting, spectral
from .analysis import PRESETS, InitialStates
from .floquet import RotorParams, floquet_operator, make_grid
from .lattice import delta_state

PANEL_IDS = {
    "1": "abcdefgh",
    "2": "abcd",
    "3": "abcd",
    "6": "abcd",
    "7": "abcd",
}
FIGURE_IDS = tuple(
    [f"1{c}" for c in PANEL_IDS["1"]]
    + [f"2{c}" for c in PANEL_IDS["2"]]
    + [f"3{c}" for c in PANEL_IDS["3"]]
    + ["4", "5"]
    + [f"6{c}" for c in PANEL_IDS["6"]]
    + [f"7{c}" for c in PANEL_IDS["7"]]
    + ["8", "9", "10"]
)
REGIMES = ("AR", "CIL", "DL", "PL")


@dataclass
class Context:
    out: Path
    N: int | None = None
    t_max: int | None = None
    plots: bool = True
    defaults: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def size(self, default: int = 1024) -> int:
        return self.N if self.N is not None else default

    def tmax(self, preset: str) -> int:
        return self.t_max if self.t_max is not None else analysis.DEFAULT_T_MAX[preset]

    def note(self, text: str):
        self.defaults.append(text)


def portrait_panel(pp: classical.PhasePortrait, title: str | None = None) -> plotting.Panel:
    pts = pp.points()
    style = {"s": 0.3, "rasterized": pts.shape[0] > 5000, "color": "k"}
    label = title or f"{pp.kind} map, K={pp.K:g}" + (f", alpha={pp.alpha:g}" if pp.alpha else "")
    return plotting.Panel([plotting.Series(pts[:, 0], pts[:, 1], kind="scatter", style=style)],
                          label, "x", "p")


def _series(params: RotorParams, N: int, t_max: int, psi0=None, construction=None):
    grid = make_grid(N, params)
    U = floquet_operator(grid, params, construction)
    psi0 = delta_state(grid, 0) if psi0 is None else psi0
    return krylov.complexity_series(U, psi0, t_max)


def _break_time(params: RotorParams, N: int):
    grid = make_grid(N, params)
    return analysis.break_time_for(floquet_operator(grid, params), delta_state(grid, 0))


def _positive(y):
    return np.maximum(np.asarray(y, dtype=float), 1e-300)


# -- figure 1: phase portraits and averaged eigenstates -------------------------


_PORTRAITS = {"1a": ("standard", 0.5, None), "1b": ("standard", 8.0, None), "1c": ("singular", 1.0, 0.5)}
_EIGEN = {"1d": "AR", "1e": "CIL", "1f": "DL", "1g": "PL"}


def fig_portrait(fid, ctx: Context):
    kind, K, alpha = _PORTRAITS[fid]
    n_orbits, n_steps = 64, 400
    ctx.note(f"{n_orbits} orbits x {n_steps} kicks from a jittered grid, seed 0")
    pp = classical.phase_portrait(kind, K, alpha, n_orbits, n_steps, seed=0)
    rows = ((k // pp.x.shape[0], x, p) for k, (x, p) in enumerate(pp.points()))
    export.write_csv(ctx.out / "points.csv", ["orbit", "x", "p"], rows)
    ctx.summary.update(pp.manifest())
    ctx.summary["occupation_fraction"] = classical.occupation_fraction(pp.x, pp.p_display)
    if ctx.plots:
        plotting.render(ctx.out / "figure.svg", [portrait_panel(pp)], size=(5, 5))


def fig_eigenstate(fid, ctx: Context):
    name = _EIGEN[fid]
    params = PRESETS[name]
    ctx.note("split-operator matrix, eigenvectors from complex Schur form")
    grid = make_grid(ctx.size(), params)
    spec = spectral.diagonalize(floquet_operator(grid, params, "split"))
    profile = spectral.averaged_eigenstate_profile(spec)
    offsets = np.arange(grid.N) - grid.N // 2
    export.write_csv(ctx.out / "eigenstate_profile.csv", ["offset", "density"], zip(offsets, profile))
    series = [plotting.Series(offsets, _positive(profile), name)]
    if name in ("DL", "PL"):
        folded = analysis.folded_profile(profile)
        win = analysis.auto_window(folded)
        ctx.note(f"fit window {win} on the folded profile")
        fit = (analysis.fit_exponential if name == "DL" else analysis.fit_powerlaw)(folded, win)
        ctx.summary["fit"] = fit.to_json()
        n = np.arange(win[0], win[1])
        model = fit.amplitude * (np.exp(fit.slope * n) if name == "DL" else n**fit.slope)
        series += [plotting.Series(n, model, f"{fit.model} fit", style={"linestyle": ":"}),
                   plotting.Series(-n, model, None, style={"linestyle": ":", "color": "C1"})]
    if ctx.plots:
        plotting.render(ctx.out / "figure.svg", [plotting.Panel(
            series, f"averaged eigenstate, {name}", "m - m_max", "|phi(m)|^2", logy=True)])


def fig_random_eigenstate(fid, ctx: Context):
    ctx.note("random complex vector with Gaussian amplitudes, seed 0")
    grid = make_grid(ctx.size(), RotorParams(K=0.0))
    dens = np.abs(analysis.haar_random_state(grid, 0).amplitudes) ** 2
    export.write_csv(ctx.out / "eigenstate_profile.csv", ["m", "density"], zip(grid.m_values, dens))
    ctx.summary["ipr"] = float(np.sum(dens**2))
    if ctx.plots:
        plotting.render(ctx.out / "figure.svg", [plotting.Panel(
            [plotting.Series(grid.m_values, dens)], "delocalized state", "m", "|phi(m)|^2", logy=True)])


# -- figures 2, 4, 6, 9, 10: time series ----------------------------------------


def fig_kbasis(fid, ctx: Context):
    name = REGIMES["abcd".index(fid[1])]
    t_max = ctx.tmax(name)
    params = PRESETS[name]
    cs = _series(params, ctx.size(), t_max)
    export.write_timeseries(ctx.out / "timeseries.csv", cs)
    export.write_profiles(ctx.out / "profiles.csv", cs.densities)
    t_even = t_max - (t_max % 2)
    t_odd = t_even - 1 if t_even > 0 else t_even
    ctx.note(f"profiles shown at t={t_even} and t={t_odd}")
    n = np.arange(cs.decomp.D_k)
    vl = []
    if name == "DL":
        t_b, ctx.summary["break_time_detail"] = _break_time(params, ctx.size())
        ctx.summary["break_time"] = t_b
        vl = [t_b] if t_b else []
    ctx.summary.update({"D_k": cs.decomp.D_k, "mu_final": float(cs.ipr[-1])})
    if ctx.plots:
        plotting.render(ctx.out / "figure.svg", [
            plotting.Panel([plotting.Series(n, _positive(cs.densities[t_even]), f"t={t_even}", kind="step")],
                           f"{name}: even kick", "n", "|phi_n|^2", logy=True),
            plotting.Panel([plotting.Series(n, _positive(cs.densities[t_odd]), f"t={t_odd}", kind="step")],
                           f"{name}: odd kick", "n", "|phi_n|^2", logy=True),
            plotting.Panel([plotting.Series(cs.t, cs.ipr)], "IPR", "t", "mu(t)", vlines=vl),
        ], ncols=3)


def fig_complexity_arnoldi(fid, ctx: Context):
    panels = []
    ctx.note("AR shown over 20 kicks, other regimes over their default t_max")
    for name in REGIMES:
        t_max = 20 if name == "AR" and ctx.t_max is None else ctx.tmax(name)
        params = PRESETS[name]
        cs = _series(params, ctx.size(), t_max)
        sub = krylov.subdiag(cs.decomp)
        export.write_timeseries(ctx.out / f"timeseries_{name}.csv", cs)
        export.write_subdiag(ctx.out / f"subdiag_{name}.csv", sub)
        vl = []
        if name == "DL":
            t_b, ctx.summary["break_time_detail"] = _break_time(params, ctx.size())
            ctx.summary["break_time_DL"] = t_b
            vl = [t_b] if t_b else []
        ctx.summary[f"C_final_{name}"] = float(cs.complexity[-1])
        panels += [
            plotting.Panel([plotting.Series(cs.t, cs.complexity)], f"{name}: K-complexity", "t", "C(t)",
                           vlines=vl),
            plotting.Panel([plotting.Series(np.arange(1, sub.size + 1), sub, kind="step")],
                           f"{name}: Arnoldi coefficients", "n", "h_{n,n-1}"),
        ]
    if ctx.plots:
        plotting.render(ctx.out / "figure.svg", panels, ncols=2)


_HBAR_SETS = {"6a": ("AR", (2 * np.pi, 6 * np.pi)), "6b": ("CIL", (1.0, 1.5, 2.0)),
              "6c": ("DL", (1.0, 1.5, 2.0)), "6d": ("PL", (1.0, 1.5, 2.0))}


def fig_hbar_series(fid, ctx: Context):
    name, hbars = _HBAR_SETS[fid]
    t_max = ctx.tmax(name)
    ctx.note(f"{name} preset with hbar_s in {[round(h, 4) for h in hbars]}, delta state at m=0")
    series = []
    for h in hbars:
        params = dataclasses.replace(PRESETS[name], hbar_s=float(h))
        cs = _series(params, ctx.size(), t_max)
        export.write_timeseries(ctx.out / f"timeseries_hbar{h:.4f}.csv", cs)
        ctx.summary[f"C_final_hbar{h:.4f}"] = float(cs.complexity[-1])
        series.append(plotting.Series(cs.t, cs.complexity, f"hbar_s={h:.3g}"))
    if ctx.plots:
        plotting.render(ctx.out / "figure.svg", [plotting.Panel(series, name, "t", "C(t)")])


def fig_size(fid, ctx: Context):
    t_max = ctx.tmax("DL")
    sizes = (512, 1024, 2048) if ctx.N is None else (ctx.N // 2, ctx.N, 2 * ctx.N)
    ctx.note(f"DL preset, delta state at m=0, sizes {sizes}")
    series = []
    for N in sizes:
        cs = _series(PRESETS["DL"], N, t_max)
        export.write_timeseries(ctx.out / f"timeseries_N{N}.csv", cs)
        t1, t2 = analysis.default_window(t_max)
        ctx.summary[f"C_bar_N{N}"] = float(cs.complexity[t1 : t2 + 1].mean())
        series.append(plotting.Series(cs.t, cs.complexity, f"N={N}"))
    if ctx.plots:
        plotting.render(ctx.out / "figure.svg", [plotting.Panel(series, "DL", "t", "C(t)")])


def fig_haar(fid, ctx: Context):
    ctx.note("Gaussian random initial state, seed 0")
    panels = []
    for name in REGIMES:
        t_max = ctx.tmax(name)
        params = PRESETS[name]
        grid = make_grid(ctx.size(), params)
        cs = _series(params, ctx.size(), t_max, analysis.haar_random_state(grid, 0))
        export.write_timeseries(ctx.out / f"timeseries_{name}.csv", cs)
        ctx.summary[f"C_final_{name}"] = float(cs.complexity[-1])
        panels.append(plotting.Panel([plotting.Series(cs.t, cs.complexity)], name, "t", "C(t)"))
    if ctx.plots:
        plotting.render(ctx.out / "figure.svg", panels, ncols=2)


# -- figures 3, 5, 7: sweeps ----------------------------------------------------


_IPR_SWEEPS = {
    "3a": ("AR", "K", np.linspace(0.1, 2.0, 12)),
    "3b": ("CIL", "K", np.linspace(0.1, 0.9, 9)),
    "3c": ("DL", "K", np.linspace(4.0, 10.0, 13)),
    "3d": ("PL", "alpha", np.linspace(0.1, 0.9, 9)),
}


def _sweep(ctx: Context, name, axis, values, t_max):
    ctx.note(f"initial states: deltas at m={list(analysis.DEFAULT_DELTAS)}, window [t_max/2, t_max]")
    res = analysis.sweep(axis, [float(v) for v in values], PRESETS[name], ctx.size(), t_max,
                         cache_dir=ctx.out.parent / ".points")
    export.write_json(ctx.out / "sweep.json", res.to_json())
    for q in analysis.OBSERVABLES:
        export.write_csv(ctx.out / f"sweep_{q}.csv", ["value", q], zip(res.values, res.column(q)))
    return res


def fig_ipr_sweep(fid, ctx: Context):
    name, axis, values = _IPR_SWEEPS[fid]
    ctx.note(f"{axis} grid {values[0]:g}..{values[-1]:g}, {values.size} points")
    res = _sweep(ctx, name, axis, values, ctx.tmax(name))
    mu = res.column("mu_mean")
    slope, icpt = np.polyfit(res.values, mu, 1)
    ctx.summary["linear_trend"] = {"slope": float(slope), "intercept": float(icpt)}
    if ctx.plots:
        x = np.asarray(res.values)
        plotting.render(ctx.out / "figure.svg", [plotting.Panel([
            plotting.Series(x, mu, name, style={"marker": "o"}),
            plotting.Series(x, slope * x + icpt, "linear guide", style={"linestyle": ":"}),
        ], f"IPR vs {axis}", axis, "<mu>")])


def fig_k_sweep(fid, ctx: Context):
    values = np.geomspace(0.1, 10, 25)
    ctx.note("K grid 0.1..10, 25 log-spaced points, hbar_s=1")
    res = _sweep(ctx, "CIL", "K", values, ctx.tmax("DL"))
    for q in ("C_bar", "sigma2"):
        for lo, hi, tag in ((0, 1, "K<1"), (1, np.inf, "K>1")):
            sel = [i for i, v in enumerate(res.values) if lo < v <= hi]
            sub = analysis.SweepResult("K", [res.values[i] for i in sel], [res.points[i] for i in sel])
            ctx.summary[f"{q}_fit_{tag}"] = analysis.scaling_fit(sub, q).to_json()
    if ctx.plots:
        plotting.render(ctx.out / "figure.svg", [
            plotting.Panel([plotting.Series(res.values, res.column(q), style={"marker": "o"})],
                           q, "K", q, logx=True, logy=True, vlines=[0.971])
            for q in ("C_bar", "sigma2")], ncols=2)


_HBAR_SWEEPS = {"7a": ("CIL", "C_bar"), "7b": ("CIL", "sigma2"), "7c": ("DL", "C_bar"), "7d": ("DL", "sigma2")}


def fig_hbar_sweep(fid, ctx: Context):
    name, q = _HBAR_SWEEPS[fid]
    values = np.linspace(0.8, 2.4, 17)
    ctx.note("hbar_s grid 0.8..2.4, 17 points")
    res = _sweep(ctx, name, "hbar_s", values, ctx.tmax(name))
    fit = analysis.scaling_fit(res, q)
    ctx.summary["fit"] = fit.to_json()
    ctx.summary["sign_changes"] = analysis.sign_changes(np.diff(res.column(q)))
    if ctx.plots:
        plotting.render(ctx.out / "figure.svg", [plotting.Panel(
            [plotting.Series(res.values, res.column(q), name, style={"marker": "o"})],
            f"{q} vs hbar_s", "hbar_s", q, logx=name == "DL", logy=name == "DL")])


# -- figure 8: level spacings ---------------------------------------------------


def fig_spacings(fid, ctx: Context):
    N = ctx.size(2048)
    ctx.note(f"N={N}, split-operator matrices, bin width 0.25, degenerate levels merged below 1e-9")
    s = np.linspace(0, 4, 200)
    panels = []
    for name in ("CIL", "DL", "PL"):
        params = PRESETS[name]
        spec = spectral.diagonalize(floquet_operator(make_grid(N, params), params, "split"))
        stats = spectral.spacing_stats(spec)
        export.write_histogram(ctx.out / f"spacing_histogram_{name}.csv", stats)
        ctx.summary[name] = {"r_mean": stats.r_mean, "ks_poisson": stats.ks_poisson(),
                             "ks_wigner": stats.ks_wigner(), "n_degenerate": stats.n_degenerate}
        panels.append(plotting.Panel([
            plotting.Series(stats.bin_centers, stats.histogram, name, kind="hist"),
            plotting.Series(s, spectral.poisson_pdf(s), "Poisson", style={"linestyle": "--"}),
            plotting.Series(s, spectral.wigner_pdf(s), "GOE", style={"linestyle": "-."}),
        ], name, "s", "P(s)"))
    if ctx.plots:
        plotting.render(ctx.out / "figure.svg", panels, ncols=3)


REGISTRY = {}
for _fid in FIGURE_IDS:
    if _fid in _PORTRAITS:
        REGISTRY[_fid] = fig_portrait
    elif _fid in _EIGEN:
        REGISTRY[_fid] = fig_eigenstate
    elif _fid == "1h":
        REGISTRY[_fid] = fig_random_eigenstate
    elif _fid.startswith("2"):
        REGISTRY[_fid] = fig_kbasis
    elif _fid.startswith("3"):
        REGISTRY[_fid] = fig_ipr_sweep
    elif _fid.startswith("6"):
        REGISTRY[_fid] = fig_hbar_series
    elif _fid.startswith("7"):
        REGISTRY[_fid] = fig_hbar_sweep
REGISTRY.update({"4": fig_complexity_arnoldi, "5": fig_k_sweep, "8": fig_spacings, "9": fig_size,
                 "10": fig_haar})


def reproduce(fid: str, out, overrides: dict | None = None, plots: bool = True) -> dict:
    """Run the pipeline for one figure id; returns the manifest record."""
    overrides = overrides or {}
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    ctx = Context(out, N=overrides.get("N"), t_max=overrides.get("t_max"), plots=plots)
    if "N" not in overrides:
        ctx.note("N=1024 unless the figure fixes its own sizes")
    if "t_max" not in overrides:
        ctx.note(f"t_max per regime {analysis.DEFAULT_T_MAX}")
    REGISTRY[fid](fid, ctx)
    return {"overrides": overrides, "defaults_applied": ctx.defaults, "summary": ctx.summary,
            "presets": {k: v.to_json() for k, v in PRESETS.items()}}
