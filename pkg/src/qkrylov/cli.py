"""Command-line front end.

Subcommands ``run``, ``sweep``, ``spectral``, ``classical`` and
``reproduce-figure`` each write CSV/JSON data, optional SVG plots and a
``manifest.json`` into an output directory they lock for the duration.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import contextlib
import hashlib
import logging
import platform
import sys
from pathlib import Path

import filelock
import numpy as np
import scipy
import scipy.stats

from . import __version__, analysis, classical, export, figures, krylov, plotting, spectral
from .config import ConfigError, RunConfig, load_file, merge, parse_initial
from .floquet import floquet_operator, make_grid
from .lattice import delta_state

logger = logging.getLogger("qkrylov")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class StageError(RuntimeError):
    """Numerical failure inside a named pipeline stage."""

    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"stage {stage!r} failed: {type(exc).__name__}: {exc}")
        self.stage = stage


class _Stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        logger.debug("stage %s", self.name)

    def __exit__(self, et, exc, tb):
        if exc is not None and isinstance(exc, (ArithmeticError, ValueError, np.linalg.LinAlgError,
                                                 IndexError, RuntimeError)) \
                and not isinstance(exc, (StageError, ConfigError)):
            raise StageError(self.name, exc) from exc
        return False


stage = _Stage


# -- output helpers -------------------------------------------------------------


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, cfg: RunConfig, sources: dict, summary: dict | None = None) -> Path:
    """Provenance record; feeding it back as ``--config`` reproduces the run."""
    files = {}
    for p in sorted(out.rglob("*")):
        if p.is_file() and p.name not in ("manifest.json", ".lock") and ".points" not in p.parts:
            files[str(p.relative_to(out))] = _sha256(p)
    manifest = {
        "tool": "qkrylov",
        "version": __version__,
        "command": cfg.command,
        "config": cfg.to_json(),
        "sources": sources,
        "defaults_applied": sorted(k for k, v in sources.items() if v == "default"),
        "csv_schema_version": export.CSV_SCHEMA_VERSION,
        "csv_schemas": export.CSV_SCHEMAS,
        "environment": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "files": files,
        "summary": summary or {},
    }
    return export.write_json(out / "manifest.json", manifest)


def initial_state(cfg: RunConfig, grid):
    kind, arg = parse_initial(cfg.initial, cfg.seed)
    if kind == "haar":
        return analysis.haar_random_state(grid, arg)
    return delta_state(grid, arg)


# -- commands -----------------------------------------------------------------


def cmd_run(cfg: RunConfig, out: Path) -> dict:
    params = cfg.params()
    with stage("floquet"):
        grid = make_grid(cfg.N, params)
        U = floquet_operator(grid, params, cfg.construction)
    with stage("initial-state"):
        psi0 = initial_state(cfg, grid)
    with stage("krylov"):
        cs = krylov.complexity_series(U, psi0, cfg.t_max)
    sub = krylov.subdiag(cs.decomp)
    t1, t2 = cfg.t_window()
    summary = {
        "D_k": cs.decomp.D_k,
        "closure_residual": cs.decomp.closure_residual,
        "closed": cs.decomp.closed,
        "max_leakage": float(cs.leakage.max()),
        "C_bar": float(cs.complexity[t1 : t2 + 1].mean()),
        "mu_mean": float(cs.ipr[t1 : t2 + 1].mean()),
        "sigma2": krylov.variance_arnoldi(sub) if sub.size >= 2 else None,
        "window": [t1, t2],
        "operator": U.manifest(),
    }
    with stage("break-time"):
        t_b, summary["break_time_detail"] = analysis.break_time_for(U, psi0)
    summary["break_time"] = t_b
    with stage("export"):
        export.write_timeseries(out / "timeseries.csv", cs)
        export.write_profiles(out / "profiles.csv", cs.densities)
        export.write_subdiag(out / "subdiag.csv", sub)
    if cfg.plots:
        with stage("plot"):
            t = cs.t
            prof_t = [cfg.t_max] if cfg.t_max < 1 else [cfg.t_max - 1, cfg.t_max]
            n = np.arange(cs.decomp.D_k)
            plotting.render(out / "run.svg", [
                plotting.Panel([plotting.Series(t, cs.complexity)], "K-complexity", "t", "C(t)",
                               vlines=[t_b] if t_b else []),
                plotting.Panel([plotting.Series(t, cs.ipr)], "IPR in the K-basis", "t", "mu(t)"),
                plotting.Panel([plotting.Series(np.arange(1, sub.size + 1), sub, kind="step")],
                               "Arnoldi coefficients", "n", "h_{n,n-1}"),
                plotting.Panel([plotting.Series(n, np.maximum(cs.densities[k], 1e-300), label=f"t={k}")
                                for k in prof_t], "K-basis profile", "n", "|phi_n|^2", logy=True),
            ], ncols=2)
    return summary


def _trend(values, ys) -> dict:
    x, y = np.asarray(values, float), np.asarray(ys, float)
    ok = np.isfinite(y)
    if ok.sum() < 3 or np.ptp(y[ok]) == 0:
        return {"rho": None, "p": None, "flag": "none"}
    rho, p = scipy.stats.spearmanr(x[ok], y[ok])
    flag = "none"
    if p < 0.05:
        flag = "decreasing" if rho < 0 else "increasing"
    return {"rho": float(rho), "p": float(p), "flag": flag}


def cmd_sweep(cfg: RunConfig, out: Path) -> dict:
    values = cfg.grid_values()
    states = analysis.InitialStates(tuple(cfg.deltas), cfg.n_haar, cfg.seed)
    with stage("sweep"):
        res = analysis.sweep(cfg.axis, values, cfg.params(), cfg.N, cfg.t_max, cfg.t_window(), states,
                             cfg.construction, cfg.workers, cache_dir=out / ".points")
    trends, fits = {}, {}
    for q in analysis.OBSERVABLES:
        trends[q] = _trend(values, res.column(q))
        try:
            fits[q] = analysis.scaling_fit(res, q).to_json()
        except analysis.AnalysisError as exc:
            fits[q] = {"error": str(exc)}
    payload = {**res.to_json(), "trends": trends, "fits": fits}
    with stage("export"):
        export.write_json(out / "sweep.json", payload)
        for q in analysis.OBSERVABLES:
            export.write_csv(out / f"sweep_{q}.csv", ["value", q], zip(values, res.column(q)))
    if cfg.plots:
        with stage("plot"):
            logx = cfg.grid.endswith(":log")
            label = {"C_bar": "mean K-complexity", "sigma2": "sigma^2(h)", "mu_mean": "<mu>"}
            plotting.render(out / "sweep.svg", [
                plotting.Panel([plotting.Series(values, res.column(q), style={"marker": "o"})],
                               label[q], cfg.axis, q, logx=logx, logy=q != "mu_mean")
                for q in analysis.OBSERVABLES
            ], ncols=3)
    n_failed = sum(p["status"] != "ok" for p in res.points)
    return {"points": len(values), "failed": n_failed, "partial": res.partial, "trends": trends}


def cmd_spectral(cfg: RunConfig, out: Path) -> dict:
    params = cfg.params()
    with stage("floquet"):
        grid = make_grid(cfg.N, params)
        U = floquet_operator(grid, params, "split")
    with stage("diagonalize"):
        spec = spectral.diagonalize(U)
    with stage("statistics"):
        stats = spectral.spacing_stats(spec)
        profile = spectral.averaged_eigenstate_profile(spec)
        folded = analysis.folded_profile(profile)
        fits = {}
        try:
            win = analysis.auto_window(folded)
            fits = {"exponential": analysis.fit_exponential(folded, win).to_json(),
                    "powerlaw": analysis.fit_powerlaw(folded, win).to_json()}
        except analysis.AnalysisError as exc:
            fits = {"error": str(exc)}
    offsets = np.arange(grid.N) - grid.N // 2
    with stage("export"):
        export.write_csv(out / "quasienergies.csv", ["index", "quasienergy"],
                         enumerate(spec.quasienergies))
        export.write_histogram(out / "spacing_histogram.csv", stats)
        export.write_csv(out / "eigenstate_profile.csv", ["offset", "density"], zip(offsets, profile))
        summary = {
            "r_mean": stats.r_mean,
            "r_poisson": spectral.R_POISSON,
            "r_goe": spectral.R_GOE,
            "ks_poisson": stats.ks_poisson(),
            "ks_wigner": stats.ks_wigner(),
            "n_levels": stats.n_levels,
            "n_degenerate": stats.n_degenerate,
            "unitarity_residual": spec.residual,
            "profile_fits": fits,
        }
        export.write_json(out / "spectral.json", summary)
    if cfg.plots:
        with stage("plot"):
            s = np.linspace(0, 4, 200)
            plotting.render(out / "spectral.svg", [
                plotting.Panel([
                    plotting.Series(stats.bin_centers, stats.histogram, "data", kind="hist"),
                    plotting.Series(s, spectral.poisson_pdf(s), "Poisson", style={"linestyle": "--"}),
                    plotting.Series(s, spectral.wigner_pdf(s), "GOE", style={"linestyle": "-."}),
                ], "Level spacings", "s", "P(s)"),
                plotting.Panel([plotting.Series(offsets, np.maximum(profile, 1e-300))],
                               "Averaged eigenstate", "m - m_max", "|phi(m)|^2", logy=True),
            ], ncols=2)
    return summary


def cmd_classical(cfg: RunConfig, out: Path) -> dict:
    alpha = cfg.alpha if cfg.map == "singular" else None
    with stage("iterate"):
        pp = classical.phase_portrait(cfg.map, cfg.K, alpha, cfg.n_orbits, cfg.n_steps, cfg.seed)
    with stage("export"):
        rows = ((k // (pp.x.shape[0]), x, p) for k, (x, p) in enumerate(pp.points()))
        export.write_csv(out / "points.csv", ["orbit", "x", "p"], rows)
        exc = pp.excursions()
        summary = {
            **pp.manifest(),
            "max_excursion": float(exc.max()),
            "median_excursion": float(np.median(exc)),
            "occupation_fraction": classical.occupation_fraction(pp.x, pp.p_display),
        }
        export.write_json(out / "classical.json", summary)
    if cfg.plots:
        with stage("plot"):
            plotting.render(out / "portrait.svg", [figures.portrait_panel(pp)], size=(5, 5))
    return summary


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "spectral": cmd_spectral,
    "classical": cmd_classical,
}


# -- argument parsing -----------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON/YAML config file or a previous manifest.json")
    p.add_argument("--preset", help="regime preset: AR, CIL, DL or PL")
    p.add_argument("--model", help="cqkr or sqkr")
    p.add_argument("--K", type=float)
    p.add_argument("--hbar-s", dest="hbar_s", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--t-max", dest="t_max", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (exclusively locked)")
    p.add_argument("--no-plots", dest="plots", action="store_false", default=None)
    p.add_argument("--construction", help="bessel or split (default: bessel for cqkr, split for sqkr)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkrylov", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"qkrylov {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="time evolution and Krylov observables for one parameter set")
    _common(p)
    p.add_argument("--initial", help="delta:<m> or haar[:<seed>]")
    p.add_argument("--window", type=int, nargs=2, metavar=("T1", "T2"))

    p = sub.add_parser("sweep", help="observables across a parameter grid")
    _common(p)
    p.add_argument("--axis", help="K, hbar_s, alpha or N")
    p.add_argument("--grid", help='"start:stop:count[:log]"')
    p.add_argument("--deltas", type=int, nargs="+", help="delta-state momenta of the ensemble")
    p.add_argument("--n-haar", dest="n_haar", type=int)
    p.add_argument("--window", type=int, nargs=2, metavar=("T1", "T2"))
    p.add_argument("--workers", type=int)

    p = sub.add_parser("spectral", help="quasienergy statistics and averaged eigenstates")
    _common(p)

    p = sub.add_parser("classical", help="phase portrait of the classical map")
    _common(p)
    p.add_argument("--map", help="standard or singular")
    p.add_argument("--orbits", dest="n_orbits", type=int)
    p.add_argument("--steps", dest="n_steps", type=int)

    p = sub.add_parser("reproduce-figure", help="one-shot figure pipelines")
    p.add_argument("figure", help=f"figure id, one of {', '.join(figures.FIGURE_IDS)}")
    p.add_argument("--out")
    p.add_argument("--N", type=int, help="override the figure's system size")
    p.add_argument("--t-max", dest="t_max", type=int, help="override the figure's kick count")
    p.add_argument("--no-plots", dest="plots", action="store_false", default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _flag_values(ns: argparse.Namespace) -> dict:
    skip = {"config", "verbose", "figure"}
    return {k: v for k, v in vars(ns).items() if k not in skip and v is not None}


@contextlib.contextmanager
def owned_directory(out: Path):
    """Exclusive ownership of ``out`` for one invocation."""
    out.mkdir(parents=True, exist_ok=True)
    lock = filelock.FileLock(str(out / ".lock"), timeout=0)
    with lock:
        try:
            yield out
        finally:
            (out / ".lock").unlink(missing_ok=True)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if ns.command == "reproduce-figure":
            return _reproduce(ns)
        file_values = load_file(ns.config) if ns.config else {}
        flags = _flag_values(ns)
        cfg, sources = merge(file_values, flags)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out)
    try:
        with owned_directory(out):
            summary = COMMANDS[cfg.command](cfg, out)
            write_manifest(out, cfg, sources, summary)
    except filelock.Timeout:
        print(f"config error: output directory {out} is locked by another run", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    logger.info("wrote %s", out)
    return EXIT_OK


def _reproduce(ns) -> int:
    fid = ns.figure
    if fid not in figures.FIGURE_IDS:
        print(f"config error: unknown figure id {fid!r}; valid ids: {', '.join(figures.FIGURE_IDS)}",
              file=sys.stderr)
        return EXIT_CONFIG
    out = Path(ns.out or "figures") / f"fig_{fid}"
    overrides = {k: getattr(ns, k) for k in ("N", "t_max") if getattr(ns, k) is not None}
    plots = ns.plots is not False
    try:
        with owned_directory(out):
            with stage(f"figure {fid}"):
                record = figures.reproduce(fid, out, overrides, plots)
            export.write_json(out / "manifest.json", {
                "tool": "qkrylov",
                "version": __version__,
                "command": "reproduce-figure",
                "figure": fid,
                **record,
                "files": {str(p.relative_to(out)): _sha256(p) for p in sorted(out.rglob("*"))
                          if p.is_file() and p.name not in ("manifest.json", ".lock")
                          and ".points" not in p.parts},
            })
    except filelock.Timeout:
        print(f"config error: output directory {out} is locked by another run", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    logger.info("wrote %s", out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
