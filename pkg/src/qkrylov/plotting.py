"""Static SVG panels (lines, scatter, histograms, log axes, legends).

Rendering goes through matplotlib's SVG backend with a fixed hash salt and
no date stamp, so the same data always gives the same file.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "qkrylov"
plt.rcParams["svg.fonttype"] = "none"


@dataclass
class Series:
    x: object
    y: object
    label: str | None = None
    kind: str = "line"  # line | scatter | step | hist
    style: dict = field(default_factory=dict)


@dataclass
class Panel:
    series: list[Series]
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    logx: bool = False
    logy: bool = False
    vlines: list[float] = field(default_factory=list)


def _draw(ax, panel: Panel):
    for s in panel.series:
        if s.kind == "scatter":
            ax.scatter(s.x, s.y, label=s.label, s=s.style.get("s", 1.0), **{
                k: v for k, v in s.style.items() if k != "s"})
        elif s.kind == "hist":
            ax.bar(s.x, s.y, width=s.style.get("width", 0.25), alpha=0.5, label=s.label)
        elif s.kind == "step":
            ax.step(s.x, s.y, where="mid", label=s.label, **s.style)
        else:
            ax.plot(s.x, s.y, label=s.label, **s.style)
    for v in panel.vlines:
        ax.axvline(v, color="k", linestyle=":", linewidth=1)
    if panel.logx:
        ax.set_xscale("log")
    if panel.logy:
        ax.set_yscale("log")
    ax.set_title(panel.title)
    ax.set_xlabel(panel.xlabel)
    ax.set_ylabel(panel.ylabel)
    if any(s.label for s in panel.series):
        ax.legend(fontsize="small")


def render(path, panels: list[Panel], ncols: int = 1, size=(4.5, 3.2)) -> Path:
    """Lay ``panels`` out row by row and write one SVG file."""
    path = Path(path)
    n = len(panels)
    ncols = max(1, min(ncols, n))
    nrows = -(-n // ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(size[0] * ncols, size[1] * nrows), squeeze=False)
    for ax, panel in zip(axes.ravel(), panels):
        _draw(ax, panel)
    for ax in axes.ravel()[n:]:
        ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
