"""SVG emission for sweep results, with the guarantee curve overlaid."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from ..errors import SchemaError
from .runner import read_sweep_csv

PLOT_KINDS = ("gap-vs-T", "gap-vs-eta")


def emit_plot(csv_path, kind: str, out_path) -> None:
    """Log-scale line plot of final gap per transfer mode, bound dashed."""
    if kind not in PLOT_KINDS:
        raise SchemaError(f"unknown plot kind {kind!r}")
    rows = read_sweep_csv(csv_path)
    axis = "T" if kind == "gap-vs-T" else "eta"
    if any(r["axis"] != axis for r in rows):
        raise SchemaError(f"{csv_path}: sweep axis does not match plot kind {kind}")

    fig, ax = plt.subplots(figsize=(6, 4))
    transfers = sorted({r["transfer"] for r in rows})
    for transfer in transfers:
        pts = sorted((r["value"], r["final_gap"], r["bound"])
                     for r in rows if r["transfer"] == transfer)
        xs = [p[0] for p in pts]
        gaps = [p[1] for p in pts]
        (line,) = ax.plot(xs, gaps, marker="o", label=f"{transfer} gap")
        line.set_gid(f"series-{transfer}")
        bounds = [p[2] for p in pts]
        if all(b is not None for b in bounds):
            (ref,) = ax.plot(xs, bounds, linestyle="--", color=line.get_color(),
                             label=f"{transfer} bound")
            ref.set_gid(f"bound-{transfer}")
    ax.set_xlabel(axis)
    ax.set_ylabel("final gap")
    ax.set_yscale("log")
    if axis == "eta" and all(r["value"] > 0 for r in rows):
        ax.set_xscale("log")
    ax.legend(fontsize=8)
    ax.set_title(f"final gap vs {axis}")
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
