"""Plot-data tables and optional PNG rendering.

A plot-data file is a CSV with columns ``series,x,y`` preceded by ``#``
lines naming the axes.  :func:`render` turns one into a PNG with one line
per series; matplotlib is imported only when rendering.
"""

from __future__ import annotations

import csv
import os
from collections import defaultdict

LINES = ["-", "--", "-.", ":"]
MARKERS = ["o", "v", "s", "D", "x", "P"]


def write_plot_data(path: str, series: dict, xlabel: str = "x", ylabel: str = "y",
                    title: str = "", logx: bool = False, logy: bool = False) -> str:
    """Write ``{name: (xs, ys)}`` to ``path``; returns the path."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# title={title}\n# xlabel={xlabel}\n# ylabel={ylabel}\n")
        fh.write(f"# logx={int(logx)}\n# logy={int(logy)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "x", "y"])
        for name, (xs, ys) in series.items():
            for x, y in zip(xs, ys):
                w.writerow([name, repr(float(x)), repr(float(y))])
    return path


def read_plot_data(path: str):
    meta, series = {}, defaultdict(lambda: ([], []))
    with open(path) as fh:
        rows = []
        for ln in fh:
            if ln.startswith("#"):
                k, _, v = ln[1:].strip().partition("=")
                meta[k] = v
            else:
                rows.append(ln)
    for row in list(csv.DictReader(rows)):
        xs, ys = series[row["series"]]
        xs.append(float(row["x"]))
        ys.append(float(row["y"]))
    return meta, dict(series)


def render(path: str, png_path: str | None = None) -> str:
    """Render a plot-data CSV to PNG (next to it unless ``png_path`` is given)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    meta, series = read_plot_data(path)
    png_path = png_path or os.path.splitext(path)[0] + ".png"
    os.makedirs(os.path.dirname(png_path) or ".", exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, (name, (xs, ys)) in enumerate(series.items()):
        ax.plot(xs, ys, LINES[i % len(LINES)], marker=MARKERS[i % len(MARKERS)], label=name)
    if meta.get("logx") == "1":
        ax.set_xscale("log")
    if meta.get("logy") == "1":
        ax.set_yscale("log")
    ax.set_xlabel(meta.get("xlabel", "x"))
    ax.set_ylabel(meta.get("ylabel", "y"))
    if meta.get("title"):
        ax.set_title(meta["title"])
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return png_path


def render_dir(plot_dir: str, fig_dir: str) -> list[str]:
    """Render every plot-data CSV in ``plot_dir`` into ``fig_dir``."""
    out = []
    for name in sorted(os.listdir(plot_dir)):
        if name.endswith(".csv"):
            out.append(render(os.path.join(plot_dir, name),
                              os.path.join(fig_dir, name[:-4] + ".png")))
    return out
