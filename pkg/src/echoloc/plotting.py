"""SVG figures from the CSV files the CLI writes."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import read_csv  # noqa: E402

plt.rcParams.update({
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "svg.hashsalt": "echoloc",  # stable element ids across runs
    "svg.fonttype": "none",
})


def plot_csv(path, x: str | None = None, ys=None, step: bool = False, output=None) -> Path:
    """Plot columns of a CSV file as polylines (or step functions) and save as SVG.

    Non-numeric columns are skipped.  ``x`` defaults to the first column and
    ``ys`` to every other numeric column.
    """
    path = Path(path)
    header, rows = read_csv(path)
    cols = {}
    for j, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[j]) for r in rows])
        except ValueError:
            continue
    x = x or header[0]
    if x not in cols:
        raise ValueError(f"column {x!r} is missing or not numeric in {path}")
    ys = list(ys) if ys else [c for c in cols if c != x]
    missing = [c for c in ys if c not in cols]
    if missing:
        raise ValueError(f"columns {missing} are missing or not numeric in {path}")

    fig, ax = plt.subplots(figsize=(6.0, 3.7))
    for name in ys:
        if step:
            ax.step(cols[x], cols[name], where="post", label=name, lw=1.0)
        else:
            ax.plot(cols[x], cols[name], label=name, lw=1.0, marker="." if len(rows) < 40 else None)
    ax.set_xlabel(x)
    if len(ys) == 1:
        ax.set_ylabel(ys[0])
    else:
        ax.legend(frameon=False)
    ax.set_title(path.stem)
    fig.tight_layout()
    output = Path(output) if output else path.with_suffix(".svg")
    fig.savefig(output, format="svg", metadata={"Date": None})
    plt.close(fig)
    return output
