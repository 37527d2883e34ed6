"""Render emitted datasets to PNG figures next to the delimited output."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from fluxbic.dataset import Dataset

_SKIP_COLUMNS = ("status",)


def _numeric_columns(dataset: Dataset) -> list[str]:
    cols = []
    for i, name in enumerate(dataset.columns):
        if name in _SKIP_COLUMNS:
            continue
        values = [row[i] for row in dataset.rows]
        if all(isinstance(v, (int, float)) for v in values if v is not None):
            cols.append(name)
    return cols


def render_dataset(dataset: Dataset, path: str | Path, title: str = "") -> Path | None:
    """Line plot of every numeric column against the first one.

    Rate-like columns spanning several decades go on a log axis.  Returns
    None when there is nothing to plot (fewer than two numeric columns or
    a single row).
    """
    cols = _numeric_columns(dataset)
    if len(cols) < 2 or len(dataset.rows) < 2:
        return None
    x_name, y_names = cols[0], cols[1:]
    x_idx = dataset.columns.index(x_name)

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    spans = []
    for name in y_names:
        idx = dataset.columns.index(name)
        pairs = [
            (row[x_idx], row[idx])
            for row in dataset.rows
            if row[x_idx] is not None and row[idx] is not None
        ]
        if not pairs:
            continue
        xs, ys = zip(*pairs)
        ax.plot(xs, ys, marker=".", label=name)
        positive = [abs(y) for y in ys if y]
        if positive:
            spans.append(max(positive) / min(positive))
    if spans and max(spans) > 1e3:
        ax.set_yscale("log")
    ax.set_xlabel(x_name)
    ax.legend(fontsize=8, ncol=2)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
