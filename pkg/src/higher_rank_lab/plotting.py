"""Optional figures for command line reports.

matplotlib is imported only when a figure is requested; install the ``plot``
extra to enable it.
"""

from __future__ import annotations

from .errors import InvalidArgument


def save_series(path, x, series: dict, xlabel: str, ylabel: str, logy: bool = False, title: str = "") -> None:
    """Line plot of several named series against ``x``, written to ``path``."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise InvalidArgument("figures need matplotlib; install the 'plot' extra") from exc
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    for label, y in series.items():
        ax.plot(x, y, marker="o", ms=3, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    # a fixed metadata dict keeps repeated runs byte-identical for PNG output
    fig.savefig(path, metadata={"Software": None} if str(path).endswith(".png") else None)
    plt.close(fig)
