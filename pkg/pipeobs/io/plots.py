"""L2 error of a twin run on a log scale."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from ..constants import DIAGNOSTIC, OUTPUT
from ..diagnostics.series import DiagnosticsSeries


def decay_figure(series: DiagnosticsSeries, title: str = "") -> Figure:
    """Error norm against time, with the fitted decay and plateau when present."""
    t = series.column("t")
    error = np.sqrt(np.maximum(series.column("l2_err_sq"), 0.0))
    fig = Figure(figsize=(8, 5))
    ax = fig.subplots()
    ax.semilogy(t, np.maximum(error, DIAGNOSTIC.FIT_FLOOR), label="L2 error")
    fit = series.fit
    if fit is not None and error.size:
        window = np.linspace(fit.t0, fit.t1, 50)
        ax.semilogy(
            window,
            fit.C1 * error[0] * np.exp(-fit.C2 * window),
            "--",
            label=f"fit C2 = {fit.C2:.3g}",
        )
        if fit.plateau is not None:
            ax.axhline(fit.plateau, color="grey", linestyle=":", label="plateau")
    ax.set_xlabel("t")
    ax.set_ylabel("L2 error")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    if t.size:
        ax.legend()
    fig.tight_layout()
    return fig


def save_decay_plot(
    series: DiagnosticsSeries, directory: str | Path, title: str = ""
) -> Path:
    out = Path(directory) / OUTPUT.PLOT_FILE
    out.parent.mkdir(parents=True, exist_ok=True)
    decay_figure(series, title).savefig(out, format="svg", metadata={"Date": None})
    return out
