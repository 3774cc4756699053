"""CSV trace export and SVG plots of simulation results."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .simulate import SimResult

CSV_COLUMNS = ("t_ms", "neuron_label", "v_mv", "u", "g_total", "eps_norm", "spike")


def _column(arr, k, j, fmt):
    return "" if arr is None else fmt(arr[k, j])


def export_traces(result: SimResult, path) -> Path:
    """One row per neuron per step, neurons in graph order within a step.

    Traces that were not recorded are left empty; the spike column is always
    filled (from the spike times when the boolean trace is missing).
    """
    if not result.labels:
        raise ValueError("cannot export an empty result")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = result.n_steps
    spiked = result.spiked
    if spiked is None:
        spiked = np.zeros((n, len(result.labels)), dtype=bool)
        for j, times in enumerate(result.spike_times):
            idx = np.round(np.asarray(times) / result.dt).astype(int) - 1
            spiked[idx, j] = True
    eps = result.eps_norm()
    t = result.t_ms
    num = repr
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for k in range(n):
            tk = num(float(t[k]))
            for j, label in enumerate(result.labels):
                w.writerow((
                    tk, label,
                    _column(result.v, k, j, lambda x: num(float(x))),
                    _column(result.u, k, j, lambda x: num(float(x))),
                    _column(result.g_total, k, j, lambda x: num(float(x))),
                    _column(eps, k, j, lambda x: num(float(x))),
                    int(spiked[k, j]),
                ))
    return path


def render_plots(result: SimResult, probes: Sequence[str], path) -> list:
    """One SVG per probe: membrane potential and normalised energy, with the
    decode-window boundaries as dotted lines.  ``path`` is a directory."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "spikegates"

    if result.v is None:
        raise ValueError("render_plots needs a result with the v trace recorded")
    out_dir = Path(path)
    out_dir.mkdir(parents=True, exist_ok=True)
    eps = result.eps_norm()
    t = result.t_ms
    bounds = sorted({b for w in result.windows for b in w})
    files = []
    for label in probes:
        j = result.labels.index(label)
        rows = 2 if eps is not None else 1
        fig, axes = plt.subplots(rows, 1, sharex=True, figsize=(8, 2.2 * rows), squeeze=False)
        ax = axes[0, 0]
        ax.plot(t, result.v[:, j], lw=0.7, color="k")
        ax.set_ylabel("v (mV)")
        ax.set_title(label)
        if eps is not None:
            ax2 = axes[1, 0]
            ax2.plot(t, eps[:, j], lw=0.9, color="tab:green")
            ax2.set_ylabel("eps / eps_0")
        for a in axes[:, 0]:
            for b in bounds:
                a.axvline(b, ls=":", lw=0.6, color="0.5")
        axes[-1, 0].set_xlabel("t (ms)")
        fig.tight_layout()
        safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in label)
        f = out_dir / f"{safe}.svg"
        # fixed metadata keeps repeated renders byte-identical
        fig.savefig(f, format="svg", metadata={"Date": None})
        plt.close(fig)
        files.append(f)
    return files
