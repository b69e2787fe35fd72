"""Figure rendering for the report paths.

Every CLI report writes its delimited data first; these helpers render the
companion matplotlib figures to files (PNG) next to it. Nothing here opens a
window: the Agg backend is forced so the toolkit stays headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update(
    {
        "figure.figsize": (7.0, 4.5),
        "axes.grid": True,
        "grid.alpha": 0.4,
        "lines.linewidth": 1.6,
        "lines.markersize": 5,
    }
)

_MARKERS = "osd^v<>Ph*"


def save_ber_figure(curves, path, title=None, floor=1e-7):
    """Semilog BER-vs-Es/N0 plot; zero-BER points are clipped to `floor` and
    drawn hollow so error-free measurements stay visible."""
    fig, ax = plt.subplots()
    for i, curve in enumerate(curves):
        pts = sorted(curve.points, key=lambda p: p.es_n0_db)
        x = np.array([p.es_n0_db for p in pts])
        y = np.array([p.ber for p in pts])
        clipped = y <= 0
        y = np.where(clipped, floor, y)
        marker = _MARKERS[i % len(_MARKERS)]
        (line,) = ax.semilogy(x, y, marker=marker, label=curve.label)
        if clipped.any():
            ax.semilogy(
                x[clipped], y[clipped], linestyle="none", marker=marker,
                markerfacecolor="white", color=line.get_color(),
            )
    ax.set_xlabel("Es/N0 (dB)")
    ax.set_ylabel("BER")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_spectrum_figure(freq_norm, power_db, path, title=None):
    fig, ax = plt.subplots()
    ax.plot(freq_norm, power_db)
    ax.set_xlabel("frequency (cycles/sample)")
    ax.set_ylabel("power (dB)")
    ax.set_ylim(bottom=max(power_db.min(), -80.0))
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_complexity_figure(rows, path, title=None):
    """Multiplication counts versus subcarrier count, log10 scale, for the
    three detector families."""
    log10_2 = np.log10(2.0)
    n = [r["N"] for r in rows]
    fig, ax = plt.subplots()
    ax.plot(n, [r["sd_mults_log2"] * log10_2 for r in rows], marker="o",
            label="sphere decoding (full expansion)")
    ax.plot(n, [np.log10(r["multisd_mults"]) for r in rows], marker="s",
            label="block sphere decoding")
    ax.plot(n, [np.log10(r["fft_mults"]) for r in rows], marker="d",
            label="FFT matched filter")
    ax.set_xlabel("subcarriers N")
    ax.set_ylabel("log10 multiplications")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
