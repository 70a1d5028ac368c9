"""Figure rendering for sweep results: mean capacity versus the swept value."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

AXIS_LABELS = {
    "M": "BS antennas M",
    "N": "antennas per user N",
    "U": "users U",
    "L": "propagation paths L",
    "W_lambda": "aperture length W (wavelengths)",
    "snr_db": "SNR (dB)",
}


def render_sweep_figure(rows, out_path, param: str) -> str:
    """Render one line per algorithm through the sweep's mean rows.

    Returns the written path. Rows without a "mean" status are ignored, so
    the same row list handed to the emitter can be passed here unchanged.
    """
    series = {}
    for row in rows:
        if row["status"] != "mean":
            continue
        series.setdefault(row["algorithm"], []).append(
            (float(row[param]), float(row["capacity_bits"]))
        )
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for algorithm in sorted(series):
        points = sorted(series[algorithm])
        ax.plot(
            [p[0] for p in points],
            [p[1] for p in points],
            marker="o",
            markersize=4,
            label=algorithm,
        )
    ax.set_xlabel(AXIS_LABELS.get(param, param))
    ax.set_ylabel("mean sum capacity (bits/s/Hz)")
    ax.grid(True, alpha=0.35)
    if series:
        ax.legend()
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return str(out_path)
