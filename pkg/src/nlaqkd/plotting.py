"""Figure rendering for sweep reports.

Curves are drawn on a log rate axis against distance, one line per amplifier
configuration, skipping non-positive points (they have no secret key).  Meant
for file output next to the CSV, so the Agg backend is forced.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .sweep import SweepRow

_STYLE = {
    "no_nla": dict(color="#444444", ls="-"),
    "nla_alice": dict(color="#1f77b4", ls="--"),
    "nla_bob": dict(color="#d62728", ls="-."),
    "nla_both": dict(color="#2ca02c", ls="-"),
}


def render_sweep_plot(
    curves: dict[str, list[SweepRow]],
    path: str,
    title: str | None = None,
    effective: bool = True,
) -> None:
    """Write a key-rate-vs-distance figure for one or more sweep curves."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for label, rows in curves.items():
        xs, ys = [], []
        for r in rows:
            y = r.key_rate_effective if effective else r.key_rate_raw
            if r.physical and y > 0.0:
                xs.append(r.distance_km)
                ys.append(y)
        if xs:
            ax.semilogy(xs, ys, label=label, **_STYLE.get(label, {}))
    ax.set_xlabel("distance (km)")
    ax.set_ylabel("secret key rate (bits/use)" + (" x P_success" if effective else ""))
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    if len(curves) > 1:
        ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
