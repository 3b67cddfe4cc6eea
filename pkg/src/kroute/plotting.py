"""Volume curves of a ball around a center, for eyeballing a chosen radius."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .regiongrow import commodity_distances  # noqa: E402


def volume_curves(source, i: int, z: int, S, samples: int = 400, interval=(0.0, 1.0)):
    S = frozenset(S)
    dist = commodity_distances(source, i, z, S)
    a, b = interval
    rhos = [a + (b - a) * j / samples for j in range(samples)]
    vol, anti = [], []
    for rho in rhos:
        geom = source.evaluate(i, z, S, dist, rho)
        vol.append(geom.volume)
        anti.append(geom.anti_volume)
    return rhos, vol, anti


def plot_volumes(path: str, source, i: int, z: int, S, rho: float | None = None, title: str | None = None):
    rhos, vol, anti = volume_curves(source, i, z, S)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(rhos, vol, label="ball volume")
    ax.plot(rhos, anti, label="anti-ball volume")
    if rho is not None:
        ax.axvline(rho, color="k", linestyle="--", linewidth=1, label=f"radius {rho:.4f}")
    ax.set_xlabel("radius")
    ax.set_ylabel("volume")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
