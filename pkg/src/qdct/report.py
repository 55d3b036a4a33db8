"""Figure rendering for the CLI report paths."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .costs import ScalingReport
from .driver import RunReport
from .images import CompressedImage

__all__ = ["save_demo_figure", "save_scaling_figure", "save_compress_figure"]


def save_demo_figure(path, coeff_squared: np.ndarray, report: RunReport, epsilon: float) -> None:
    """Coefficient energies with accepted indices marked, plus the
    residual-energy trail across driver rounds."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    n = coeff_squared.size
    accepted = {i for i, _ in report.accepted.entries} if not report.fell_back else set(range(n))
    colors = ["tab:orange" if i in accepted else "tab:gray" for i in range(n)]
    ax1.bar(np.arange(n), np.maximum(coeff_squared, 1e-30), color=colors)
    ax1.set_yscale("log")
    ax1.set_xlabel("coefficient index")
    ax1.set_ylabel("squared value")
    ax1.set_title("coefficient energies (accepted in orange)")

    rounds = [rec.round_no for rec in report.trace]
    ratios = [max(rec.ratio, 1e-30) for rec in report.trace]
    ax2.plot(rounds, ratios, marker="o")
    ax2.axhline(epsilon, color="tab:red", linestyle="--", label="threshold")
    ax2.set_yscale("log")
    ax2.set_xlabel("driver round")
    ax2.set_ylabel("residual energy fraction")
    ax2.set_title("residual trail")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_scaling_figure(path, report: ScalingReport, label: str) -> None:
    """Log-log mean iterations against size, with the fitted power law."""
    fig, ax = plt.subplots(figsize=(5, 4))
    sizes = np.asarray(report.sizes, dtype=float)
    means = np.asarray(report.means, dtype=float)
    ax.loglog(sizes, means, "o", label="measured mean")
    grid = np.geomspace(sizes.min(), sizes.max(), 64)
    ax.loglog(
        grid,
        report.prefactor * grid**report.exponent,
        "-",
        label=f"fit: {report.prefactor:.2f} * x^{report.exponent:.3f}",
    )
    ax.loglog(
        grid,
        report.prefactor * grid**report.claimed_exponent,
        ":",
        color="tab:gray",
        label=f"claimed exponent {report.claimed_exponent}",
    )
    ax.set_xlabel(label)
    ax.set_ylabel("mean oracle queries")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_compress_figure(path, container: CompressedImage) -> None:
    """Heatmap of per-block kept-coefficient counts; fallbacks hatched."""
    rows = max(b.row for b in container.blocks) + 1
    cols = max(b.col for b in container.blocks) + 1
    counts = np.zeros((rows, cols))
    for b in container.blocks:
        counts[b.row, b.col] = len(b.entries)
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(counts, cmap="viridis")
    for b in container.blocks:
        if b.fell_back:
            ax.plot(b.col, b.row, "rx", markersize=8)
    fig.colorbar(im, ax=ax, label="coefficients kept")
    ax.set_title(f"kept per {container.block_size}x{container.block_size} block "
                 f"(mode={container.mode})")
    ax.set_xlabel("block column")
    ax.set_ylabel("block row")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
