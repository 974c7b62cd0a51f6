"""Render the report bodies as figures next to the delimited output."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

DPI = 150


def trend_figure(trend: dict[str, Any], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    for pop, style in (("all", "o-"), ("flagged", "s--")):
        payload = trend["populations"][pop]
        counts = payload["counts_by_year"]
        if not counts:
            continue
        years = sorted(int(y) for y in counts)
        ax.plot(years, [counts[str(y)] for y in years], style, label=pop)
    ax.axvline(trend["split_year"] - 0.5, color="gray", linewidth=0.8, linestyle=":")
    ax.set_xlabel("year created")
    ax.set_ylabel("repositories")
    ax.set_title("Educational repositories per year")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def confusion_figure(confusion: dict[str, Any], path: Path) -> Path:
    labels = confusion["labels"]
    matrix = confusion["normalized"]
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    image = ax.imshow(matrix, cmap="Blues", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(len(labels)), labels, rotation=30, ha="right")
    ax.set_yticks(range(len(labels)), labels)
    ax.set_xlabel("round 2")
    ax.set_ylabel("round 1")
    for i in range(len(labels)):
        for j in range(len(labels)):
            value = matrix[i][j]
            ax.text(j, i, f"{value:.4f}", ha="center", va="center",
                    color="white" if value > 0.5 else "black", fontsize=8)
    fig.colorbar(image, ax=ax, fraction=0.046)
    ax.set_title("Normalized confusion matrix between rounds")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def families_figure(families: dict[str, Any], path: Path) -> Path:
    entries = families["entries"]
    names = [e["family"] for e in entries][::-1]
    counts = [e["count"] for e in entries][::-1]
    fig, ax = plt.subplots(figsize=(7, 0.45 * max(4, len(names)) + 1.2))
    ax.barh(names, counts, color="#4c72b0")
    ax.set_xlabel("repositories")
    ax.set_title(f"Top {families['top_n']} malware families")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path
