"""Figure rendering for report paths.

Every CLI path that writes delimited output (dataset stats, metric reports,
loss curves, sampler traces) also renders a matplotlib figure next to it.
Pure file output: the Agg backend is forced so this works headless.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .geometry import box_of, footprint_corners
from .scene import Scene


def save_loss_curve(curve, path, title="training loss") -> None:
    steps = [s for s, _ in curve]
    losses = [l for _, l in curve]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(steps, losses, lw=0.8)
    ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_dataset_stats(stats: dict, path) -> None:
    """Bar chart of pair counts per edit type, stacked per split."""
    types: dict[str, dict[str, int]] = {}
    for split, info in stats["splits"].items():
        for room_counts in info["by_room_and_type"].values():
            for edit_type, count in room_counts.items():
                types.setdefault(edit_type, {}).setdefault(split, 0)
                types[edit_type][split] += count
    names = sorted(types)
    splits = sorted({s for row in types.values() for s in row})
    fig, ax = plt.subplots(figsize=(6, 3.5))
    x = np.arange(len(names))
    bottom = np.zeros(len(names))
    for split in splits:
        values = np.array([types[n].get(split, 0) for n in names], dtype=float)
        ax.bar(x, values, bottom=bottom, label=split)
        bottom += values
    ax.set_xticks(x, names, rotation=20)
    ax.set_ylabel("pairs")
    ax.set_title(f"dataset pairs by edit type (total {stats['total']})")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_metrics_report(report_doc: dict, path) -> None:
    """Grouped bars: IOU and S-IOU per (room, edit type) cell."""
    cells = report_doc["cells"]
    if not cells:
        cells = [{"room_type": "-", "edit_type": "-", "iou": 0.0, "s_iou": 0.0, "count": 0}]
    labels = [f"{c['room_type']}\n{c['edit_type']}" for c in cells]
    iou = [c["iou"] for c in cells]
    siou = [c["s_iou"] for c in cells]
    x = np.arange(len(cells))
    fig, ax = plt.subplots(figsize=(max(6, 0.9 * len(cells)), 3.8))
    ax.bar(x - 0.2, iou, width=0.4, label="IOU")
    ax.bar(x + 0.2, siou, width=0.4, label="S-IOU")
    ax.set_xticks(x, labels, fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_title("editing metrics")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def _draw_scene(ax, scene: Scene, title: str) -> None:
    lo, hi = scene.room_bounds
    ax.add_patch(
        plt.Rectangle((lo[0], lo[2]), hi[0] - lo[0], hi[2] - lo[2], fill=False, lw=1.2)
    )
    cmap = plt.get_cmap("tab10")
    for obj in scene.objects:
        corners = footprint_corners(box_of(obj))
        poly = plt.Polygon(corners, closed=True, alpha=0.55, color=cmap(obj.category % 10))
        ax.add_patch(poly)
        x, _, z = obj.position
        # Front tick: local +z rotated by yaw.
        fx, fz = math.sin(obj.yaw), math.cos(obj.yaw)
        ax.plot([x, x + 0.3 * fx], [z, z + 0.3 * fz], color="k", lw=0.8)
        ax.annotate(obj.id, (x, z), fontsize=6, ha="center", va="center")
    pad = 0.3
    ax.set_xlim(lo[0] - pad, hi[0] + pad)
    ax.set_ylim(lo[2] - pad, hi[2] + pad)
    ax.set_aspect("equal")
    ax.set_title(title, fontsize=8)
    ax.tick_params(labelsize=6)


def save_scene_topdown(scene: Scene, path, title="scene") -> None:
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    _draw_scene(ax, scene, title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_edit_pair(source: Scene, target: Scene, path, title="edit") -> None:
    fig, axes = plt.subplots(1, 2, figsize=(9, 4.5))
    _draw_scene(axes[0], source, "source")
    _draw_scene(axes[1], target, f"target ({title})")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_denoise_trace(trace, real_mask, bounds, path, frames=8) -> None:
    """Grid of intermediate layout states: noise converging to a layout."""
    total = len(trace)
    picks = np.unique(np.linspace(0, total - 1, frames).astype(int))
    lo, hi = bounds
    fig, axes = plt.subplots(1, len(picks), figsize=(2.3 * len(picks), 2.6))
    if len(picks) == 1:
        axes = [axes]
    for ax, idx in zip(axes, picks):
        rows = trace[idx]
        ax.add_patch(
            plt.Rectangle((lo[0], lo[2]), hi[0] - lo[0], hi[2] - lo[2], fill=False, lw=1.0)
        )
        for slot in range(rows.shape[0]):
            if not real_mask[slot]:
                continue
            x, z = rows[slot, 0], rows[slot, 2]
            hx, hz = abs(rows[slot, 3]), abs(rows[slot, 5])
            ax.add_patch(
                plt.Rectangle(
                    (x - hx, z - hz), 2 * hx, 2 * hz, alpha=0.5, color=plt.get_cmap("tab10")(slot % 10)
                )
            )
        ax.set_xlim(lo[0] - 1.5, hi[0] + 1.5)
        ax.set_ylim(lo[2] - 1.5, hi[2] + 1.5)
        ax.set_aspect("equal")
        step = total - 1 - idx
        ax.set_title(f"t={step}", fontsize=7)
        ax.tick_params(labelbottom=False, labelleft=False)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
