"""Scene-level editing metrics: greedy-matched 3D IOU and semantic-weighted IOU.

Generated and target objects are matched greedily by highest IOU; the scene
score sums matched IOUs and divides by max(object counts), so hallucinated
and missing objects both cost score. S-IOU additionally weights each match
by the caption similarity (token Jaccard by default, pluggable).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .catalog import ObjectCatalog
from .geometry import box_of, iou_3d
from .scene import Scene


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[tuple[int, int, float], ...]
    unmatched_gen: tuple[int, ...]
    unmatched_target: tuple[int, ...]


def match_objects(
    gen: Scene, target: Scene, same_category_only: bool = False
) -> MatchResult:
    """Greedy highest-IOU matching between generated and target objects.

    Repeatedly takes the globally largest remaining IOU entry (ties: lowest
    generated index, then lowest target index); zero-IOU entries never match.
    """
    n_gen, n_tgt = len(gen.objects), len(target.objects)
    iou = [[0.0] * n_tgt for _ in range(n_gen)]
    for i, gobj in enumerate(gen.objects):
        for j, tobj in enumerate(target.objects):
            if same_category_only and gobj.category != tobj.category:
                continue
            iou[i][j] = iou_3d(box_of(gobj), box_of(tobj))
    free_gen = set(range(n_gen))
    free_tgt = set(range(n_tgt))
    pairs = []
    while free_gen and free_tgt:
        best = (0.0, None, None)
        for i in sorted(free_gen):
            for j in sorted(free_tgt):
                if iou[i][j] > best[0]:
                    best = (iou[i][j], i, j)
        if best[1] is None:
            break
        value, i, j = best
        pairs.append((i, j, value))
        free_gen.remove(i)
        free_tgt.remove(j)
    return MatchResult(
        pairs=tuple(pairs),
        unmatched_gen=tuple(sorted(free_gen)),
        unmatched_target=tuple(sorted(free_tgt)),
    )


def scene_iou(gen: Scene, target: Scene, same_category_only: bool = False) -> float:
    """Sum of matched IOUs over max(|gen|, |target|); empty vs empty is 1."""
    n = max(len(gen.objects), len(target.objects))
    if n == 0:
        return 1.0
    match = match_objects(gen, target, same_category_only)
    return sum(v for _, _, v in match.pairs) / n


def caption_similarity(a: str, b: str) -> float:
    """Jaccard similarity of lowercased token sets; two empty captions match."""
    ta, tb = set(a.lower().split()), set(b.lower().split())
    if not ta and not tb:
        return 1.0
    union = ta | tb
    if not union:
        return 0.0
    return len(ta & tb) / len(union)


def scene_siou(
    gen: Scene,
    target: Scene,
    similarity=caption_similarity,
    same_category_only: bool = False,
) -> float:
    """scene_iou with each matched IOU weighted by caption similarity."""
    n = max(len(gen.objects), len(target.objects))
    if n == 0:
        return 1.0
    match = match_objects(gen, target, same_category_only)
    total = 0.0
    for i, j, value in match.pairs:
        total += value * similarity(gen.objects[i].caption, target.objects[j].caption)
    return total / n


@dataclass
class MetricsReport:
    rows: dict = field(default_factory=dict)  # (room_type, edit_type) -> {...}
    missing_predictions: list = field(default_factory=list)
    extra_predictions: list = field(default_factory=list)

    def add(self, room_type: str, edit_type: str, iou: float, siou: float) -> None:
        row = self.rows.setdefault(
            (room_type, edit_type), {"iou_sum": 0.0, "siou_sum": 0.0, "count": 0}
        )
        row["iou_sum"] += iou
        row["siou_sum"] += siou
        row["count"] += 1

    @property
    def total_count(self) -> int:
        return sum(row["count"] for row in self.rows.values())

    def to_doc(self) -> dict:
        cells = []
        for (room_type, edit_type), row in sorted(self.rows.items()):
            cells.append(
                {
                    "room_type": room_type,
                    "edit_type": edit_type,
                    "count": row["count"],
                    "iou": row["iou_sum"] / row["count"],
                    "s_iou": row["siou_sum"] / row["count"],
                }
            )
        overall = {
            "count": self.total_count,
            "iou": sum(r["iou_sum"] for r in self.rows.values()) / max(self.total_count, 1),
            "s_iou": sum(r["siou_sum"] for r in self.rows.values()) / max(self.total_count, 1),
        }
        return {
            "cells": cells,
            "overall": overall,
            "missing_predictions": sorted(self.missing_predictions),
            "extra_predictions": sorted(self.extra_predictions),
        }

    def to_markdown(self) -> str:
        doc = self.to_doc()
        lines = [
            "| room | edit | n | IOU | S-IOU |",
            "|------|------|---|-----|-------|",
        ]
        for cell in doc["cells"]:
            lines.append(
                f"| {cell['room_type']} | {cell['edit_type']} | {cell['count']} "
                f"| {cell['iou']:.4f} | {cell['s_iou']:.4f} |"
            )
        o = doc["overall"]
        lines.append(f"| all | all | {o['count']} | {o['iou']:.4f} | {o['s_iou']:.4f} |")
        if doc["missing_predictions"]:
            lines.append("")
            lines.append(f"missing predictions: {len(doc['missing_predictions'])}")
        return "\n".join(lines) + "\n"


def _read_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def _find_pairs_file(directory):
    for candidate in ("pairs.jsonl", os.path.join("test", "pairs.jsonl")):
        path = os.path.join(directory, candidate)
        if os.path.exists(path):
            return path
    raise FileNotFoundError(f"no pairs.jsonl under {directory}")


def load_predictions(pred_dir, catalog: ObjectCatalog) -> dict[str, Scene]:
    """Predictions: a predictions.jsonl of {pair_id, scene} records."""
    from .sceneio import scene_from_doc

    path = os.path.join(pred_dir, "predictions.jsonl")
    if not os.path.exists(path):
        raise FileNotFoundError(f"no predictions.jsonl under {pred_dir}")
    out = {}
    for record in _read_jsonl(path):
        out[record["pair_id"]] = scene_from_doc(record["scene"], catalog)
    return out


def evaluate(
    pred_dir,
    target_dir,
    catalog: ObjectCatalog,
    same_category_only: bool = False,
) -> MetricsReport:
    """Aggregate IOU/S-IOU of predictions against a dataset split.

    Pairs lacking a prediction score zero and are listed in the report;
    predictions without a matching pair id are listed but not scored.
    """
    from .sceneio import scene_from_doc

    predictions = load_predictions(pred_dir, catalog)
    report = MetricsReport()
    seen = set()
    for record in _read_jsonl(_find_pairs_file(target_dir)):
        pair_id = record["pair_id"]
        seen.add(pair_id)
        target = scene_from_doc(record["target"], catalog)
        pred = predictions.get(pair_id)
        if pred is None:
            report.missing_predictions.append(pair_id)
            report.add(record["room_type"], record["edit_type"], 0.0, 0.0)
            continue
        report.add(
            record["room_type"],
            record["edit_type"],
            scene_iou(pred, target, same_category_only),
            scene_siou(pred, target, same_category_only=same_category_only),
        )
    report.extra_predictions = [p for p in predictions if p not in seen]
    return report


def write_report(report: MetricsReport, report_path, table_path=None) -> None:
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_doc(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if table_path:
        with open(table_path, "w", encoding="utf-8") as fh:
            fh.write(report.to_markdown())
