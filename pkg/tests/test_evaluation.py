import itertools
import json

import numpy as np
import pytest

from roomedit.evaluation import (
    MatchResult,
    caption_similarity,
    evaluate,
    match_objects,
    scene_iou,
    scene_siou,
    write_report,
)
from roomedit.geometry import box_of, iou_3d

from conftest import make_object, make_scene, random_scene


def test_match_identical_scenes(catalog, rng):
    scene = random_scene(catalog, rng, n_objects=(3, 5))
    match = match_objects(scene, scene)
    assert len(match.pairs) == len(scene.objects)
    for i, j, v in match.pairs:
        assert i == j
        assert v == pytest.approx(1.0, abs=1e-12)
    assert scene_iou(scene, scene) == pytest.approx(1.0, abs=1e-12)


def test_match_greedy_trace():
    # IOU matrix [[0.9, 0.2], [0.8, 0.7]] -> picks (0,0,0.9) then (1,1,0.7).
    a0 = make_object(oid="a0", position=(0.0, 0.5, 0.0))
    a1 = make_object(oid="a1", position=(2.0, 0.5, 0.0))
    gen = make_scene([a0, a1])

    # Direct check of the greedy rule on a synthetic matrix by monkeypatching
    # is brittle; instead build boxes realizing that matrix approximately.
    # Simpler: verify the documented greedy behavior on a hand matrix.
    from roomedit import evaluation

    class FakeScene:
        def __init__(self, n):
            self.objects = [make_object(oid=f"o{i}", position=(3 * i - 2, 0.5, 0)) for i in range(n)]

    matrix = {(0, 0): 0.9, (0, 1): 0.2, (1, 0): 0.8, (1, 1): 0.7}
    original = evaluation.iou_3d
    try:
        evaluation.iou_3d = lambda a, b: matrix[(round((a.center[0] + 2) / 3), round((b.center[0] + 2) / 3))]
        match = evaluation.match_objects(FakeScene(2), FakeScene(2))
    finally:
        evaluation.iou_3d = original
    assert match.pairs == ((0, 0, 0.9), (1, 1, 0.7))


def test_greedy_total_never_exceeds_optimal(catalog):
    rng = np.random.default_rng(60)
    for _ in range(30):
        gen = random_scene(catalog, rng, n_objects=(2, 4))
        target = random_scene(catalog, rng, n_objects=(2, 4))
        match = match_objects(gen, target)
        greedy_total = sum(v for _, _, v in match.pairs)
        n_g, n_t = len(gen.objects), len(target.objects)
        iou = [
            [iou_3d(box_of(g), box_of(t)) for t in target.objects] for g in gen.objects
        ]
        best = 0.0
        for perm in itertools.permutations(range(n_t), min(n_g, n_t)):
            if n_g <= n_t:
                total = sum(iou[i][perm[i]] for i in range(n_g))
            else:
                total = sum(iou[perm[j]][j] for j in range(n_t))
            best = max(best, total)
        # itertools covers n_g <= n_t directly; for n_g > n_t permute gen side.
        if n_g > n_t:
            best = 0.0
            for perm in itertools.permutations(range(n_g), n_t):
                best = max(best, sum(iou[perm[j]][j] for j in range(n_t)))
        assert greedy_total <= best + 1e-9


def test_scene_iou_missing_object_fraction(catalog, rng):
    scene = random_scene(catalog, rng, n_objects=(4, 4))
    target = scene.with_objects(scene.objects[:3])
    assert scene_iou(scene, target) == pytest.approx(0.75, abs=1e-12)
    assert scene_iou(target, scene) == pytest.approx(0.75, abs=1e-12)


def test_scene_iou_disjoint_and_empty(catalog, rng):
    scene = random_scene(catalog, rng, n_objects=(2, 3))
    shifted = scene.with_objects(
        [o.moved_to((o.position[0], o.position[1] + 10.0, o.position[2])) for o in scene.objects]
    )
    assert scene_iou(scene, shifted) == 0.0
    empty = scene.with_objects([])
    assert scene_iou(empty, empty) == 1.0
    assert scene_iou(scene, empty) == 0.0


def test_caption_similarity_cases():
    assert caption_similarity("a wooden bed", "a wooden bed") == 1.0
    assert caption_similarity("xyz", "abc") == 0.0
    assert caption_similarity("a wooden bed", "a wooden wardrobe") == pytest.approx(0.5)
    assert caption_similarity("", "") == 1.0
    assert caption_similarity("A Wooden Bed", "a wooden bed") == 1.0


def test_scene_siou_bounded_by_iou(catalog):
    rng = np.random.default_rng(61)
    for _ in range(20):
        gen = random_scene(catalog, rng, n_objects=(2, 4))
        target = random_scene(catalog, rng, n_objects=(2, 4))
        siou = scene_siou(gen, target)
        iou = scene_iou(gen, target)
        assert siou <= iou + 1e-12
    scene = random_scene(catalog, rng, n_objects=(3, 3))
    assert scene_siou(scene, scene) == pytest.approx(scene_iou(scene, scene), abs=1e-12)


def test_metrics_invariant_under_reordering(catalog, rng):
    gen = random_scene(catalog, rng, n_objects=(4, 4))
    target = random_scene(catalog, rng, n_objects=(4, 4))
    perm = [2, 0, 3, 1]
    gen_perm = gen.with_objects([gen.objects[p] for p in perm])
    assert scene_iou(gen_perm, target) == pytest.approx(scene_iou(gen, target), abs=1e-12)
    assert scene_siou(gen_perm, target) == pytest.approx(scene_siou(gen, target), abs=1e-12)


def test_evaluate_directories(catalog, tmp_path):
    from roomedit.datagen import GenConfig, build_dataset, sample_toy_scenes
    from roomedit.sceneio import scene_to_doc

    scenes = sample_toy_scenes(catalog, 12, seed=3)
    out = tmp_path / "data"
    build_dataset(scenes, catalog, GenConfig(attempts=1, seed=3, test_fraction=0.5), out)

    # Perfect predictions: echo the targets.
    pred_dir = tmp_path / "pred"
    pred_dir.mkdir()
    records = []
    with open(out / "test" / "pairs.jsonl", encoding="utf-8") as fh:
        for line in fh:
            records.append(json.loads(line))
    with open(pred_dir / "predictions.jsonl", "w", encoding="utf-8") as fh:
        for record in records[:-1]:  # drop one to exercise the missing path
            fh.write(json.dumps({"pair_id": record["pair_id"], "scene": record["target"]}))
            fh.write("\n")
    report = evaluate(pred_dir, out / "test", catalog)
    doc = report.to_doc()
    assert report.total_count == len(records)
    assert len(doc["missing_predictions"]) == 1
    # All present predictions are perfect.
    present = report.total_count - 1
    assert doc["overall"]["iou"] * report.total_count == pytest.approx(present, abs=1e-9)
    report_path = tmp_path / "report.json"
    table_path = tmp_path / "table.md"
    write_report(report, report_path, table_path)
    assert json.loads(report_path.read_text())["overall"]["count"] == len(records)
    assert "IOU" in table_path.read_text()


def test_copy_source_baseline_on_remove_pairs(catalog):
    from roomedit.datagen import GenConfig, gen_add_remove, sample_toy_scenes

    rng = np.random.default_rng(62)
    scenes = sample_toy_scenes(catalog, 30, seed=8, n_objects=(4, 4))
    values = []
    for scene in scenes:
        _, remove_pair = gen_add_remove(scene, catalog, rng)
        if remove_pair is None:
            continue
        values.append(scene_iou(remove_pair.source, remove_pair.target))
    assert values, "no remove pairs produced"
    for v in values:
        assert v == pytest.approx(3.0 / 4.0, abs=1e-12)
