import json
import math
import os

import numpy as np
import pytest

from roomedit.commands import Scale, parse_template_command
from roomedit.datagen import (
    EDIT_TYPES,
    ENLARGE_RANGE,
    ROTATE_ANGLES,
    SHRINK_RANGE,
    TRANSLATE_DISTANCES,
    EditPair,
    GenConfig,
    NoUniqueReference,
    build_dataset,
    describe_location,
    gen_add_remove,
    gen_replace,
    gen_rotate,
    gen_scale,
    gen_translate,
    load_pairs,
    sample_toy_scenes,
    scene_is_valid,
)
from roomedit.editor import apply_edit
from roomedit.relations import SpatialRelation
from roomedit.scene import extract_scene_graph

from conftest import make_object, make_scene, random_scene


def replays_exactly(pair: EditPair, catalog) -> bool:
    cmd = parse_template_command(pair.template_command)
    return apply_edit(pair.source, cmd, catalog) == pair.target


def test_gen_translate_single_object_always_succeeds(catalog, rng):
    scene = random_scene(catalog, rng, n_objects=(1, 1))
    for _ in range(10):
        pair = gen_translate(scene, catalog, rng)
        assert pair is not None
        cmd = parse_template_command(pair.template_command)
        assert cmd.distance_m in TRANSLATE_DISTANCES
        assert replays_exactly(pair, catalog)


def test_gen_translate_grid_membership(catalog, rng):
    for _ in range(30):
        scene = random_scene(catalog, rng, n_objects=(2, 4))
        pair = gen_translate(scene, catalog, rng)
        if pair is None:
            continue
        cmd = parse_template_command(pair.template_command)
        assert cmd.distance_m in TRANSLATE_DISTANCES
        assert cmd.direction in ("front", "back", "left", "right")


def test_gen_translate_boxed_in_returns_none(catalog, rng):
    # Target surrounded by walls of sofas at every grid distance.
    center = make_object(
        oid="chair_0",
        category=catalog.category_index("chair"),
        caption="a black office chair",
        position=(0.0, 0.45, 0.0),
        half_extents=(0.3, 0.45, 0.3),
    )
    walls = []
    for k, (dx, dz) in enumerate(((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0))):
        walls.append(
            make_object(
                oid=f"sofa_{k}",
                category=catalog.category_index("sofa"),
                caption="a gray three seat sofa",
                position=(2.1 * dx, 0.42, 2.1 * dz),
                half_extents=(1.4, 0.42, 1.4),
            )
        )
    scene = make_scene([center, *walls])
    for _ in range(12):
        pair = gen_translate(scene, catalog, rng)
        if pair is None:
            continue
        # Only wall moves can succeed; the boxed-in chair never moves.
        assert pair.target_object_id != "chair_0"


def test_gen_rotate_square_footprint_in_tight_slot(catalog, rng):
    scene = random_scene(catalog, rng, n_objects=(2, 4))
    for _ in range(10):
        pair = gen_rotate(scene, catalog, rng)
        if pair is None:
            continue
        cmd = parse_template_command(pair.template_command)
        assert abs(cmd.angle_degrees) in ROTATE_ANGLES
        assert replays_exactly(pair, catalog)


def test_gen_scale_ranges_and_maximality(catalog, rng):
    shrink_seen = enlarge_seen = False
    for _ in range(60):
        scene = random_scene(catalog, rng, n_objects=(1, 3))
        pair = gen_scale(scene, catalog, rng)
        if pair is None:
            continue
        cmd = parse_template_command(pair.template_command)
        assert isinstance(cmd, Scale)
        factor = cmd.factor
        in_shrink = SHRINK_RANGE[0] <= factor <= SHRINK_RANGE[1]
        in_enlarge = ENLARGE_RANGE[0] <= factor <= ENLARGE_RANGE[1]
        assert in_shrink or in_enlarge
        shrink_seen = shrink_seen or in_shrink
        enlarge_seen = enlarge_seen or in_enlarge
        assert replays_exactly(pair, catalog)
        assert scene_is_valid(pair.target, clearance=1e-4)
    assert shrink_seen and enlarge_seen


def test_gen_add_remove_counts_and_replay(catalog, rng):
    done = 0
    for _ in range(40):
        scene = random_scene(catalog, rng, n_objects=(3, 5))
        add_pair, remove_pair = gen_add_remove(scene, catalog, rng)
        if remove_pair is not None:
            assert len(remove_pair.target.objects) == len(scene.objects) - 1
            assert replays_exactly(remove_pair, catalog)
        if add_pair is not None:
            assert len(add_pair.target.objects) == len(add_pair.source.objects) + 1
            assert replays_exactly(add_pair, catalog)
            assert "location:" in add_pair.template_command
            done += 1
        if done >= 10:
            break
    assert done >= 5


def test_add_remove_roundtrip_graph_on_fixture(catalog):
    # Two-object fixture: removing then re-adding the lamp restores the
    # same scene graph (placement differs, relations do not).
    bed = make_object(
        oid="bed_0",
        category=catalog.category_index("bed"),
        caption="a wooden double bed",
        position=(0.0, 0.45, 0.0),
        half_extents=(0.95, 0.45, 1.05),
    )
    lamp = make_object(
        oid="lamp_0",
        category=catalog.category_index("lamp"),
        caption="a brass floor lamp",
        position=(1.6, 0.8, 0.0),
        half_extents=(0.18, 0.8, 0.18),
    )
    scene = make_scene([bed, lamp])
    rng = np.random.default_rng(8)
    for _ in range(10):
        add_pair, remove_pair = gen_add_remove(scene, catalog, rng)
        if add_pair is None or remove_pair is None:
            continue
        if add_pair.template_command.startswith("Add a brass floor lamp"):
            restored = add_pair.target
            # Graph equality: same categories and same relations.
            assert extract_scene_graph(restored, catalog).node_categories == (
                extract_scene_graph(scene, catalog).node_categories
            )
            assert extract_scene_graph(restored, catalog).edges == (
                extract_scene_graph(scene, catalog).edges
            )
            return
    pytest.fail("never produced the lamp add pair")


def test_gen_replace_same_category_and_footprint_rule(catalog, rng):
    seen = 0
    for _ in range(40):
        scene = random_scene(catalog, rng, n_objects=(2, 4))
        pair = gen_replace(scene, catalog, rng)
        if pair is None:
            continue
        seen += 1
        old = pair.source.object_by_id(pair.target_object_id)
        new = pair.target.object_by_id(pair.target_object_id)
        assert old.category == new.category
        assert old.caption != new.caption
        assert replays_exactly(pair, catalog)
    assert seen >= 20


def test_describe_location_prefers_nearest_unique(catalog):
    bed = make_object(
        oid="bed_0",
        category=catalog.category_index("bed"),
        caption="a wooden double bed",
        position=(0.0, 0.45, -1.5),
        half_extents=(0.95, 0.45, 1.05),
    )
    ns1 = make_object(
        oid="ns_0",
        category=catalog.category_index("nightstand"),
        caption="a walnut nightstand",
        position=(-1.6, 0.28, 0.2),
        half_extents=(0.25, 0.28, 0.22),
    )
    ns2 = make_object(
        oid="ns_1",
        category=catalog.category_index("nightstand"),
        caption="a walnut nightstand",
        position=(1.6, 0.28, 0.2),
        half_extents=(0.25, 0.28, 0.22),
    )
    scene = make_scene([bed, ns1, ns2])
    location, ref_id = describe_location(scene, ns1, catalog)
    assert ref_id == "bed_0"
    location, ref_id = describe_location(scene, ns2, catalog)
    assert ref_id == "bed_0"


def test_describe_location_close_relation(catalog):
    a = make_object(
        oid="desk_0",
        category=catalog.category_index("desk"),
        caption="a walnut writing desk",
        position=(0.0, 0.38, 0.0),
        half_extents=(0.65, 0.38, 0.35),
    )
    b = make_object(
        oid="lamp_0",
        category=catalog.category_index("lamp"),
        caption="a brass floor lamp",
        position=(-0.5, 0.8, 0.0),
        half_extents=(0.18, 0.8, 0.18),
    )
    scene = make_scene([a, b])
    location, _ = describe_location(scene, b, catalog)
    assert location.relation == SpatialRelation.CLOSELY_LEFT_OF


def test_describe_location_all_duplicates(catalog):
    objs = []
    for k in range(3):
        objs.append(
            make_object(
                oid=f"chair_{k}",
                category=catalog.category_index("chair"),
                caption="a black office chair",
                position=(-1.5 + 1.5 * k, 0.45, 0.0),
                half_extents=(0.3, 0.45, 0.3),
            )
        )
    scene = make_scene(objs)
    with pytest.raises(NoUniqueReference):
        describe_location(scene, objs[0], catalog)


def test_build_dataset_deterministic_and_closed(catalog, tmp_path):
    scenes = sample_toy_scenes(catalog, 30, seed=5)
    config = GenConfig(attempts=1, seed=5)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    stats_a = build_dataset(scenes, catalog, config, out_a)
    stats_b = build_dataset(scenes, catalog, config, out_b)
    for split in ("train", "test"):
        bytes_a = (out_a / split / "pairs.jsonl").read_bytes()
        bytes_b = (out_b / split / "pairs.jsonl").read_bytes()
        assert bytes_a == bytes_b
        pairs = load_pairs(out_a / split / "pairs.jsonl", catalog)
        for pair in pairs:
            assert replays_exactly(pair, catalog)
            assert scene_is_valid(pair.target, clearance=1e-4)
    assert stats_a == stats_b
    # Stats rows sum to the record count.
    for split in ("train", "test"):
        total = stats_a["splits"][split]["count"]
        by = stats_a["splits"][split]["by_room_and_type"]
        assert sum(sum(row.values()) for row in by.values()) == total
    assert stats_a["total"] > 60
    assert (out_a / "catalog.json").exists()
    assert (out_a / "stats.json").exists()


def test_naturalize_offline_returns_template(catalog, rng):
    from roomedit.datagen import naturalize_command

    scene = random_scene(catalog, rng, n_objects=(2, 3))
    pair = gen_translate(scene, catalog, rng)
    assert pair is not None
    assert naturalize_command(pair, None, catalog) == pair.template_command


def test_naturalize_prompt_contains_caption_and_reply_verbatim(catalog, rng):
    from roomedit.datagen import build_naturalize_prompt, naturalize_command

    scene = random_scene(catalog, rng, n_objects=(2, 3))
    pair = gen_translate(scene, catalog, rng)
    assert pair is not None
    caption = pair.source.object_by_id(pair.target_object_id).caption
    prompt = build_naturalize_prompt(pair, catalog)
    assert caption in prompt
    assert pair.template_command in prompt

    class CannedClient:
        offline = False

        def complete(self, prompt_text):
            self.last_prompt = prompt_text
            return "  please move it a bit left  "

    client = CannedClient()
    reply = naturalize_command(pair, client, catalog)
    assert reply == "  please move it a bit left  "
    assert caption in client.last_prompt
