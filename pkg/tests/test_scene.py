import math

import numpy as np
import pytest

from roomedit.relations import SpatialRelation, classify_relation, invert_relation
from roomedit.scene import (
    SceneGraph,
    compact_graph,
    edge_pairs,
    edge_slot,
    extract_scene_graph,
    layout_matrix,
    normalize_yaw,
    scene_from_layout,
)
from roomedit.sceneio import (
    SceneFormatError,
    deserialize_scene,
    scene_to_doc,
    serialize_scene,
)

from conftest import make_object, make_scene, random_scene


def test_yaw_normalization():
    assert normalize_yaw(math.pi) == pytest.approx(-math.pi)
    assert normalize_yaw(-math.pi) == pytest.approx(-math.pi)
    assert normalize_yaw(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    assert -math.pi <= normalize_yaw(123.456) < math.pi


def test_object_rejects_bad_extents():
    with pytest.raises(ValueError):
        make_object(half_extents=(0.0, 1.0, 1.0))


def test_scene_rejects_duplicate_ids():
    a = make_object(oid="x", position=(0, 0.5, 0))
    b = make_object(oid="x", position=(2, 0.5, 0))
    with pytest.raises(ValueError):
        make_scene([a, b])


def test_scene_rejects_center_outside_bounds():
    with pytest.raises(ValueError):
        make_scene([make_object(position=(4.0, 0.5, 0.0))])


def test_scene_rejects_too_many_objects(catalog):
    objects = [
        make_object(oid=f"o{i}", position=(-2.0 + 0.5 * i, 0.5, 0.0)) for i in range(9)
    ]
    with pytest.raises(ValueError):
        make_scene(objects)


def test_empty_scene_graph_is_all_padding(catalog):
    graph = extract_scene_graph(make_scene([]), catalog)
    assert graph.m == 8
    assert all(not real for real in graph.node_mask)
    assert all(c == catalog.n_categories for c in graph.node_categories)
    assert all(rel == SpatialRelation.NONE for rel in graph.edges)


def test_two_object_graph_edge(catalog):
    a = make_object(oid="a", position=(0.0, 0.5, 0.0))
    b = make_object(oid="b", position=(0.0, 0.5, 2.0))
    graph = extract_scene_graph(make_scene([a, b]), catalog)
    # b is 2 m in front of a; edge (0, 1) has node 0 as subject.
    assert graph.edge(0, 1) == SpatialRelation.BEHIND
    assert graph.n_real == 2


def test_graph_matches_pairwise_oracle(catalog):
    rng = np.random.default_rng(11)
    for _ in range(20):
        scene = random_scene(catalog, rng, n_objects=(3, 5))
        graph = extract_scene_graph(scene, catalog)
        n = len(scene.objects)
        for i, j in edge_pairs(graph.m):
            if j < n:
                expected = classify_relation(scene.objects[i], scene.objects[j])
                assert graph.edge(i, j) == expected
            else:
                assert graph.edge(i, j) == SpatialRelation.NONE


def test_graph_permutation_equivariance(catalog):
    rng = np.random.default_rng(3)
    scene = random_scene(catalog, rng, n_objects=(4, 4))
    graph = extract_scene_graph(scene, catalog)
    perm = [2, 0, 3, 1]
    permuted = scene.with_objects([scene.objects[p] for p in perm])
    pgraph = extract_scene_graph(permuted, catalog)
    for new_i in range(4):
        assert pgraph.node_categories[new_i] == graph.node_categories[perm[new_i]]
    for new_i in range(4):
        for new_j in range(new_i + 1, 4):
            i, j = perm[new_i], perm[new_j]
            expected = graph.edge(i, j) if i < j else invert_relation(graph.edge(j, i))
            assert pgraph.edge(new_i, new_j) == expected


def test_layout_matrix_rotation_columns():
    obj = make_object(yaw=0.0)
    scene = make_scene([obj])
    mat = layout_matrix(scene)
    assert mat[0, 6] == pytest.approx(1.0)
    assert mat[0, 7] == pytest.approx(0.0)
    obj90 = make_object(yaw=math.pi / 2)
    mat90 = layout_matrix(make_scene([obj90]))
    assert mat90[0, 6] == pytest.approx(0.0, abs=1e-12)
    assert mat90[0, 7] == pytest.approx(1.0)
    # Padded rows are zero, real rows are not.
    assert np.all(mat[1:] == 0.0)
    assert np.any(mat[0] != 0.0)


def test_layout_roundtrip_on_random_scenes(catalog):
    rng = np.random.default_rng(5)
    for _ in range(100):
        scene = random_scene(catalog, rng, n_objects=(1, 5))
        rebuilt = scene_from_layout(layout_matrix(scene), scene)
        for a, b in zip(scene.objects, rebuilt.objects):
            assert a.position == b.position
            assert a.half_extents == b.half_extents
            assert abs(a.yaw - b.yaw) < 1e-12
            assert a.id == b.id and a.caption == b.caption


def test_edge_slot_enumeration():
    m = 8
    for slot, (i, j) in enumerate(edge_pairs(m)):
        assert edge_slot(i, j, m) == slot


def test_compact_graph_moves_empties_to_tail(catalog):
    rng = np.random.default_rng(17)
    scene = random_scene(catalog, rng, n_objects=(3, 3))
    graph = extract_scene_graph(scene, catalog)
    # Build a mid-padded variant: real slots 0, 2, 4 hold objects 0, 1, 2.
    m = graph.m
    empty = graph.empty_category
    cats = [empty] * m
    feats = [tuple([0] * catalog.n_f)] * m
    mask = [False] * m
    slots = [0, 2, 4]
    for k, slot in enumerate(slots):
        cats[slot] = graph.node_categories[k]
        feats[slot] = graph.node_feature_indices[k]
        mask[slot] = True
    edges = [SpatialRelation.NONE] * len(graph.edges)
    for a in range(3):
        for b in range(a + 1, 3):
            edges[edge_slot(slots[a], slots[b], m)] = graph.edge(a, b)
    scattered = SceneGraph(
        node_categories=tuple(cats),
        node_feature_indices=tuple(feats),
        edges=tuple(edges),
        node_mask=tuple(mask),
        empty_category=empty,
    )
    assert compact_graph(scattered) == graph


def test_serialize_roundtrip(catalog, bed_lamp_scene):
    data = serialize_scene(bed_lamp_scene, catalog)
    back = deserialize_scene(data, catalog)
    assert back == bed_lamp_scene
    assert serialize_scene(back, catalog) == data


def test_serialize_roundtrip_random(catalog):
    rng = np.random.default_rng(23)
    for _ in range(25):
        scene = random_scene(catalog, rng, n_objects=(1, 5))
        assert deserialize_scene(serialize_scene(scene, catalog), catalog) == scene


def test_deserialize_rejects_unknown_fields(catalog, bed_lamp_scene):
    doc = scene_to_doc(bed_lamp_scene, catalog)
    doc["color"] = "blue"
    import json

    with pytest.raises(SceneFormatError):
        deserialize_scene(json.dumps(doc), catalog)


def test_deserialize_rejects_bad_extents(catalog, bed_lamp_scene):
    doc = scene_to_doc(bed_lamp_scene, catalog)
    doc["objects"][0]["half_extents"] = [0.0, 1.0, 1.0]
    import json

    with pytest.raises(SceneFormatError):
        deserialize_scene(json.dumps(doc), catalog)


def test_deserialize_rejects_duplicate_ids(catalog, bed_lamp_scene):
    doc = scene_to_doc(bed_lamp_scene, catalog)
    doc["objects"][1]["id"] = doc["objects"][0]["id"]
    import json

    with pytest.raises(SceneFormatError):
        deserialize_scene(json.dumps(doc), catalog)


def test_empty_scene_serializes_canonically(catalog):
    scene = make_scene([])
    data = serialize_scene(scene, catalog)
    assert serialize_scene(deserialize_scene(data, catalog), catalog) == data
