import math

import numpy as np
import pytest

from roomedit.geometry import (
    OrientedBox,
    box_of,
    collides,
    footprint_corners,
    footprint_intersection_area,
    iou_3d,
    overlap_2d,
    polygon_area,
    scene_collisions,
)

from conftest import make_object, make_scene, random_scene
from oracles import decisive_box_pair, sampled_iou, sampled_overlap


def unit_box(center=(0.0, 0.0, 0.0), yaw=0.0, half=(0.5, 0.5, 0.5)):
    return OrientedBox(center, half, yaw)


def test_footprint_corners_axis_aligned():
    corners = footprint_corners(unit_box())
    expected = {(0.5, 0.5), (-0.5, 0.5), (-0.5, -0.5), (0.5, -0.5)}
    assert {tuple(np.round(c, 12)) for c in corners} == expected
    assert polygon_area(corners) == pytest.approx(1.0)


def test_footprint_quarter_turn_same_point_set():
    a = footprint_corners(unit_box())
    b = footprint_corners(unit_box(yaw=math.pi / 2))
    set_a = {tuple(np.round(c, 9)) for c in a}
    set_b = {tuple(np.round(c, 9)) for c in b}
    assert set_a == set_b


def test_footprint_diagonal_corners():
    corners = footprint_corners(unit_box(yaw=math.pi / 4, half=(1.0, 0.5, 1.0)))
    dist = np.linalg.norm(corners, axis=1)
    assert np.allclose(dist, math.sqrt(2.0))


def test_overlap_2d_basics():
    assert overlap_2d(unit_box(), unit_box(center=(0.9, 0, 0)))
    assert not overlap_2d(unit_box(), unit_box(center=(2.0, 0, 0)))


def test_collides_vertical_gate():
    a = OrientedBox((0, 0.5, 0), (0.5, 0.5, 0.5), 0.0)
    b = OrientedBox((0, 1.75, 0), (0.5, 0.25, 0.5), 0.0)
    assert collides(a, a)
    assert not collides(a, b)


def test_overlap_2d_agrees_with_sampling_oracle():
    rng = np.random.default_rng(42)
    for _ in range(200):
        a, b, _ = decisive_box_pair(rng)
        # Flatten to 2D by making the vertical ranges overlap.
        a = OrientedBox((a.center[0], 0.0, a.center[2]), a.half_extents, a.yaw)
        b = OrientedBox((b.center[0], 0.0, b.center[2]), b.half_extents, b.yaw)
        assert overlap_2d(a, b) == sampled_overlap(a, b, 100_000, rng)


def test_collides_agrees_with_sampling_oracle():
    rng = np.random.default_rng(43)
    for _ in range(300):
        a, b, expected = decisive_box_pair(rng)
        got = collides(a, b)
        assert got == expected
        assert got == sampled_overlap(a, b, 100_000, rng)


def test_iou_identical_box():
    box = unit_box(center=(0.3, 0.7, -0.2), yaw=0.4)
    assert iou_3d(box, box) == pytest.approx(1.0, abs=1e-12)


def test_iou_disjoint():
    assert iou_3d(unit_box(), unit_box(center=(3.0, 0, 0))) == 0.0


def test_iou_shifted_unit_cube_exact_third():
    a = unit_box()
    b = unit_box(center=(0.5, 0.0, 0.0))
    assert abs(iou_3d(a, b) - 1.0 / 3.0) < 1e-9


def test_iou_matches_monte_carlo():
    rng = np.random.default_rng(44)
    for _ in range(40):
        a, b, overlapping = decisive_box_pair(rng)
        estimate = sampled_iou(a, b, 200_000, rng)
        assert iou_3d(a, b) == pytest.approx(estimate, abs=0.01)
        assert (iou_3d(a, b) > 0) == overlapping


def test_iou_and_collides_symmetric():
    rng = np.random.default_rng(45)
    for _ in range(100):
        a, b, _ = decisive_box_pair(rng)
        assert collides(a, b) == collides(b, a)
        assert iou_3d(a, b) == pytest.approx(iou_3d(b, a), abs=1e-12)


def test_iou_positive_iff_collides_with_margin():
    rng = np.random.default_rng(46)
    for _ in range(300):
        a, b, _ = decisive_box_pair(rng)
        assert (iou_3d(a, b) > 0) == collides(a, b)


def test_rigid_transform_invariance():
    rng = np.random.default_rng(47)
    for _ in range(50):
        a, b, _ = decisive_box_pair(rng)
        base_iou = iou_3d(a, b)
        base_col = collides(a, b)
        dx, dy, dz = rng.uniform(-4, 4, size=3)
        theta = rng.uniform(-math.pi, math.pi)
        c, s = math.cos(theta), math.sin(theta)

        def moved(box):
            x, y, z = box.center
            # Same yaw rotation convention as the footprint: about +y.
            nx, nz = x * c + z * s, -x * s + z * c
            return OrientedBox(
                (nx + dx, y + dy, nz + dz), box.half_extents, box.yaw + theta
            )

        assert collides(moved(a), moved(b)) == base_col
        assert iou_3d(moved(a), moved(b)) == pytest.approx(base_iou, abs=1e-9)


def test_clipped_area_bounded_by_min_footprint():
    rng = np.random.default_rng(48)
    for _ in range(200):
        a, b, _ = decisive_box_pair(rng)
        area = footprint_intersection_area(a, b)
        area_a = 4.0 * a.half_extents[0] * a.half_extents[2]
        area_b = 4.0 * b.half_extents[0] * b.half_extents[2]
        assert 0.0 <= area <= min(area_a, area_b) + 1e-9


def test_scene_collisions_empty_for_clean_scene(catalog):
    rng = np.random.default_rng(49)
    scene = random_scene(catalog, rng, n_objects=(4, 5))
    assert scene_collisions(scene) == []


def test_scene_collisions_finds_duplicate(catalog):
    a = make_object(oid="a", position=(0.0, 0.5, 0.0))
    b = make_object(oid="b", position=(0.1, 0.5, 0.0))
    c = make_object(oid="c", position=(2.0, 0.5, 0.0))
    scene = make_scene([a, b, c])
    assert scene_collisions(scene) == [("a", "b")]
    assert scene_collisions(scene, ignore={("b", "a")}) == []


def test_scene_collisions_matches_pairwise_oracle(catalog):
    rng = np.random.default_rng(50)
    objs = [
        make_object(oid=f"o{i}", position=tuple(rng.uniform(-1.2, 1.2, 3) * [1, 0, 1] + [0, 0.5, 0]))
        for i in range(6)
    ]
    scene = make_scene(objs)
    hits = set(map(tuple, scene_collisions(scene)))
    expected = set()
    for i in range(6):
        for j in range(i + 1, 6):
            if collides(box_of(objs[i]), box_of(objs[j])):
                expected.add((objs[i].id, objs[j].id))
    assert hits == expected
