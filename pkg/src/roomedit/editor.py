"""Deterministic executor for the six breakdown edit commands.

Every edit touches exactly one object (or adds/removes exactly one) and is a
pure function of (scene, command, catalog). Translate/Rotate/Scale are not
collision-checked (dataset generation guarantees validity); pass
``strict=True`` to reject colliding results in interactive use.
"""

from __future__ import annotations

import math
from dataclasses import replace

from .catalog import ObjectCatalog, Prototype
from .commands import (
    Add,
    EditCommand,
    ObjectRef,
    Remove,
    Replace,
    Rotate,
    Scale,
    Translate,
)
from .geometry import box_of, collides
from .relations import SpatialRelation, classify_relation
from .scene import Scene, SceneObject, normalize_yaw


class EditError(ValueError):
    pass


class NoMatch(EditError):
    pass


class PlacementFailed(EditError):
    pass


class RoomFull(EditError):
    pass


class CollisionInStrictMode(EditError):
    pass


# World-frame direction vectors on the floor plane.
DIRECTION_VECTORS = {
    "front": (0.0, 0.0, 1.0),
    "back": (0.0, 0.0, -1.0),
    "left": (-1.0, 0.0, 0.0),
    "right": (1.0, 0.0, 0.0),
}

_RELATION_AXES = {
    SpatialRelation.IN_FRONT_OF: (0.0, 0.0, 1.0),
    SpatialRelation.CLOSELY_IN_FRONT_OF: (0.0, 0.0, 1.0),
    SpatialRelation.BEHIND: (0.0, 0.0, -1.0),
    SpatialRelation.CLOSELY_BEHIND: (0.0, 0.0, -1.0),
    SpatialRelation.RIGHT_OF: (1.0, 0.0, 0.0),
    SpatialRelation.CLOSELY_RIGHT_OF: (1.0, 0.0, 0.0),
    SpatialRelation.LEFT_OF: (-1.0, 0.0, 0.0),
    SpatialRelation.CLOSELY_LEFT_OF: (-1.0, 0.0, 0.0),
}

ADD_GAP_M = 0.1
ADD_STEP_M = 0.1
ADD_MAX_STEPS = 10
REPLACE_SHRINK_STEP = 0.95


def _tokens(text: str) -> frozenset[str]:
    return frozenset(text.lower().split())


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def _object_tokens(obj: SceneObject, catalog: ObjectCatalog) -> frozenset[str]:
    return _tokens(obj.caption) | _tokens(catalog.categories[obj.category])


def resolve_object(scene: Scene, ref: ObjectRef, catalog: ObjectCatalog) -> str:
    """Resolve a textual object reference to an object id.

    Candidates are scored by token overlap of the description against each
    object's caption plus category name. Ties fall back to the relative
    location filter when present, then to the lowest scene index.
    """
    desc_tokens = _tokens(ref.description)
    scores = [
        _jaccard(desc_tokens, _object_tokens(obj, catalog)) for obj in scene.objects
    ]
    if not scores or max(scores) <= 0.0:
        raise NoMatch(f"nothing in the scene matches {ref.description!r}")
    best = max(scores)
    candidates = [i for i, s in enumerate(scores) if s == best]
    if len(candidates) > 1 and ref.relative is not None:
        reference_id = resolve_object(scene, ObjectRef(ref.relative.reference_desc), catalog)
        reference = scene.object_by_id(reference_id)
        filtered = [
            i
            for i in candidates
            if classify_relation(scene.objects[i], reference) == ref.relative.relation
        ]
        if filtered:
            candidates = filtered
    return scene.objects[candidates[0]].id


def best_prototype(
    catalog: ObjectCatalog, description: str, category_index: int | None = None
) -> Prototype:
    """Best token-overlap prototype, optionally restricted to one category."""
    desc_tokens = _tokens(description)
    pool = (
        catalog.prototypes
        if category_index is None
        else tuple(catalog.prototypes_of(category_index))
    )
    best_score, best = 0.0, None
    for proto in pool:
        score = _jaccard(desc_tokens, _tokens(proto.caption) | _tokens(proto.category))
        if score > best_score:
            best_score, best = score, proto
    if best is None:
        raise NoMatch(f"no catalog prototype matches {description!r}")
    return best


def _axis_extent(obj, axis: tuple[float, float, float]) -> float:
    """Half extent of the rotated footprint along a world axis (x or z)."""
    hx, _, hz = obj.half_extents
    c, s = abs(math.cos(obj.yaw)), abs(math.sin(obj.yaw))
    if axis[0] != 0.0:
        return hx * c + hz * s
    return hx * s + hz * c


def _fresh_id(scene: Scene, category: str) -> str:
    used = {o.id for o in scene.objects}
    k = 0
    while f"{category}_{k}" in used:
        k += 1
    return f"{category}_{k}"


def _collides_any(candidate: SceneObject, others) -> bool:
    box = box_of(candidate)
    return any(collides(box, box_of(o)) for o in others)


def _apply_translate(scene: Scene, cmd: Translate, catalog: ObjectCatalog) -> Scene:
    target_id = resolve_object(scene, cmd.target, catalog)
    axis = DIRECTION_VECTORS[cmd.direction]
    objects = []
    for obj in scene.objects:
        if obj.id == target_id:
            position = tuple(p + cmd.distance_m * a for p, a in zip(obj.position, axis))
            obj = obj.moved_to(position)
        objects.append(obj)
    return scene.with_objects(objects)


def _apply_rotate(scene: Scene, cmd: Rotate, catalog: ObjectCatalog) -> Scene:
    target_id = resolve_object(scene, cmd.target, catalog)
    objects = []
    for obj in scene.objects:
        if obj.id == target_id:
            obj = replace(obj, yaw=normalize_yaw(obj.yaw + math.radians(cmd.angle_degrees)))
        objects.append(obj)
    return scene.with_objects(objects)


def _scaled(obj: SceneObject, factor: float) -> SceneObject:
    """Uniformly scaled object with its bottom face height preserved."""
    y_min = obj.position[1] - obj.half_extents[1]
    extents = tuple(h * factor for h in obj.half_extents)
    position = (obj.position[0], y_min + extents[1], obj.position[2])
    return replace(obj, half_extents=extents, position=position)


def _apply_scale(scene: Scene, cmd: Scale, catalog: ObjectCatalog) -> Scene:
    target_id = resolve_object(scene, cmd.target, catalog)
    objects = [
        _scaled(obj, cmd.factor) if obj.id == target_id else obj for obj in scene.objects
    ]
    return scene.with_objects(objects)


def _apply_remove(scene: Scene, cmd: Remove, catalog: ObjectCatalog) -> Scene:
    target_id = resolve_object(scene, cmd.target, catalog)
    return scene.with_objects([o for o in scene.objects if o.id != target_id])


def _apply_add(scene: Scene, cmd: Add, catalog: ObjectCatalog) -> Scene:
    if len(scene.objects) >= scene.max_nodes:
        raise RoomFull(f"{scene.room_type} already holds {scene.max_nodes} objects")
    proto = best_prototype(catalog, cmd.target_desc)
    reference_id = resolve_object(scene, ObjectRef(cmd.location.reference_desc), catalog)
    reference = scene.object_by_id(reference_id)
    axis = _RELATION_AXES[cmd.location.relation]
    floor = scene.room_bounds[0][1]
    new_obj = SceneObject(
        id=_fresh_id(scene, proto.category),
        category=catalog.category_index(proto.category),
        caption=proto.caption,
        feature_indices=proto.feature_indices,
        position=(0.0, floor + proto.half_extents[1], 0.0),
        half_extents=proto.half_extents,
        yaw=0.0,
    )
    gap = _axis_extent(reference, axis) + _axis_extent(new_obj, axis) + ADD_GAP_M
    for step in range(ADD_MAX_STEPS + 1):
        offset = gap + step * ADD_STEP_M
        position = (
            reference.position[0] + offset * axis[0],
            floor + proto.half_extents[1],
            reference.position[2] + offset * axis[2],
        )
        candidate = new_obj.moved_to(position)
        if not _collides_any(candidate, scene.objects):
            try:
                return scene.with_objects((*scene.objects, candidate))
            except ValueError as exc:
                raise PlacementFailed(str(exc)) from None
    raise PlacementFailed(
        f"no free spot {cmd.location.relation.name.lower()} of {reference_id!r} "
        f"within {ADD_MAX_STEPS} steps"
    )


def _apply_replace(scene: Scene, cmd: Replace, catalog: ObjectCatalog) -> Scene:
    target_id = resolve_object(scene, cmd.source, catalog)
    old = scene.object_by_id(target_id)
    proto = best_prototype(catalog, cmd.target_desc, category_index=old.category)
    others = [o for o in scene.objects if o.id != target_id]
    y_min = old.position[1] - old.half_extents[1]
    extents = proto.half_extents
    while True:
        candidate = replace(
            old,
            caption=proto.caption,
            feature_indices=proto.feature_indices,
            half_extents=extents,
            position=(old.position[0], y_min + extents[1], old.position[2]),
        )
        contained = all(h <= h_old for h, h_old in zip(extents, old.half_extents))
        if contained or not _collides_any(candidate, others):
            break
        extents = tuple(h * REPLACE_SHRINK_STEP for h in extents)
    objects = [candidate if o.id == target_id else o for o in scene.objects]
    return scene.with_objects(objects)


def apply_edit(
    scene: Scene, cmd: EditCommand, catalog: ObjectCatalog, strict: bool = False
) -> Scene:
    """Execute one breakdown command, returning the edited scene."""
    if isinstance(cmd, Translate):
        result = _apply_translate(scene, cmd, catalog)
    elif isinstance(cmd, Rotate):
        result = _apply_rotate(scene, cmd, catalog)
    elif isinstance(cmd, Scale):
        result = _apply_scale(scene, cmd, catalog)
    elif isinstance(cmd, Remove):
        result = _apply_remove(scene, cmd, catalog)
    elif isinstance(cmd, Add):
        result = _apply_add(scene, cmd, catalog)
    elif isinstance(cmd, Replace):
        result = _apply_replace(scene, cmd, catalog)
    else:
        raise TypeError(f"not an edit command: {cmd!r}")
    if strict:
        from .geometry import scene_collisions

        hits = scene_collisions(result)
        if hits:
            raise CollisionInStrictMode(f"edit leaves collisions: {hits[:3]}")
    return result
