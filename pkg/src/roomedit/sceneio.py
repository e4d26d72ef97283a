"""Canonical scene-file serialization.

Scenes travel as UTF-8 JSON with categories spelled by name and resolved
against a catalog. Serialization is canonical (sorted keys, fixed
separators) so identical scenes produce identical bytes; unknown fields are
rejected on read.
"""

from __future__ import annotations

import json

from .catalog import ObjectCatalog
from .scene import Scene, SceneObject

_SCENE_FIELDS = {"room_type", "room_bounds", "objects"}
_BOUNDS_FIELDS = {"min", "max"}
_OBJECT_FIELDS = {
    "id",
    "category",
    "caption",
    "feature_indices",
    "position",
    "half_extents",
    "yaw_radians",
}


class SceneFormatError(ValueError):
    """Malformed or invariant-violating scene document."""


def _require_vec3(value, what: str) -> tuple[float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise SceneFormatError(f"{what} must be a 3-vector")
    return tuple(float(v) for v in value)


def scene_to_doc(scene: Scene, catalog: ObjectCatalog) -> dict:
    lo, hi = scene.room_bounds
    return {
        "room_type": scene.room_type,
        "room_bounds": {"min": list(lo), "max": list(hi)},
        "objects": [
            {
                "id": o.id,
                "category": catalog.categories[o.category],
                "caption": o.caption,
                "feature_indices": list(o.feature_indices),
                "position": list(o.position),
                "half_extents": list(o.half_extents),
                "yaw_radians": o.yaw,
            }
            for o in scene.objects
        ],
    }


def scene_from_doc(doc, catalog: ObjectCatalog) -> Scene:
    if not isinstance(doc, dict):
        raise SceneFormatError("scene document must be an object")
    unknown = set(doc) - _SCENE_FIELDS
    if unknown:
        raise SceneFormatError(f"unknown scene fields: {sorted(unknown)}")
    missing = _SCENE_FIELDS - set(doc)
    if missing:
        raise SceneFormatError(f"missing scene fields: {sorted(missing)}")
    bounds = doc["room_bounds"]
    if not isinstance(bounds, dict) or set(bounds) != _BOUNDS_FIELDS:
        raise SceneFormatError("room_bounds must carry exactly min and max")
    objects = []
    for k, entry in enumerate(doc["objects"]):
        if not isinstance(entry, dict):
            raise SceneFormatError(f"object {k} must be an object")
        unknown = set(entry) - _OBJECT_FIELDS
        if unknown:
            raise SceneFormatError(f"object {k}: unknown fields {sorted(unknown)}")
        missing = _OBJECT_FIELDS - set(entry)
        if missing:
            raise SceneFormatError(f"object {k}: missing fields {sorted(missing)}")
        feats = entry["feature_indices"]
        if len(feats) != catalog.n_f:
            raise SceneFormatError(f"object {k}: expected {catalog.n_f} feature indices")
        if not all(isinstance(f, int) and 0 <= f < catalog.k_f for f in feats):
            raise SceneFormatError(f"object {k}: feature indices out of range")
        try:
            category = catalog.category_index(entry["category"])
        except KeyError as exc:
            raise SceneFormatError(f"object {k}: {exc.args[0]}") from None
        try:
            objects.append(
                SceneObject(
                    id=str(entry["id"]),
                    category=category,
                    caption=str(entry["caption"]),
                    feature_indices=tuple(feats),
                    position=_require_vec3(entry["position"], f"object {k} position"),
                    half_extents=_require_vec3(entry["half_extents"], f"object {k} half_extents"),
                    yaw=float(entry["yaw_radians"]),
                )
            )
        except ValueError as exc:
            raise SceneFormatError(str(exc)) from None
    try:
        return Scene(
            room_type=str(doc["room_type"]),
            room_bounds=(
                _require_vec3(bounds["min"], "room_bounds.min"),
                _require_vec3(bounds["max"], "room_bounds.max"),
            ),
            objects=tuple(objects),
        )
    except ValueError as exc:
        raise SceneFormatError(str(exc)) from None


def serialize_scene(scene: Scene, catalog: ObjectCatalog) -> bytes:
    doc = scene_to_doc(scene, catalog)
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def deserialize_scene(data: bytes | str, catalog: ObjectCatalog) -> Scene:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SceneFormatError(f"invalid JSON: {exc}") from None
    return scene_from_doc(doc, catalog)


def load_scene(path, catalog: ObjectCatalog) -> Scene:
    with open(path, "rb") as fh:
        return deserialize_scene(fh.read(), catalog)


def save_scene(scene: Scene, catalog: ObjectCatalog, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_scene(scene, catalog))
