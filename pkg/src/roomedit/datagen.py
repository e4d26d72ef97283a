"""Automatic editing-pair generation.

Every emitted pair is machine-checkable: replaying the stored template
command through the deterministic executor reproduces the stored target
scene field-exactly, and targets are collision-free (with a small clearance)
and inside the room. Sampling grids follow the generation recipe exactly:
translate distances 0.1..1.5 m step 0.1, rotation angles +-(15..180) step 15,
scale factors in [0.5, 0.8] or [1.2, 1.5].
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .catalog import ObjectCatalog, catalog_to_doc
from .commands import (
    Add,
    EditCommand,
    ObjectRef,
    RelativeLocation,
    Remove,
    Replace,
    Rotate,
    Scale,
    Translate,
    edit_type,
    format_template_command,
    parse_template_command,
)
from .editor import EditError, apply_edit, resolve_object
from .geometry import box_of, collides, footprint_corners, scene_collisions
from .relations import SpatialRelation, classify_relation
from .scene import Scene, SceneObject
from .sceneio import scene_from_doc, scene_to_doc

EDIT_TYPES = ("translate", "rotate", "scale", "add", "remove", "replace")

TRANSLATE_DISTANCES = tuple(round(0.1 * k, 1) for k in range(1, 16))
ROTATE_ANGLES = tuple(range(15, 181, 15))
SHRINK_RANGE = (0.5, 0.8)
ENLARGE_RANGE = (1.2, 1.5)
ENLARGE_TRIALS = 10

ROOM_BOUNDS = {
    "toy": ((-2.5, 0.0, -2.5), (2.5, 3.0, 2.5)),
    "bedroom": ((-3.0, 0.0, -3.0), (3.0, 3.0, 3.0)),
    "dining": ((-4.5, 0.0, -4.5), (4.5, 3.0, 4.5)),
    "living": ((-4.5, 0.0, -4.5), (4.5, 3.0, 4.5)),
}


class NoUniqueReference(EditError):
    pass


@dataclass(frozen=True)
class EditPair:
    pair_id: str
    room_type: str
    edit_type: str
    source: Scene
    target: Scene
    template_command: str
    natural_command: str | None
    target_object_id: str
    reference_object_id: str | None
    seed: int


@dataclass(frozen=True)
class GenConfig:
    attempts: int = 1
    types: tuple[str, ...] = EDIT_TYPES
    seed: int = 0
    clearance: float = 1e-4
    test_fraction: float = 0.1

    def __post_init__(self):
        if self.attempts < 1:
            raise ValueError("attempts must be >= 1")
        unknown = set(self.types) - set(EDIT_TYPES)
        if unknown:
            raise ValueError(f"unknown edit types: {sorted(unknown)}")


def footprint_within_bounds(obj: SceneObject, bounds) -> bool:
    lo, hi = bounds
    corners = footprint_corners(box_of(obj))
    if corners[:, 0].min() < lo[0] or corners[:, 0].max() > hi[0]:
        return False
    if corners[:, 1].min() < lo[2] or corners[:, 1].max() > hi[2]:
        return False
    y_lo = obj.position[1] - obj.half_extents[1]
    y_hi = obj.position[1] + obj.half_extents[1]
    return y_lo >= lo[1] - 1e-9 and y_hi <= hi[1] + 1e-9


def scene_is_valid(scene: Scene, clearance: float) -> bool:
    if scene_collisions(scene, clearance=clearance):
        return False
    return all(footprint_within_bounds(o, scene.room_bounds) for o in scene.objects)


def describe_location(
    scene: Scene, obj: SceneObject, catalog: ObjectCatalog, placeable_only: bool = False
) -> tuple[RelativeLocation, str]:
    """Relative location of ``obj`` against the nearest uniquely-categorized object.

    Returns the location plus the reference object id. With ``placeable_only``
    the nearest candidate whose relation is horizontal is used (above/below
    cannot anchor a floor placement).
    """
    counts: dict[int, int] = {}
    for other in scene.objects:
        counts[other.category] = counts.get(other.category, 0) + 1
    candidates = [
        other for other in scene.objects if other.id != obj.id and counts[other.category] == 1
    ]
    if not candidates:
        raise NoUniqueReference(f"no uniquely-categorized reference for {obj.id!r}")
    candidates.sort(
        key=lambda other: math.hypot(
            other.position[0] - obj.position[0], other.position[2] - obj.position[2]
        )
    )
    for reference in candidates:
        relation = classify_relation(obj, reference)
        if placeable_only and relation in (SpatialRelation.ABOVE, SpatialRelation.BELOW):
            continue
        return RelativeLocation(relation, reference.caption), reference.id
    raise NoUniqueReference(f"no horizontally-related unique reference for {obj.id!r}")


def describe_ref(scene: Scene, obj: SceneObject, catalog: ObjectCatalog) -> ObjectRef | None:
    """ObjectRef that resolves back to ``obj``, or None when it cannot."""
    duplicated = any(o.caption == obj.caption for o in scene.objects if o.id != obj.id)
    if duplicated:
        try:
            location, _ = describe_location(scene, obj, catalog)
        except NoUniqueReference:
            return None
        ref = ObjectRef(obj.caption, location)
    else:
        ref = ObjectRef(obj.caption)
    try:
        if resolve_object(scene, ref, catalog) != obj.id:
            return None
    except EditError:
        return None
    return ref


def _pair(
    scene: Scene,
    target: Scene,
    cmd: EditCommand,
    catalog: ObjectCatalog,
    clearance: float,
    target_object_id: str,
    reference_object_id: str | None = None,
) -> EditPair | None:
    """Validate a candidate pair: in bounds, clear of collisions, and replayable."""
    if not scene_is_valid(target, clearance):
        return None
    template = format_template_command(cmd)
    try:
        replayed = apply_edit(scene, parse_template_command(template), catalog)
    except (EditError, ValueError):
        return None
    if replayed != target:
        return None
    return EditPair(
        pair_id="",
        room_type=scene.room_type,
        edit_type=edit_type(cmd),
        source=scene,
        target=target,
        template_command=template,
        natural_command=None,
        target_object_id=target_object_id,
        reference_object_id=reference_object_id,
        seed=0,
    )


def _pick_object(scene: Scene, rng: np.random.Generator) -> SceneObject:
    return scene.objects[int(rng.integers(len(scene.objects)))]


def _try_edit(scene: Scene, cmd: EditCommand, catalog: ObjectCatalog) -> Scene | None:
    try:
        return apply_edit(scene, cmd, catalog)
    except (EditError, ValueError):
        return None


def gen_translate(
    scene: Scene, catalog: ObjectCatalog, rng: np.random.Generator, clearance: float = 1e-4
) -> EditPair | None:
    if not scene.objects:
        return None
    obj = _pick_object(scene, rng)
    ref = describe_ref(scene, obj, catalog)
    if ref is None:
        return None
    grid = [(d, direction) for d in TRANSLATE_DISTANCES for direction in ("front", "back", "left", "right")]
    for idx in rng.permutation(len(grid)):
        distance, direction = grid[idx]
        cmd = Translate(ref, direction, distance)
        target = _try_edit(scene, cmd, catalog)
        if target is None:
            continue
        pair = _pair(scene, target, cmd, catalog, clearance, target_object_id=obj.id)
        if pair is not None:
            return pair
    return None


def gen_rotate(
    scene: Scene, catalog: ObjectCatalog, rng: np.random.Generator, clearance: float = 1e-4
) -> EditPair | None:
    if not scene.objects:
        return None
    obj = _pick_object(scene, rng)
    ref = describe_ref(scene, obj, catalog)
    if ref is None:
        return None
    grid = [sign * a for a in ROTATE_ANGLES for sign in (1, -1)]
    for idx in rng.permutation(len(grid)):
        cmd = Rotate(ref, float(grid[idx]))
        target = _try_edit(scene, cmd, catalog)
        if target is None:
            continue
        pair = _pair(scene, target, cmd, catalog, clearance, target_object_id=obj.id)
        if pair is not None:
            return pair
    return None


def gen_scale(
    scene: Scene, catalog: ObjectCatalog, rng: np.random.Generator, clearance: float = 1e-4
) -> EditPair | None:
    if not scene.objects:
        return None
    obj = _pick_object(scene, rng)
    ref = describe_ref(scene, obj, catalog)
    if ref is None:
        return None
    if rng.random() < 0.5:
        factor = float(rng.uniform(*SHRINK_RANGE))
        cmd = Scale(ref, factor)
        target = _try_edit(scene, cmd, catalog)
        if target is None:
            return None
        return _pair(scene, target, cmd, catalog, clearance, target_object_id=obj.id)
    factors = sorted((float(f) for f in rng.uniform(*ENLARGE_RANGE, size=ENLARGE_TRIALS)), reverse=True)
    for factor in factors:
        cmd = Scale(ref, factor)
        target = _try_edit(scene, cmd, catalog)
        if target is None:
            continue
        pair = _pair(scene, target, cmd, catalog, clearance, target_object_id=obj.id)
        if pair is not None:
            return pair
    return None


def gen_add_remove(
    scene: Scene, catalog: ObjectCatalog, rng: np.random.Generator, clearance: float = 1e-4
) -> tuple[EditPair | None, EditPair | None]:
    """Remove pair (scene -> scene minus o) and its replayed Add counterpart.

    The Add target stores the executor's deterministic placement rather than
    the original pose, which keeps both pairs exactly replayable.
    """
    if len(scene.objects) < 2:
        return None, None
    obj = _pick_object(scene, rng)
    ref = describe_ref(scene, obj, catalog)
    if ref is None:
        return None, None

    remove_cmd = Remove(ref)
    removed = _try_edit(scene, remove_cmd, catalog)
    remove_pair = None
    if removed is not None and len(removed.objects) == len(scene.objects) - 1:
        remove_pair = _pair(
            scene, removed, remove_cmd, catalog, clearance, target_object_id=obj.id
        )

    add_pair = None
    if removed is not None:
        try:
            location, reference_id = describe_location(scene, obj, catalog, placeable_only=True)
        except NoUniqueReference:
            location = None
        if location is not None:
            add_cmd = Add(obj.caption, location)
            added = _try_edit(removed, add_cmd, catalog)
            if added is not None and len(added.objects) == len(removed.objects) + 1:
                new_id = added.objects[-1].id
                add_pair = _pair(
                    removed,
                    added,
                    add_cmd,
                    catalog,
                    clearance,
                    target_object_id=new_id,
                    reference_object_id=reference_id,
                )
    return add_pair, remove_pair


def gen_replace(
    scene: Scene, catalog: ObjectCatalog, rng: np.random.Generator, clearance: float = 1e-4
) -> EditPair | None:
    if not scene.objects:
        return None
    obj = _pick_object(scene, rng)
    ref = describe_ref(scene, obj, catalog)
    if ref is None:
        return None
    candidates = [
        p for p in catalog.prototypes_of(obj.category) if p.caption != obj.caption
    ]
    if not candidates:
        return None
    order = rng.permutation(len(candidates))
    others = [o for o in scene.objects if o.id != obj.id]
    y_min = obj.position[1] - obj.half_extents[1]

    def fits(proto) -> bool:
        candidate_box = box_of(
            dc_replace(
                obj,
                half_extents=proto.half_extents,
                position=(obj.position[0], y_min + proto.half_extents[1], obj.position[2]),
            )
        )
        return not any(collides(candidate_box, box_of(o)) for o in others)

    chosen = None
    for idx in order:
        if fits(candidates[idx]):
            chosen = candidates[idx]
            break
    if chosen is None:
        # All candidates collide: pick one anyway; the executor shrinks it.
        chosen = candidates[int(order[0])]
    cmd = Replace(ref, chosen.caption)
    target = _try_edit(scene, cmd, catalog)
    if target is None:
        return None
    return _pair(scene, target, cmd, catalog, clearance, target_object_id=obj.id)


_GENERATORS = {
    "translate": gen_translate,
    "rotate": gen_rotate,
    "scale": gen_scale,
    "replace": gen_replace,
}


def sample_toy_scene(
    catalog: ObjectCatalog,
    rng: np.random.Generator,
    room_type: str = "toy",
    n_objects: tuple[int, int] = (3, 5),
    distinct: bool = True,
    clearance: float = 0.05,
    max_attempts: int = 120,
) -> Scene | None:
    """Rejection-sample a collision-free room from the catalog."""
    bounds = ROOM_BOUNDS[room_type]
    lo, hi = bounds
    n = int(rng.integers(n_objects[0], n_objects[1] + 1))
    if distinct:
        if n > len(catalog.prototypes):
            return None
        picks = rng.choice(len(catalog.prototypes), size=n, replace=False)
    else:
        picks = rng.integers(0, len(catalog.prototypes), size=n)
    placed: list[SceneObject] = []
    counters: dict[str, int] = {}
    for pick in picks:
        proto = catalog.prototypes[int(pick)]
        radius = math.hypot(proto.half_extents[0], proto.half_extents[2])
        if lo[0] + radius >= hi[0] - radius or lo[2] + radius >= hi[2] - radius:
            return None
        ok = False
        for _ in range(max_attempts):
            x = float(rng.uniform(lo[0] + radius, hi[0] - radius))
            z = float(rng.uniform(lo[2] + radius, hi[2] - radius))
            if rng.random() < 0.5:
                yaw = float(rng.choice((0.0, 0.5 * math.pi, math.pi, -0.5 * math.pi)))
            else:
                yaw = float(rng.uniform(-math.pi, math.pi))
            k = counters.get(proto.category, 0)
            candidate = SceneObject(
                id=f"{proto.category}_{k}",
                category=catalog.category_index(proto.category),
                caption=proto.caption,
                feature_indices=proto.feature_indices,
                position=(x, lo[1] + proto.half_extents[1], z),
                half_extents=proto.half_extents,
                yaw=yaw,
            )
            box = box_of(candidate).inflated(clearance / 2.0)
            if any(collides(box, box_of(o).inflated(clearance / 2.0)) for o in placed):
                continue
            placed.append(candidate)
            counters[proto.category] = k + 1
            ok = True
            break
        if not ok:
            return None
    return Scene(room_type=room_type, room_bounds=bounds, objects=tuple(placed))


def sample_toy_scenes(
    catalog: ObjectCatalog,
    count: int,
    seed: int,
    room_type: str = "toy",
    n_objects: tuple[int, int] = (3, 5),
    distinct: bool = True,
) -> list[Scene]:
    scenes = []
    k = 0
    while len(scenes) < count:
        rng = np.random.default_rng((seed, 7919, k))
        scene = sample_toy_scene(catalog, rng, room_type=room_type, n_objects=n_objects, distinct=distinct)
        k += 1
        if scene is not None:
            scenes.append(scene)
        if k > 50 * count + 100:
            raise RuntimeError("scene sampling keeps failing; loosen the room")
    return scenes


def pair_to_record(pair: EditPair, catalog: ObjectCatalog) -> dict:
    return {
        "pair_id": pair.pair_id,
        "room_type": pair.room_type,
        "edit_type": pair.edit_type,
        "seed": pair.seed,
        "source": scene_to_doc(pair.source, catalog),
        "target": scene_to_doc(pair.target, catalog),
        "template_command": pair.template_command,
        "natural_command": pair.natural_command,
        "target_object_id": pair.target_object_id,
        "reference_object_id": pair.reference_object_id,
    }


def record_to_pair(record: dict, catalog: ObjectCatalog) -> EditPair:
    return EditPair(
        pair_id=record["pair_id"],
        room_type=record["room_type"],
        edit_type=record["edit_type"],
        source=scene_from_doc(record["source"], catalog),
        target=scene_from_doc(record["target"], catalog),
        template_command=record["template_command"],
        natural_command=record.get("natural_command"),
        target_object_id=record["target_object_id"],
        reference_object_id=record.get("reference_object_id"),
        seed=int(record["seed"]),
    )


def generate_pairs_for_scene(
    scene: Scene,
    scene_index: int,
    catalog: ObjectCatalog,
    config: GenConfig,
) -> list[EditPair]:
    """All pairs for one source scene, on its own deterministic RNG stream."""
    rng = np.random.default_rng((config.seed, scene_index))
    seed64 = int((config.seed * 1_000_003 + scene_index) & 0x7FFFFFFFFFFFFFFF)
    pairs: list[EditPair] = []

    def finish(pair: EditPair | None, type_name: str, attempt: int) -> None:
        if pair is None:
            return
        pair = dc_replace(
            pair,
            pair_id=f"{scene.room_type}-{scene_index:05d}-{type_name}-{attempt}",
            seed=seed64,
        )
        pairs.append(pair)

    for attempt in range(config.attempts):
        if "add" in config.types or "remove" in config.types:
            add_pair, remove_pair = gen_add_remove(scene, catalog, rng, config.clearance)
            if "add" in config.types:
                finish(add_pair, "add", attempt)
            if "remove" in config.types:
                finish(remove_pair, "remove", attempt)
        for type_name in ("translate", "rotate", "scale", "replace"):
            if type_name in config.types:
                finish(
                    _GENERATORS[type_name](scene, catalog, rng, config.clearance),
                    type_name,
                    attempt,
                )
    return pairs


def build_dataset(
    scenes: list[Scene],
    catalog: ObjectCatalog,
    config: GenConfig,
    out_dir: str | os.PathLike,
    llm_client=None,
) -> dict:
    """Generate pairs for every scene and write the dataset directory.

    Layout: out/{train,test}/pairs.jsonl, out/stats.json, out/catalog.json.
    Fully deterministic under a fixed config seed.
    """
    out_dir = os.fspath(out_dir)
    splits: dict[str, list[EditPair]] = {"train": [], "test": []}
    test_every = max(2, int(round(1.0 / config.test_fraction))) if config.test_fraction > 0 else 0
    for index, scene in enumerate(scenes):
        pairs = generate_pairs_for_scene(scene, index, catalog, config)
        if llm_client is not None:
            pairs = [
                dc_replace(p, natural_command=naturalize_command(p, llm_client, catalog))
                for p in pairs
            ]
        split = "test" if test_every and index % test_every == test_every - 1 else "train"
        splits[split].extend(pairs)

    stats: dict[str, dict] = {"splits": {}, "total": 0}
    for split, pairs in splits.items():
        split_dir = os.path.join(out_dir, split)
        os.makedirs(split_dir, exist_ok=True)
        counts: dict[str, dict[str, int]] = {}
        with open(os.path.join(split_dir, "pairs.jsonl"), "w", encoding="utf-8") as fh:
            for pair in pairs:
                fh.write(json.dumps(pair_to_record(pair, catalog), sort_keys=True, separators=(",", ":")))
                fh.write("\n")
                room = counts.setdefault(pair.room_type, {})
                room[pair.edit_type] = room.get(pair.edit_type, 0) + 1
        stats["splits"][split] = {"count": len(pairs), "by_room_and_type": counts}
        stats["total"] += len(pairs)
    with open(os.path.join(out_dir, "stats.json"), "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "catalog.json"), "w", encoding="utf-8") as fh:
        json.dump(catalog_to_doc(catalog), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return stats


def load_pairs(path, catalog: ObjectCatalog) -> list[EditPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                pairs.append(record_to_pair(json.loads(line), catalog))
    return pairs


def build_naturalize_prompt(pair: EditPair, catalog: ObjectCatalog) -> str:
    obj = None
    for candidate in (*pair.source.objects, *pair.target.objects):
        if candidate.id == pair.target_object_id:
            obj = candidate
            break
    lines = [
        "Rewrite the following templated room-editing command as one natural",
        "English sentence. Keep the edit unambiguous and mention the object.",
        "",
        f"Room type: {pair.room_type}",
        "Objects:",
    ]
    for o in pair.source.objects:
        lines.append(f"- {catalog.categories[o.category]}: {o.caption}")
    if obj is not None:
        lines.append(f"Edited object caption: {obj.caption}")
    lines.append(f"Template command: {pair.template_command}")
    return "\n".join(lines)


def naturalize_command(pair: EditPair, llm_client, catalog: ObjectCatalog | None = None) -> str:
    """Natural-language command for a pair; offline clients echo the template."""
    if llm_client is None or getattr(llm_client, "offline", False):
        return pair.template_command
    from .catalog import default_catalog

    prompt = build_naturalize_prompt(pair, catalog or default_catalog())
    return llm_client.complete(prompt)
