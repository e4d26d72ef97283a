"""Scene data model: oriented boxed objects, rooms, and semantic scene graphs.

Axes: x points right, y up, z toward the front; yaw rotates about y
(positive = counter-clockwise seen from above). Sizes are half extents.
All types are immutable values; operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .catalog import ObjectCatalog
from .relations import SpatialRelation, classify_relation

ROOM_MAX_NODES = {"bedroom": 12, "dining": 21, "living": 21, "toy": 8}


def max_nodes(room_type: str) -> int:
    try:
        return ROOM_MAX_NODES[room_type]
    except KeyError:
        raise ValueError(f"unknown room type {room_type!r}") from None


def normalize_yaw(yaw: float) -> float:
    """Wrap into [-pi, pi)."""
    wrapped = math.fmod(yaw + math.pi, 2.0 * math.pi)
    if wrapped < 0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class SceneObject:
    id: str
    category: int
    caption: str
    feature_indices: tuple[int, ...]
    position: tuple[float, float, float]
    half_extents: tuple[float, float, float]
    yaw: float

    def __post_init__(self):
        values = (*self.position, *self.half_extents, self.yaw)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"object {self.id!r} has non-finite values")
        if not all(h > 0 for h in self.half_extents):
            raise ValueError(f"object {self.id!r} needs strictly positive half extents")
        if self.category < 0:
            raise ValueError(f"object {self.id!r} has negative category")
        if any(f < 0 for f in self.feature_indices):
            raise ValueError(f"object {self.id!r} has negative feature indices")
        object.__setattr__(self, "yaw", normalize_yaw(self.yaw))
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "half_extents", tuple(float(v) for v in self.half_extents))
        object.__setattr__(self, "feature_indices", tuple(int(v) for v in self.feature_indices))

    def moved_to(self, position) -> "SceneObject":
        return replace(self, position=tuple(float(v) for v in position))


@dataclass(frozen=True)
class Scene:
    room_type: str
    room_bounds: tuple[tuple[float, float, float], tuple[float, float, float]]
    objects: tuple[SceneObject, ...]

    def __post_init__(self):
        limit = max_nodes(self.room_type)
        if len(self.objects) > limit:
            raise ValueError(
                f"{self.room_type} holds at most {limit} objects, got {len(self.objects)}"
            )
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError("object ids must be unique")
        lo, hi = self.room_bounds
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError("room_bounds min must be strictly below max")
        for obj in self.objects:
            x, _, z = obj.position
            if not (lo[0] <= x <= hi[0] and lo[2] <= z <= hi[2]):
                raise ValueError(f"object {obj.id!r} center outside room bounds")
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(
            self,
            "room_bounds",
            (tuple(float(v) for v in lo), tuple(float(v) for v in hi)),
        )

    @property
    def max_nodes(self) -> int:
        return max_nodes(self.room_type)

    def object_by_id(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(f"no object {object_id!r}")

    def index_of(self, object_id: str) -> int:
        for i, obj in enumerate(self.objects):
            if obj.id == object_id:
                return i
        raise KeyError(f"no object {object_id!r}")

    def with_objects(self, objects) -> "Scene":
        return replace(self, objects=tuple(objects))


def n_edge_slots(m: int) -> int:
    return m * (m - 1) // 2


def edge_slot(i: int, j: int, m: int) -> int:
    """Flat index of ordered pair (i, j), i < j, in row-major upper-triangle order."""
    if not 0 <= i < j < m:
        raise ValueError(f"bad edge pair ({i}, {j}) for m={m}")
    return i * m - i * (i + 1) // 2 + (j - i - 1)


def edge_pairs(m: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(m) for j in range(i + 1, m)]


@dataclass(frozen=True)
class SceneGraph:
    """Padded semantic graph: node categories/features plus directed pair relations.

    Padded slots carry the dedicated EMPTY category (== number of catalog
    categories), zero-filled features, and NONE edges. Slot i of an edge pair
    (i, j) is the grammatical subject.
    """

    node_categories: tuple[int, ...]
    node_feature_indices: tuple[tuple[int, ...], ...]
    edges: tuple[SpatialRelation, ...]
    node_mask: tuple[bool, ...]
    empty_category: int

    def __post_init__(self):
        m = len(self.node_categories)
        if len(self.node_feature_indices) != m or len(self.node_mask) != m:
            raise ValueError("node arrays must share length M")
        if len(self.edges) != n_edge_slots(m):
            raise ValueError("edges must cover every ordered pair i < j")
        for i, real in enumerate(self.node_mask):
            if real and self.node_categories[i] == self.empty_category:
                raise ValueError(f"real node {i} marked EMPTY")
            if not real and self.node_categories[i] != self.empty_category:
                raise ValueError(f"padded node {i} must be EMPTY")
        for (i, j), rel in zip(edge_pairs(m), self.edges):
            if not (self.node_mask[i] and self.node_mask[j]) and rel != SpatialRelation.NONE:
                raise ValueError(f"edge ({i},{j}) touches a padded node but is not NONE")

    @property
    def m(self) -> int:
        return len(self.node_categories)

    @property
    def n_real(self) -> int:
        return sum(self.node_mask)

    def edge(self, i: int, j: int) -> SpatialRelation:
        return self.edges[edge_slot(i, j, self.m)]


def extract_scene_graph(scene: Scene, catalog: ObjectCatalog) -> SceneGraph:
    """Pairwise-classified semantic graph of a scene, padded to max_nodes."""
    m = scene.max_nodes
    n = len(scene.objects)
    if n > m:
        raise ValueError(f"scene exceeds max_nodes ({n} > {m})")
    empty = catalog.n_categories
    categories = [o.category for o in scene.objects] + [empty] * (m - n)
    features = [o.feature_indices for o in scene.objects]
    features += [tuple([0] * catalog.n_f)] * (m - n)
    edges = []
    for i, j in edge_pairs(m):
        if i < n and j < n:
            edges.append(classify_relation(scene.objects[i], scene.objects[j]))
        else:
            edges.append(SpatialRelation.NONE)
    return SceneGraph(
        node_categories=tuple(categories),
        node_feature_indices=tuple(features),
        edges=tuple(edges),
        node_mask=tuple([True] * n + [False] * (m - n)),
        empty_category=empty,
    )


def compact_graph(graph: SceneGraph) -> SceneGraph:
    """Push EMPTY slots to the tail, preserving the relative order of real nodes."""
    order = [i for i, real in enumerate(graph.node_mask) if real]
    m = graph.m
    n = len(order)
    categories = [graph.node_categories[i] for i in order] + [graph.empty_category] * (m - n)
    n_f = len(graph.node_feature_indices[0]) if m else 0
    features = [graph.node_feature_indices[i] for i in order] + [tuple([0] * n_f)] * (m - n)
    edges = [SpatialRelation.NONE] * n_edge_slots(m)
    for a in range(n):
        for b in range(a + 1, n):
            i, j = order[a], order[b]
            edges[edge_slot(a, b, m)] = graph.edge(i, j)
    return SceneGraph(
        node_categories=tuple(categories),
        node_feature_indices=tuple(features),
        edges=tuple(edges),
        node_mask=tuple([True] * n + [False] * (m - n)),
        empty_category=graph.empty_category,
    )


def layout_matrix(scene: Scene) -> np.ndarray:
    """M x 8 rows of [position(3), half_extents(3), cos yaw, sin yaw]; pads zero."""
    m = scene.max_nodes
    out = np.zeros((m, 8), dtype=np.float64)
    for i, obj in enumerate(scene.objects):
        out[i, 0:3] = obj.position
        out[i, 3:6] = obj.half_extents
        out[i, 6] = math.cos(obj.yaw)
        out[i, 7] = math.sin(obj.yaw)
    return out


def scene_from_layout(layout: np.ndarray, like: Scene) -> Scene:
    """Rebuild ``like`` with poses taken from the layout rows of its real objects.

    The rotation columns are unit-normalized before the atan2 so slightly
    denormalized rows (e.g. sampled ones) still yield a valid yaw.
    """
    objects = []
    for i, obj in enumerate(like.objects):
        row = layout[i]
        c, s = float(row[6]), float(row[7])
        norm = math.hypot(c, s)
        if norm <= 0:
            raise ValueError(f"layout row {i} has zero rotation columns")
        yaw = math.atan2(s / norm, c / norm)
        objects.append(
            replace(
                obj,
                position=(float(row[0]), float(row[1]), float(row[2])),
                half_extents=(float(row[3]), float(row[4]), float(row[5])),
                yaw=yaw,
            )
        )
    return like.with_objects(objects)
