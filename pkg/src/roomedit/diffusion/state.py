"""Discrete graph state and scene/graph <-> tensor conversion.

Token vocabularies (MASK always equals the count of real values):

* categories: 0..K_c-1 catalog categories, EMPTY = K_c, MASK = K_c + 1
* feature slots: 0..K_f-1 codebook values, EMPTY = K_f, MASK = K_f + 1
* edges: the 10 relations, NONE = 10, MASK = 11

The diffusion target for an edit pair is aligned to the source by object id:
target slot i holds the target object whose id matches source object i (so a
removed object leaves an EMPTY slot in place), and objects new to the target
fill the first free slots. This keeps (source, target) a slot-aligned token
mapping, which a permutation-equivariant denoiser can actually represent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..catalog import ObjectCatalog
from ..relations import SpatialRelation, invert_relation
from ..scene import Scene, SceneGraph, edge_pairs, extract_scene_graph, layout_matrix

# Attention-bias pair vocabulary: 0..10 directed relations (incl. NONE),
# 11 MASK, then structural pair types.
EDGE_MASK = 11
PAIR_ALIGN = 12
PAIR_CROSS = 13
PAIR_SELF = 14
PAIR_VOCAB = 15

# Inverse-relation permutation over edge values (relations + NONE + MASK).
EDGE_INVERSE = np.array(
    [invert_relation(SpatialRelation(v)).value for v in range(11)] + [EDGE_MASK],
    dtype=np.int64,
)


@dataclass(frozen=True)
class VocabSpec:
    k_c: int
    k_f: int
    n_f: int

    @property
    def empty_cat(self) -> int:
        return self.k_c

    @property
    def mask_cat(self) -> int:
        return self.k_c + 1

    @property
    def empty_feat(self) -> int:
        return self.k_f

    @property
    def mask_feat(self) -> int:
        return self.k_f + 1

    @property
    def n_cat_values(self) -> int:
        # Real values a denoiser predicts: categories plus EMPTY.
        return self.k_c + 1

    @property
    def n_feat_values(self) -> int:
        return self.k_f + 1

    @property
    def n_edge_values(self) -> int:
        return 11

    @classmethod
    def from_catalog(cls, catalog: ObjectCatalog) -> "VocabSpec":
        return cls(k_c=catalog.n_categories, k_f=catalog.k_f, n_f=catalog.n_f)


@dataclass(frozen=True)
class DiscreteState:
    """One graph as token arrays: categories (M,), features (M, n_f), edges (E,)."""

    categories: np.ndarray
    features: np.ndarray
    edges: np.ndarray

    def __post_init__(self):
        m = self.categories.shape[0]
        if self.features.shape[0] != m or self.features.ndim != 2:
            raise ValueError("features must be (M, n_f)")
        if self.edges.shape != (m * (m - 1) // 2,):
            raise ValueError("edges must cover all ordered pairs i < j")

    @property
    def m(self) -> int:
        return self.categories.shape[0]


def graph_to_state(graph: SceneGraph, vocab: VocabSpec) -> DiscreteState:
    cats = np.array(graph.node_categories, dtype=np.int64)
    feats = np.array(graph.node_feature_indices, dtype=np.int64)
    mask = np.array(graph.node_mask, dtype=bool)
    feats = np.where(mask[:, None], feats, vocab.empty_feat)
    edges = np.array([int(rel) for rel in graph.edges], dtype=np.int64)
    return DiscreteState(cats, feats, edges)


def state_to_graph(state: DiscreteState, vocab: VocabSpec) -> SceneGraph:
    """Valid SceneGraph from a fully-denoised state (no MASK tokens).

    EMPTY slots get zero-filled features; edges touching EMPTY slots are
    forced to NONE, which the graph invariants require.
    """
    cats = state.categories
    if np.any(cats == vocab.mask_cat) or np.any(state.features == vocab.mask_feat):
        raise ValueError("state still contains MASK tokens")
    if np.any(state.edges == EDGE_MASK):
        raise ValueError("state still contains MASK edges")
    m = state.m
    mask = cats != vocab.empty_cat
    cats = np.where(mask, cats, vocab.empty_cat)
    feats = np.where(mask[:, None], state.features, 0)
    # Clamp stray EMPTY feature values on real nodes back into the codebook.
    feats = np.where(mask[:, None] & (feats >= vocab.k_f), 0, feats)
    edges = []
    for slot, (i, j) in enumerate(edge_pairs(m)):
        if mask[i] and mask[j]:
            edges.append(SpatialRelation(int(state.edges[slot])))
        else:
            edges.append(SpatialRelation.NONE)
    return SceneGraph(
        node_categories=tuple(int(c) for c in cats),
        node_feature_indices=tuple(tuple(int(f) for f in row) for row in feats),
        edges=tuple(edges),
        node_mask=tuple(bool(b) for b in mask),
        empty_category=vocab.empty_cat,
    )


def edges_full_matrix(edges_upper: np.ndarray, m: int) -> np.ndarray:
    """(M, M) directed edge values: upper triangle as stored, lower inverted."""
    full = np.full((m, m), int(SpatialRelation.NONE), dtype=np.int64)
    for slot, (i, j) in enumerate(edge_pairs(m)):
        value = int(edges_upper[slot])
        full[i, j] = value
        full[j, i] = int(EDGE_INVERSE[value])
    return full


def pair_bias_ids(edges_s_full: np.ndarray, edges_t_full: np.ndarray) -> np.ndarray:
    """(2M, 2M) attention-bias vocabulary ids for [source || target] tokens."""
    m = edges_s_full.shape[0]
    n = 2 * m
    ids = np.full((n, n), PAIR_CROSS, dtype=np.int64)
    ids[:m, :m] = edges_s_full
    ids[m:, m:] = edges_t_full
    idx = np.arange(m)
    ids[idx, m + idx] = PAIR_ALIGN
    ids[m + idx, idx] = PAIR_ALIGN
    ids[np.arange(n), np.arange(n)] = PAIR_SELF
    return ids


def all_mask_state(m: int, n_f: int, vocab: VocabSpec) -> DiscreteState:
    return DiscreteState(
        categories=np.full(m, vocab.mask_cat, dtype=np.int64),
        features=np.full((m, n_f), vocab.mask_feat, dtype=np.int64),
        edges=np.full(m * (m - 1) // 2, EDGE_MASK, dtype=np.int64),
    )


def aligned_target_scene_arrays(
    source: Scene, target: Scene, catalog: ObjectCatalog
) -> tuple[DiscreteState, np.ndarray, np.ndarray]:
    """Target graph state, layout rows, and real-row mask aligned to source slots."""
    vocab = VocabSpec.from_catalog(catalog)
    m = source.max_nodes
    source_ids = [o.id for o in source.objects]
    by_id = {o.id: o for o in target.objects}
    slots: list = [None] * m
    for i, oid in enumerate(source_ids):
        if oid in by_id:
            slots[i] = by_id.pop(oid)
    leftovers = [o for o in target.objects if o.id in by_id]
    free = [i for i in range(m) if slots[i] is None]
    if len(leftovers) > len(free):
        raise ValueError("target has more objects than free slots")
    for obj, slot in zip(leftovers, free):
        slots[slot] = obj

    import math

    cats = np.full(m, vocab.empty_cat, dtype=np.int64)
    feats = np.full((m, catalog.n_f), vocab.empty_feat, dtype=np.int64)
    layout = np.zeros((m, 8), dtype=np.float64)
    mask = np.zeros(m, dtype=bool)
    for i, obj in enumerate(slots):
        if obj is None:
            continue
        cats[i] = obj.category
        feats[i] = obj.feature_indices
        layout[i, 0:3] = obj.position
        layout[i, 3:6] = obj.half_extents
        layout[i, 6] = math.cos(obj.yaw)
        layout[i, 7] = math.sin(obj.yaw)
        mask[i] = True

    from ..relations import classify_relation

    edges = np.full(m * (m - 1) // 2, int(SpatialRelation.NONE), dtype=np.int64)
    for slot_idx, (i, j) in enumerate(edge_pairs(m)):
        if mask[i] and mask[j]:
            edges[slot_idx] = int(classify_relation(slots[i], slots[j]))
    return DiscreteState(cats, feats, edges), layout, mask


def source_scene_arrays(
    scene: Scene, catalog: ObjectCatalog
) -> tuple[DiscreteState, np.ndarray, np.ndarray]:
    """Source graph state, layout matrix, and real mask (suffix padding)."""
    vocab = VocabSpec.from_catalog(catalog)
    graph = extract_scene_graph(scene, catalog)
    state = graph_to_state(graph, vocab)
    mask = np.array(graph.node_mask, dtype=bool)
    return state, layout_matrix(scene), mask
