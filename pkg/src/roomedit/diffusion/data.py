"""Training-set assembly: edit pairs -> aligned token/layout tensors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..catalog import ObjectCatalog
from ..datagen import EditPair
from ..relations import SpatialRelation
from ..scene import edge_pairs
from .state import (
    EDGE_INVERSE,
    PAIR_ALIGN,
    PAIR_CROSS,
    PAIR_SELF,
    VocabSpec,
    aligned_target_scene_arrays,
    source_scene_arrays,
)
from .text import TEXT_DIM, TEXT_VECTORS, text_features


def upper_pairs(m: int) -> tuple[np.ndarray, np.ndarray]:
    pairs = edge_pairs(m)
    ii = np.array([i for i, _ in pairs], dtype=np.int64)
    jj = np.array([j for _, j in pairs], dtype=np.int64)
    return ii, jj


def edges_full_batch(edges_upper: np.ndarray, m: int) -> np.ndarray:
    """(B, M, M) directed edge matrices from upper-triangle token arrays."""
    b = edges_upper.shape[0]
    ii, jj = upper_pairs(m)
    full = np.full((b, m, m), int(SpatialRelation.NONE), dtype=np.int64)
    full[:, ii, jj] = edges_upper
    full[:, jj, ii] = EDGE_INVERSE[edges_upper]
    return full


def pair_ids_batch(edges_s_full: np.ndarray, edges_t_full: np.ndarray) -> np.ndarray:
    """(B, 2M, 2M) attention-bias ids for [source || target] token sequences."""
    b, m, _ = edges_s_full.shape
    n = 2 * m
    ids = np.full((b, n, n), PAIR_CROSS, dtype=np.int64)
    ids[:, :m, :m] = edges_s_full
    ids[:, m:, m:] = edges_t_full
    idx = np.arange(m)
    ids[:, idx, m + idx] = PAIR_ALIGN
    ids[:, m + idx, idx] = PAIR_ALIGN
    ids[:, np.arange(n), np.arange(n)] = PAIR_SELF
    return ids


@dataclass
class TrainingSet:
    """Stacked tensors for a list of edit pairs (slot-aligned targets)."""

    vocab: VocabSpec
    m: int
    cats_s: np.ndarray
    feats_s: np.ndarray
    edges_s: np.ndarray
    cats_t: np.ndarray
    feats_t: np.ndarray
    edges_t: np.ndarray
    lay_s: np.ndarray
    lay_t: np.ndarray
    mask_t: np.ndarray
    text: np.ndarray
    pair_ids: list[str]

    def __len__(self) -> int:
        return self.cats_s.shape[0]

    @classmethod
    def from_pairs(
        cls,
        pairs: list[EditPair],
        catalog: ObjectCatalog,
        k_text: int = TEXT_VECTORS,
        d_t: int = TEXT_DIM,
    ) -> "TrainingSet":
        if not pairs:
            raise ValueError("no pairs")
        vocab = VocabSpec.from_catalog(catalog)
        m = pairs[0].source.max_nodes
        rows = {k: [] for k in (
            "cats_s", "feats_s", "edges_s", "cats_t", "feats_t", "edges_t",
            "lay_s", "lay_t", "mask_t", "text",
        )}
        ids = []
        for pair in pairs:
            if pair.source.max_nodes != m:
                raise ValueError("all pairs must share a room size")
            src_state, lay_s, _ = source_scene_arrays(pair.source, catalog)
            tgt_state, lay_t, mask_t = aligned_target_scene_arrays(
                pair.source, pair.target, catalog
            )
            rows["cats_s"].append(src_state.categories)
            rows["feats_s"].append(src_state.features)
            rows["edges_s"].append(src_state.edges)
            rows["cats_t"].append(tgt_state.categories)
            rows["feats_t"].append(tgt_state.features)
            rows["edges_t"].append(tgt_state.edges)
            rows["lay_s"].append(lay_s)
            rows["lay_t"].append(lay_t)
            rows["mask_t"].append(mask_t)
            rows["text"].append(text_features(pair.template_command, k_text, d_t))
            ids.append(pair.pair_id)
        stacked = {k: np.stack(v) for k, v in rows.items()}
        return cls(vocab=vocab, m=m, pair_ids=ids, **stacked)

    def subset(self, idx) -> dict[str, np.ndarray]:
        return {
            "cats_s": self.cats_s[idx],
            "feats_s": self.feats_s[idx],
            "edges_s": self.edges_s[idx],
            "cats_t": self.cats_t[idx],
            "feats_t": self.feats_t[idx],
            "edges_t": self.edges_t[idx],
            "lay_s": self.lay_s[idx],
            "lay_t": self.lay_t[idx],
            "mask_t": self.mask_t[idx],
            "text": self.text[idx],
        }
