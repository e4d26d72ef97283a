"""Ancestral samplers and the end-to-end diffusion edit pipeline.

The graph sampler walks the absorbing chain backwards from all-MASK; the
layout sampler runs standard DDPM ancestral steps from Gaussian noise and
renormalizes the rotation columns at the end. Both accept an optional
"oracle" denoiser in place of trained parameters, which the tests use to
verify the samplers independently of training.
"""

from __future__ import annotations

import math
from dataclasses import replace as dc_replace

import numpy as np

from ..catalog import ObjectCatalog
from ..scene import Scene, SceneGraph, SceneObject, compact_graph
from .data import edges_full_batch, pair_ids_batch, upper_pairs
from .model import ModelConfig, forward
from .schedule import AbsorbingSchedule, NoiseSchedule, discrete_posterior
from .state import (
    EDGE_MASK,
    DiscreteState,
    VocabSpec,
    all_mask_state,
    graph_to_state,
    source_scene_arrays,
    state_to_graph,
)
from .text import text_features


def _sample_categorical(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorized draw from categorical distributions along the last axis."""
    cum = probs.cumsum(axis=-1)
    cum[..., -1] = 1.0
    u = rng.random(probs.shape[:-1])[..., None]
    return (u > cum).sum(axis=-1)


def sample_graph_tokens(
    denoise,
    m: int,
    batch_size: int,
    vocab: VocabSpec,
    schedule: AbsorbingSchedule,
    rng: np.random.Generator,
):
    """Reverse the absorbing chain: (cats, feats, edges) token arrays, no MASK.

    ``denoise(cats, feats, edges, t)`` must return logits dicts for the
    batched noisy state at scalar timestep t.
    """
    e = m * (m - 1) // 2
    cats = np.full((batch_size, m), vocab.mask_cat, dtype=np.int64)
    feats = np.full((batch_size, m, vocab.n_f), vocab.mask_feat, dtype=np.int64)
    edges = np.full((batch_size, e), EDGE_MASK, dtype=np.int64)
    for t in range(schedule.timesteps, 0, -1):
        outputs = denoise(cats, feats, edges, t)
        post_c = discrete_posterior(cats, outputs["cat"], t, schedule)
        post_f = discrete_posterior(feats, outputs["feat"], t, schedule)
        post_e = discrete_posterior(edges, outputs["edge"], t, schedule)
        cats = _sample_categorical(post_c, rng)
        feats = _sample_categorical(post_f, rng)
        edges = _sample_categorical(post_e, rng)
    return cats, feats, edges


def make_graph_denoiser(
    params: dict[str, np.ndarray],
    config: ModelConfig,
    source: DiscreteState,
    text: np.ndarray,
    batch_size: int,
):
    """Model-backed denoiser closure over a fixed source graph and command."""
    m = source.m
    cats_s = np.broadcast_to(source.categories, (batch_size, m)).copy()
    feats_s = np.broadcast_to(source.features, (batch_size, m, config.n_f)).copy()
    edges_s_full = edges_full_batch(
        np.broadcast_to(source.edges, (batch_size, source.edges.shape[0])).copy(), m
    )
    text_b = np.broadcast_to(text, (batch_size, *text.shape)).copy()
    pairs = upper_pairs(m)

    def denoise(cats, feats, edges, t):
        edges_t_full = edges_full_batch(edges, m)
        batch = {
            "cats_s": cats_s,
            "feats_s": feats_s,
            "cats_t": cats,
            "feats_t": feats,
            "edges_s_full": edges_s_full,
            "edges_t_full": edges_t_full,
            "pair_ids": pair_ids_batch(edges_s_full, edges_t_full),
            "pairs": pairs,
            "text": text_b,
            "t": np.full(cats.shape[0], t, dtype=np.int64),
        }
        outputs, _ = forward(params, config, batch, want_cache=False)
        return outputs

    return denoise


def denoise_graph(
    x_t: DiscreteState,
    source: DiscreteState,
    text: np.ndarray,
    t: int,
    params: dict[str, np.ndarray],
    config: ModelConfig,
) -> dict[str, np.ndarray]:
    """Single-instance graph denoiser: x0 logits for one noisy state.

    Returns {"cat": (M, K_c+1), "feat": (M, n_f, K_f+1), "edge": (E, 11)}.
    """
    denoise = make_graph_denoiser(params, config, source, text, batch_size=1)
    outputs = denoise(x_t.categories[None], x_t.features[None], x_t.edges[None], t)
    return {key: value[0] for key, value in outputs.items()}


def denoise_layout(
    lay_t: np.ndarray,
    target_graph: SceneGraph,
    source_graph: SceneGraph,
    lay_s: np.ndarray,
    text: np.ndarray,
    t: int,
    params: dict[str, np.ndarray],
    config: ModelConfig,
    schedule: NoiseSchedule,
) -> np.ndarray:
    """Single-instance layout denoiser: predicted noise (M, 8) for one state."""
    vocab = VocabSpec(k_c=config.k_c, k_f=config.k_f, n_f=config.n_f)
    denoise = make_layout_denoiser(
        params, config,
        graph_to_state(source_graph, vocab), graph_to_state(target_graph, vocab),
        lay_s, text, 1, schedule,
    )
    return denoise(lay_t[None], t)[0]


def sample_target_graph(
    source: SceneGraph,
    text: np.ndarray,
    params: dict[str, np.ndarray],
    config: ModelConfig,
    schedule: AbsorbingSchedule,
    rng: np.random.Generator,
    vocab: VocabSpec | None = None,
) -> SceneGraph:
    """Sample one target graph conditioned on a source graph and command text."""
    vocab = vocab or VocabSpec(k_c=config.k_c, k_f=config.k_f, n_f=config.n_f)
    state = graph_to_state(source, vocab)
    denoise = make_graph_denoiser(params, config, state, text, batch_size=1)
    cats, feats, edges = sample_graph_tokens(denoise, source.m, 1, vocab, schedule, rng)
    return state_to_graph(DiscreteState(cats[0], feats[0], edges[0]), vocab)


def ddpm_step(x_t, eps_hat, t, schedule: NoiseSchedule, noise):
    """One reverse DDPM step via the posterior of the implied x0 estimate."""
    ab_t = float(schedule.alpha_bar(t))
    ab_prev = float(schedule.alpha_bar(t - 1))
    alpha_t = schedule.alphas[t - 1]
    beta_t = schedule.betas[t - 1]
    x0_hat = (x_t - math.sqrt(1.0 - ab_t) * eps_hat) / math.sqrt(ab_t)
    mean = (
        math.sqrt(ab_prev) * beta_t / (1.0 - ab_t) * x0_hat
        + math.sqrt(alpha_t) * (1.0 - ab_prev) / (1.0 - ab_t) * x_t
    )
    if t == 1:
        return mean
    var = (1.0 - ab_prev) / (1.0 - ab_t) * beta_t
    return mean + math.sqrt(var) * noise


def sample_layout_rows(
    denoise,
    m: int,
    batch_size: int,
    real_mask: np.ndarray,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
    want_trace: bool = False,
):
    """Reverse the layout chain; returns (rows, trace) with trace length T+1."""
    x = rng.standard_normal((batch_size, m, 8))
    x = np.where(real_mask[..., None], x, 0.0)
    trace = [x.copy()] if want_trace else None
    for t in range(schedule.timesteps, 0, -1):
        eps_hat = denoise(x, t)
        noise = rng.standard_normal(x.shape) if t > 1 else np.zeros_like(x)
        x = ddpm_step(x, eps_hat, t, schedule, noise)
        x = np.where(real_mask[..., None], x, 0.0)
        if want_trace:
            trace.append(x.copy())
    # Project rotation columns back to the unit circle on real rows.
    rot = x[..., 6:8]
    norm = np.linalg.norm(rot, axis=-1, keepdims=True)
    safe = np.where(norm > 1e-12, norm, 1.0)
    unit = rot / safe
    unit = np.where(norm > 1e-12, unit, np.broadcast_to([1.0, 0.0], rot.shape))
    x = x.copy()
    x[..., 6:8] = np.where(real_mask[..., None], unit, 0.0)
    if want_trace:
        trace[-1] = x.copy()
    return x, trace


def make_layout_denoiser(
    params: dict[str, np.ndarray],
    config: ModelConfig,
    source: DiscreteState,
    target: DiscreteState,
    lay_s: np.ndarray,
    text: np.ndarray,
    batch_size: int,
    schedule: NoiseSchedule,
):
    m = source.m
    cats_s = np.broadcast_to(source.categories, (batch_size, m)).copy()
    feats_s = np.broadcast_to(source.features, (batch_size, m, config.n_f)).copy()
    edges_s_full = edges_full_batch(
        np.broadcast_to(source.edges, (batch_size, source.edges.shape[0])).copy(), m
    )
    cats_t = np.broadcast_to(target.categories, (batch_size, m)).copy()
    feats_t = np.broadcast_to(target.features, (batch_size, m, config.n_f)).copy()
    edges_t_full = edges_full_batch(
        np.broadcast_to(target.edges, (batch_size, target.edges.shape[0])).copy(), m
    )
    pair_ids = pair_ids_batch(edges_s_full, edges_t_full)
    text_b = np.broadcast_to(text, (batch_size, *text.shape)).copy()
    lay_s_b = np.broadcast_to(lay_s, (batch_size, m, 8)).copy()
    pairs = upper_pairs(m)

    def denoise(lay_t, t):
        from .losses import schedule_coefficients

        b = lay_t.shape[0]
        c1, c2 = schedule_coefficients(t, schedule)
        batch = {
            "cats_s": cats_s,
            "feats_s": feats_s,
            "cats_t": cats_t,
            "feats_t": feats_t,
            "edges_s_full": edges_s_full,
            "edges_t_full": edges_t_full,
            "pair_ids": pair_ids,
            "pairs": pairs,
            "lay_s": lay_s_b,
            "lay_t": lay_t,
            "text": text_b,
            "t": np.full(b, t, dtype=np.int64),
            "c1": np.full(b, float(c1)),
            "c2": np.full(b, float(c2)),
        }
        outputs, _ = forward(params, config, batch, want_cache=False)
        return outputs["eps"]

    return denoise


def sample_target_layout(
    target_graph: SceneGraph,
    source_graph: SceneGraph,
    lay_s: np.ndarray,
    text: np.ndarray,
    params: dict[str, np.ndarray],
    config: ModelConfig,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
    want_trace: bool = False,
):
    """Sample target layout rows for one pair of graphs; optional full trace."""
    vocab = VocabSpec(k_c=config.k_c, k_f=config.k_f, n_f=config.n_f)
    src_state = graph_to_state(source_graph, vocab)
    tgt_state = graph_to_state(target_graph, vocab)
    real_mask = np.array(target_graph.node_mask, dtype=bool)[None, :]
    denoise = make_layout_denoiser(
        params, config, src_state, tgt_state, lay_s, text, 1, schedule
    )
    rows, trace = sample_layout_rows(
        denoise, source_graph.m, 1, real_mask, schedule, rng, want_trace
    )
    return (rows[0], [frame[0] for frame in trace]) if want_trace else (rows[0], None)


def retrieve_prototype(catalog: ObjectCatalog, category: int, features: np.ndarray):
    """Catalog prototype of the category with the nearest feature indices."""
    candidates = catalog.prototypes_of(category)
    best, best_dist = None, None
    for proto in candidates:
        dist = sum(int(a != b) for a, b in zip(proto.feature_indices, features))
        if best_dist is None or dist < best_dist:
            best, best_dist = proto, dist
    return best


def assemble_scene(
    graph: SceneGraph,
    layout: np.ndarray,
    like: Scene,
    catalog: ObjectCatalog,
    min_extent: float = 0.02,
) -> Scene:
    """Scene from a sampled (graph, layout): retrieval plus invariant clamping."""
    lo, hi = like.room_bounds
    objects = []
    counters: dict[str, int] = {}
    for slot in range(graph.m):
        if not graph.node_mask[slot]:
            continue
        category = graph.node_categories[slot]
        proto = retrieve_prototype(catalog, category, np.asarray(graph.node_feature_indices[slot]))
        row = layout[slot]
        half = tuple(max(float(v), min_extent) for v in row[3:6])
        x = float(np.clip(row[0], lo[0], hi[0]))
        z = float(np.clip(row[2], lo[2], hi[2]))
        c, s = float(row[6]), float(row[7])
        norm = math.hypot(c, s)
        yaw = math.atan2(s / norm, c / norm) if norm > 0 else 0.0
        name = proto.category
        k = counters.get(name, 0)
        counters[name] = k + 1
        objects.append(
            SceneObject(
                id=f"{name}_{k}",
                category=category,
                caption=proto.caption,
                feature_indices=proto.feature_indices,
                position=(x, float(row[1]), z),
                half_extents=half,
                yaw=yaw,
            )
        )
    return Scene(room_type=like.room_type, room_bounds=like.room_bounds, objects=tuple(objects))


def edit_with_diffusion(
    scene: Scene,
    template_command: str,
    graph_params: dict[str, np.ndarray],
    graph_config: ModelConfig,
    layout_params: dict[str, np.ndarray],
    layout_config: ModelConfig,
    catalog: ObjectCatalog,
    rng: np.random.Generator,
    graph_schedule: AbsorbingSchedule | None = None,
    layout_schedule: NoiseSchedule | None = None,
    timesteps: int = 100,
    want_trace: bool = False,
):
    """Full learned edit: source scene + template command -> edited scene."""
    from ..scene import extract_scene_graph, layout_matrix
    from .schedule import linear_schedule

    graph_schedule = graph_schedule or AbsorbingSchedule(timesteps)
    layout_schedule = layout_schedule or linear_schedule(timesteps)
    text = text_features(template_command, graph_config.k_text, graph_config.d_t)
    source_graph = extract_scene_graph(scene, catalog)
    lay_s = layout_matrix(scene)
    target_graph = sample_target_graph(
        source_graph, text, graph_params, graph_config, graph_schedule, rng
    )
    rows, trace = sample_target_layout(
        target_graph, source_graph, lay_s, text,
        layout_params, layout_config, layout_schedule, rng, want_trace,
    )
    compact, compact_rows = compact_sampled(target_graph, rows)
    edited = assemble_scene(compact, compact_rows, scene, catalog)
    return (edited, trace) if want_trace else (edited, None)


def compact_sampled(graph: SceneGraph, rows: np.ndarray):
    """Push EMPTY slots to the tail of both the graph and its layout rows."""
    order = [i for i, real in enumerate(graph.node_mask) if real]
    compacted_rows = np.zeros_like(rows)
    for new_i, old_i in enumerate(order):
        compacted_rows[new_i] = rows[old_i]
    return compact_graph(graph), compacted_rows
