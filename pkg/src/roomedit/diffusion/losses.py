"""Training losses with analytic gradients.

Graph: cross-entropy of the x0 logits at MASKed target positions (the
standard stable surrogate for the absorbing kernel), plus an exact
variational mode computing the per-step KL between the true and predicted
reverse posteriors for verification. Layout: mean squared error between the
true and predicted noise on real rows.
"""

from __future__ import annotations

import numpy as np

from .data import TrainingSet, edges_full_batch, pair_ids_batch, upper_pairs
from .model import ModelConfig, backward, forward
from .schedule import AbsorbingSchedule, NoiseSchedule, discrete_posterior, q_sample_layout


def _softmax(x):
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax(x):
    shifted = x - x.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def make_graph_batch(
    data: dict[str, np.ndarray],
    vocab,
    m: int,
    t: np.ndarray,
    schedule: AbsorbingSchedule,
    rng: np.random.Generator,
) -> dict[str, np.ndarray]:
    """Noised model inputs for the graph denoiser from clean example rows."""
    ab = schedule.alpha_bar(t)
    cats_clean, feats_clean, edges_clean = data["cats_t"], data["feats_t"], data["edges_t"]

    keep_c = rng.random(cats_clean.shape) < ab[:, None]
    cats_noisy = np.where(keep_c, cats_clean, vocab.mask_cat)
    keep_f = rng.random(feats_clean.shape) < ab[:, None, None]
    feats_noisy = np.where(keep_f, feats_clean, vocab.mask_feat)
    keep_e = rng.random(edges_clean.shape) < ab[:, None]
    from .state import EDGE_MASK

    edges_noisy = np.where(keep_e, edges_clean, EDGE_MASK)

    edges_s_full = edges_full_batch(data["edges_s"], m)
    edges_t_full = edges_full_batch(edges_noisy, m)
    batch = {
        "cats_s": data["cats_s"],
        "feats_s": data["feats_s"],
        "cats_t": cats_noisy,
        "feats_t": feats_noisy,
        "edges_s_full": edges_s_full,
        "edges_t_full": edges_t_full,
        "pair_ids": pair_ids_batch(edges_s_full, edges_t_full),
        "pairs": upper_pairs(m),
        "text": data["text"],
        "t": t,
        "cats_clean": cats_clean,
        "feats_clean": feats_clean,
        "edges_clean": edges_clean,
        "edges_noisy": edges_noisy,
    }
    return batch


def _ce_terms(logits, clean, masked):
    """Cross-entropy contributions and logits gradient at masked positions."""
    logp = _log_softmax(logits)
    k = logits.shape[-1]
    onehot = np.eye(k)[clean]
    loss = -(logp * onehot).sum(axis=-1)
    loss = np.where(masked, loss, 0.0)
    dlogits = np.where(masked[..., None], _softmax(logits) - onehot, 0.0)
    return loss.sum(), dlogits


def loss_graph(
    data: dict[str, np.ndarray],
    params: dict[str, np.ndarray],
    config: ModelConfig,
    schedule: AbsorbingSchedule,
    rng: np.random.Generator,
    objective: str = "ce",
):
    """(loss, grads) for one batch of clean graph examples.

    Timesteps and MASK patterns are drawn from ``rng``; re-seeding gives a
    deterministic loss surface, which the finite-difference checks rely on.
    ``objective="kl"`` evaluates the exact variational term instead (no
    gradients; verification only).
    """
    b = data["cats_t"].shape[0]
    if b == 0:
        raise ValueError("empty batch")
    vocab = _vocab_from_config(config)
    m = data["cats_t"].shape[1]
    t = rng.integers(1, schedule.timesteps + 1, size=b)
    batch = make_graph_batch(data, vocab, m, t, schedule, rng)

    if objective == "kl":
        outputs, _ = forward(params, config, batch, want_cache=False)
        return _graph_kl(batch, outputs, t, schedule, vocab), None
    if objective != "ce":
        raise ValueError(f"unknown objective {objective!r}")

    outputs, cache = forward(params, config, batch, want_cache=True)
    masked_c = batch["cats_t"] == vocab.mask_cat
    masked_f = batch["feats_t"] == vocab.mask_feat
    from .state import EDGE_MASK

    masked_e = batch["edges_noisy"] == EDGE_MASK
    count = masked_c.sum() + masked_f.sum() + masked_e.sum()
    if count == 0:
        return 0.0, {k: np.zeros_like(v) for k, v in params.items()}

    loss_c, d_cat = _ce_terms(outputs["cat"], batch["cats_clean"], masked_c)
    loss_f, d_feat = _ce_terms(outputs["feat"], batch["feats_clean"], masked_f)
    loss_e, d_edge = _ce_terms(outputs["edge"], batch["edges_clean"], masked_e)
    total = (loss_c + loss_f + loss_e) / count
    d_out = {"cat": d_cat / count, "feat": d_feat / count, "edge": d_edge / count}
    grads = backward(params, config, batch, cache, d_out)
    return float(total), grads


def _vocab_from_config(config: ModelConfig):
    from .state import VocabSpec

    return VocabSpec(k_c=config.k_c, k_f=config.k_f, n_f=config.n_f)


def _kl_family(tokens_noisy, tokens_clean, logits, t, schedule):
    """Exact KL[q(x_{t-1}|x_t,x0) || p(x_{t-1}|x_t)] summed over masked tokens.

    For t == 1 the term is the reconstruction negative log-likelihood.
    """
    k = logits.shape[-1]
    true_logits = np.where(np.eye(k, dtype=bool)[tokens_clean], 0.0, -1e9)
    q = discrete_posterior(tokens_noisy, true_logits, t, schedule)
    p = discrete_posterior(tokens_noisy, logits, t, schedule)
    masked = tokens_noisy == k
    t_b = np.asarray(t)
    while t_b.ndim < tokens_noisy.ndim:
        t_b = t_b[..., None]
    safe_p = np.clip(p, 1e-30, None)
    kl = np.where(q > 0, q * (np.log(np.clip(q, 1e-30, None)) - np.log(safe_p)), 0.0).sum(-1)
    recon = -(np.log(safe_p) * q).sum(-1)
    per_token = np.where(t_b == 1, recon, kl)
    return np.where(masked, per_token, 0.0).sum(), masked.sum()


def _graph_kl(batch, outputs, t, schedule, vocab):
    loss_c, n_c = _kl_family(batch["cats_t"], batch["cats_clean"], outputs["cat"], t, schedule)
    loss_f, n_f = _kl_family(
        batch["feats_t"], batch["feats_clean"], outputs["feat"], t[:, None], schedule
    )
    loss_e, n_e = _kl_family(batch["edges_noisy"], batch["edges_clean"], outputs["edge"], t, schedule)
    count = n_c + n_f + n_e
    return float((loss_c + loss_f + loss_e) / max(count, 1))


def schedule_coefficients(t, schedule: NoiseSchedule) -> tuple[np.ndarray, np.ndarray]:
    """(c1, c2) with eps = c1 x_t - c2 x0 for the Gaussian forward process."""
    ab = np.asarray(schedule.alpha_bar(t), dtype=np.float64)
    c1 = 1.0 / np.sqrt(1.0 - ab)
    c2 = np.sqrt(ab) / np.sqrt(1.0 - ab)
    return c1, c2


def make_layout_batch(
    data: dict[str, np.ndarray],
    m: int,
    t: np.ndarray,
    eps: np.ndarray,
    schedule: NoiseSchedule,
) -> dict[str, np.ndarray]:
    lay_t_noisy = q_sample_layout(data["lay_t"], t, eps, schedule, real_mask=data["mask_t"])
    edges_s_full = edges_full_batch(data["edges_s"], m)
    edges_t_full = edges_full_batch(data["edges_t"], m)
    c1, c2 = schedule_coefficients(t, schedule)
    return {
        "cats_s": data["cats_s"],
        "feats_s": data["feats_s"],
        "cats_t": data["cats_t"],
        "feats_t": data["feats_t"],
        "edges_s_full": edges_s_full,
        "edges_t_full": edges_t_full,
        "pair_ids": pair_ids_batch(edges_s_full, edges_t_full),
        "pairs": upper_pairs(m),
        "lay_s": data["lay_s"],
        "lay_t": lay_t_noisy,
        "text": data["text"],
        "t": t,
        "c1": c1,
        "c2": c2,
    }


def snr_balanced_t_weights(schedule: NoiseSchedule) -> np.ndarray:
    """Timestep sampling weights: half uniform, half proportional to 1/(SNR+1).

    The eps-MSE at step t equals SNR(t) times the x0 error, so with uniform t
    the low-SNR (text-only) regime gets almost no gradient even though the
    conditional target is deterministic there. Mixing in inverse-SNR sampling
    trains that regime while keeping coverage of the high-SNR steps; the
    per-batch objective is still the plain eps MSE.
    """
    ab = schedule.alpha_bar(np.arange(1, schedule.timesteps + 1))
    snr = ab / (1.0 - ab)
    inv = 1.0 / (snr + 1.0)
    weights = 0.5 / schedule.timesteps + 0.5 * inv / inv.sum()
    return weights / weights.sum()


def loss_layout(
    data: dict[str, np.ndarray],
    params: dict[str, np.ndarray],
    config: ModelConfig,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
    t_weights: np.ndarray | None = None,
    lay_t_drop: float = 0.5,
):
    """(loss, grads): MSE between drawn and predicted noise on real rows.

    ``t_weights`` optionally reweights the timestep sampling distribution
    (default uniform). ``lay_t_drop`` zeroes the network's *view* of the
    noisy rows for that fraction of examples (the noise head still uses the
    true x_t), forcing the conditional source/text path to be learned
    instead of read off the teacher-forced input.
    """
    b = data["lay_t"].shape[0]
    if b == 0:
        raise ValueError("empty batch")
    m = data["lay_t"].shape[1]
    if t_weights is None:
        t = rng.integers(1, schedule.timesteps + 1, size=b)
    else:
        t = rng.choice(schedule.timesteps, size=b, p=t_weights) + 1
    eps = rng.standard_normal(data["lay_t"].shape)
    eps = np.where(data["mask_t"][..., None], eps, 0.0)
    batch = make_layout_batch(data, m, t, eps, schedule)
    if lay_t_drop > 0.0:
        keep = rng.random(b) >= lay_t_drop
        batch["lay_t_view"] = np.where(keep[:, None, None], batch["lay_t"], 0.0)
    outputs, cache = forward(params, config, batch, want_cache=True)
    mask = data["mask_t"][..., None]
    count = mask.sum() * 8
    if count == 0:
        return 0.0, {k: np.zeros_like(v) for k, v in params.items()}
    diff = np.where(mask, outputs["eps"] - eps, 0.0)
    loss = float((diff * diff).sum() / count)
    d_out = {"eps": 2.0 * diff / count}
    grads = backward(params, config, batch, cache, d_out)
    return loss, grads
