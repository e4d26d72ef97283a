"""Diffusion schedules and forward/posterior kernels.

Two independent processes share the timestep axis:

* layout rows follow a Gaussian DDPM with a linear beta schedule, and
* discrete graph tokens follow an absorbing kernel that replaces a token
  with a MASK symbol with probability 1 - alpha_bar_t.

The absorbing kernel cannot live in the Gaussian schedule type: reaching
all-MASK at t = T requires beta_T = 1, outside the (0, 1) betas the Gaussian
schedule guarantees, so it gets its own class with alpha_bar stored directly.

Vocabulary convention for every discrete token family: real values are
0..K-1 and the MASK id equals K (the number of real values).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class NoiseSchedule:
    """Gaussian DDPM schedule for the layout process."""

    timesteps: int
    betas: np.ndarray
    alphas: np.ndarray = field(init=False)
    alpha_cumprod: np.ndarray = field(init=False)

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        if betas.shape != (self.timesteps,):
            raise ValueError("betas must have length T")
        if not np.all((betas > 0.0) & (betas < 1.0)):
            raise ValueError("betas must lie in (0, 1)")
        alphas = 1.0 - betas
        cumprod = np.cumprod(alphas)
        if not np.all(np.diff(cumprod) < 0.0):
            raise ValueError("alpha_cumprod must be strictly decreasing")
        if cumprod[0] < 0.99:
            raise ValueError("alpha_cumprod[0] must stay close to 1")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "alpha_cumprod", cumprod)

    def alpha_bar(self, t) -> np.ndarray:
        """Cumulative alpha at step t (t in 1..T; alpha_bar(0) = 1)."""
        t = np.asarray(t)
        out = np.where(t > 0, self.alpha_cumprod[np.maximum(t, 1) - 1], 1.0)
        return out


def linear_schedule(timesteps: int = 100, beta_start: float = 1e-3, beta_end: float = 0.1) -> NoiseSchedule:
    """Linear betas tuned so alpha_bar(T) ~ 5e-3 at the desk default T=100.

    (The textbook 1e-4..0.02 ramp assumes ~1000 steps; compressed to 100 it
    leaves alpha_bar(T) ~ 0.36, and ancestral sampling from pure noise then
    starts far off the training distribution.)
    """
    return NoiseSchedule(timesteps, np.linspace(beta_start, beta_end, timesteps))


@dataclass(frozen=True)
class AbsorbingSchedule:
    """Absorbing-MASK schedule: alpha_bar(t) = 1 - t/T, so t = T is all MASK."""

    timesteps: int

    def alpha_bar(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        return 1.0 - t / self.timesteps


def _check_t(t, timesteps: int) -> None:
    t = np.asarray(t)
    if np.any(t < 1) or np.any(t > timesteps):
        raise ValueError(f"t must lie in [1, {timesteps}]")


def q_sample_layout(
    x0: np.ndarray,
    t,
    eps: np.ndarray,
    schedule: NoiseSchedule,
    real_mask: np.ndarray | None = None,
) -> np.ndarray:
    """Forward-noise layout rows: sqrt(ab) x0 + sqrt(1 - ab) eps.

    ``t`` may be a scalar or one value per leading batch element. Rows where
    ``real_mask`` is False are forced to zero.
    """
    _check_t(t, schedule.timesteps)
    ab = schedule.alpha_bar(t)
    ab = np.asarray(ab, dtype=np.float64)
    while ab.ndim < x0.ndim:
        ab = ab[..., None]
    x_t = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps
    if real_mask is not None:
        x_t = np.where(real_mask[..., None], x_t, 0.0)
    return x_t


def q_sample_tokens(
    tokens: np.ndarray,
    mask_id: int,
    t,
    schedule: AbsorbingSchedule,
    rng: np.random.Generator,
) -> np.ndarray:
    """Independently replace each token by MASK with probability 1 - alpha_bar(t)."""
    _check_t(t, schedule.timesteps)
    ab = np.asarray(schedule.alpha_bar(t), dtype=np.float64)
    while ab.ndim < tokens.ndim:
        ab = ab[..., None]
    keep = rng.random(tokens.shape) < ab
    return np.where(keep, tokens, mask_id)


def q_sample_discrete(x0, t, schedule: AbsorbingSchedule, rng: np.random.Generator, vocab):
    """Forward-noise a whole DiscreteState (categories, features, edges)."""
    from .state import EDGE_MASK, DiscreteState

    return DiscreteState(
        categories=q_sample_tokens(x0.categories, vocab.mask_cat, t, schedule, rng),
        features=q_sample_tokens(x0.features, vocab.mask_feat, t, schedule, rng),
        edges=q_sample_tokens(x0.edges, EDGE_MASK, t, schedule, rng),
    )


def discrete_posterior(
    x_t: np.ndarray,
    x0_logits: np.ndarray,
    t,
    schedule: AbsorbingSchedule,
) -> np.ndarray:
    """Closed-form q(x_{t-1} | x_t, x0-hat) for the absorbing kernel.

    ``x_t`` holds token ids with MASK == K where K = x0_logits.shape[-1];
    the result distributes over K + 1 values (real values then MASK last).
    Unmasked tokens yield a point mass on themselves; masked tokens unmask
    to value v with probability (ab(t-1) - ab(t)) / (1 - ab(t)) * softmax(v)
    and stay MASK otherwise.
    """
    _check_t(t, schedule.timesteps)
    x_t = np.asarray(x_t)
    k = x0_logits.shape[-1]
    if x0_logits.shape[:-1] != x_t.shape:
        raise ValueError(
            f"x0_logits leading shape {x0_logits.shape[:-1]} != tokens shape {x_t.shape}"
        )
    ab_t = np.asarray(schedule.alpha_bar(t), dtype=np.float64)
    ab_prev = np.asarray(
        schedule.alpha_bar(np.asarray(t) - 1), dtype=np.float64
    )
    while ab_t.ndim < x_t.ndim:
        ab_t = ab_t[..., None]
        ab_prev = ab_prev[..., None]
    denom = 1.0 - ab_t
    unmask_p = (ab_prev - ab_t) / denom
    stay_p = (1.0 - ab_prev) / denom

    shifted = x0_logits - x0_logits.max(axis=-1, keepdims=True)
    expd = np.exp(shifted)
    probs = expd / expd.sum(axis=-1, keepdims=True)

    out = np.zeros((*x_t.shape, k + 1), dtype=np.float64)
    masked = x_t == k
    out[..., :k] = np.where(masked[..., None], unmask_p[..., None] * probs, 0.0)
    out[..., k] = np.where(masked, stay_p, 0.0)
    point = np.eye(k + 1, dtype=np.float64)[np.where(masked, 0, x_t)]
    out = np.where(masked[..., None], out, point)
    return out
