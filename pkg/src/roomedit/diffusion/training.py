"""Mini-batch Adam training for the graph and layout denoisers.

Single-threaded and fully seeded: the same seed reproduces the same loss
curve, and a reloaded checkpoint (params + optimizer moments + RNG state)
continues bit-identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import TrainingSet
from .losses import loss_graph, loss_layout
from .model import ModelConfig, init_params
from .schedule import AbsorbingSchedule, NoiseSchedule, linear_schedule


class DivergenceError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    kind: str = "graph"
    steps: int = 2000
    batch_size: int = 32
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    # The layout objective is SNR-weighted in t (the x0-parameterized noise
    # head makes small-t samples carry huge gradients); clipping keeps Adam's
    # second moments from blowing up on those spikes.
    grad_clip: float = 1.0
    # Layout only: "snr_balanced" samples training timesteps so the
    # low-SNR end of the chain still receives gradient (see losses).
    t_sampling: str = "snr_balanced"
    timesteps: int = 100
    seed: int = 0
    d: int = 64
    n_layers: int = 2
    n_heads: int = 4
    log_every: int = 50

    def model_config(self, dataset: TrainingSet) -> ModelConfig:
        return ModelConfig(
            kind=self.kind,
            n_f=dataset.vocab.n_f,
            k_c=dataset.vocab.k_c,
            k_f=dataset.vocab.k_f,
            d=self.d,
            n_layers=self.n_layers,
            n_heads=self.n_heads,
            d_t=dataset.text.shape[2],
            k_text=dataset.text.shape[1],
        )


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def clip_gradients(grads, max_norm: float) -> float:
    total = 0.0
    for g in grads.values():
        total += float((g * g).sum())
    norm = total**0.5
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def adam_update(params, grads, state: AdamState, config: TrainConfig) -> None:
    state.step += 1
    b1, b2 = config.beta1, config.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    for key, g in grads.items():
        state.m[key] = b1 * state.m[key] + (1.0 - b1) * g
        state.v[key] = b2 * state.v[key] + (1.0 - b2) * g * g
        m_hat = state.m[key] / c1
        v_hat = state.v[key] / c2
        params[key] -= config.lr * m_hat / (np.sqrt(v_hat) + config.adam_eps)


@dataclass
class Trainer:
    dataset: TrainingSet
    config: TrainConfig
    model_config: ModelConfig = field(init=False)
    params: dict = field(init=False)
    opt: AdamState = field(init=False)
    rng: np.random.Generator = field(init=False)
    schedule: object = field(init=False)
    loss_curve: list = field(default_factory=list)

    def __post_init__(self):
        self.model_config = self.config.model_config(self.dataset)
        self.params = init_params(self.model_config, np.random.default_rng(self.config.seed))
        self.opt = AdamState.zeros_like(self.params)
        self.rng = np.random.default_rng((self.config.seed, 0xD1FF))
        if self.config.kind == "graph":
            self.schedule = AbsorbingSchedule(self.config.timesteps)
            self.t_weights = None
        else:
            self.schedule = linear_schedule(self.config.timesteps)
            from .losses import snr_balanced_t_weights

            self.t_weights = (
                snr_balanced_t_weights(self.schedule)
                if self.config.t_sampling == "snr_balanced"
                else None
            )

    def _loss(self, data):
        if self.config.kind == "graph":
            return loss_graph(data, self.params, self.model_config, self.schedule, self.rng)
        return loss_layout(
            data, self.params, self.model_config, self.schedule, self.rng,
            t_weights=self.t_weights,
        )

    def step(self) -> float:
        idx = self.rng.integers(0, len(self.dataset), size=self.config.batch_size)
        data = self.dataset.subset(idx)
        loss, grads = self._loss(data)
        if not np.isfinite(loss):
            raise DivergenceError(
                f"non-finite loss {loss} at step {self.opt.step + 1}; aborting"
            )
        clip_gradients(grads, self.config.grad_clip)
        adam_update(self.params, grads, self.opt, self.config)
        self.loss_curve.append((self.opt.step, loss))
        return loss

    def run(self, steps: int | None = None, progress=None) -> None:
        total = self.config.steps if steps is None else steps
        for k in range(total):
            loss = self.step()
            if progress is not None and (k + 1) % self.config.log_every == 0:
                progress(self.opt.step, loss)


def train(dataset: TrainingSet, config: TrainConfig, progress=None) -> Trainer:
    """Train a denoiser from scratch; returns the trainer (params + curve)."""
    trainer = Trainer(dataset, config)
    trainer.run(progress=progress)
    return trainer


def write_loss_curve(path, curve) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,loss\n")
        for step, loss in curve:
            fh.write(f"{step},{loss!r}\n")


def save_checkpoint(path, trainer: Trainer) -> None:
    """Self-describing checkpoint: params, Adam moments, RNG state, configs, schedule."""
    if isinstance(trainer.schedule, AbsorbingSchedule):
        schedule_doc = {"type": "absorbing", "timesteps": trainer.schedule.timesteps}
    else:
        schedule_doc = {
            "type": "gaussian",
            "timesteps": trainer.schedule.timesteps,
            "betas": trainer.schedule.betas.tolist(),
        }
    meta = {
        "schedule": schedule_doc,
        "model_config": trainer.model_config.to_doc(),
        "train_config": {
            "kind": trainer.config.kind,
            "steps": trainer.config.steps,
            "batch_size": trainer.config.batch_size,
            "lr": trainer.config.lr,
            "beta1": trainer.config.beta1,
            "beta2": trainer.config.beta2,
            "adam_eps": trainer.config.adam_eps,
            "grad_clip": trainer.config.grad_clip,
            "t_sampling": trainer.config.t_sampling,
            "timesteps": trainer.config.timesteps,
            "seed": trainer.config.seed,
            "d": trainer.config.d,
            "n_layers": trainer.config.n_layers,
            "n_heads": trainer.config.n_heads,
            "log_every": trainer.config.log_every,
        },
        "adam_step": trainer.opt.step,
        "rng_state": trainer.rng.bit_generator.state,
        "loss_curve": trainer.loss_curve,
    }
    arrays = {f"param/{k}": v for k, v in trainer.params.items()}
    arrays.update({f"adam_m/{k}": v for k, v in trainer.opt.m.items()})
    arrays.update({f"adam_v/{k}": v for k, v in trainer.opt.v.items()})
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    np.savez(path, **arrays)


def schedule_from_doc(doc: dict):
    if doc["type"] == "absorbing":
        return AbsorbingSchedule(doc["timesteps"])
    return NoiseSchedule(doc["timesteps"], np.asarray(doc["betas"]))


def load_checkpoint(path, dataset: TrainingSet | None = None):
    """Rebuild a Trainer (when a dataset is given) or (params, model_config, meta)."""
    with np.load(path) as blob:
        meta = json.loads(bytes(blob["meta"]).decode("utf-8"))
        params = {
            k[len("param/"):]: blob[k] for k in blob.files if k.startswith("param/")
        }
        adam_m = {k[len("adam_m/"):]: blob[k] for k in blob.files if k.startswith("adam_m/")}
        adam_v = {k[len("adam_v/"):]: blob[k] for k in blob.files if k.startswith("adam_v/")}
    model_config = ModelConfig.from_doc(meta["model_config"])
    if dataset is None:
        return params, model_config, meta
    config = TrainConfig(**meta["train_config"])
    trainer = Trainer(dataset, config)
    trainer.params = params
    trainer.opt = AdamState(m=adam_m, v=adam_v, step=meta["adam_step"])
    trainer.rng.bit_generator.state = meta["rng_state"]
    trainer.loss_curve = [tuple(entry) for entry in meta["loss_curve"]]
    return trainer
