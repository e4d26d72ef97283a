"""Conditional graph/layout diffusion editors (toy scale, pure numpy)."""

from .model import ModelConfig, forward, backward, init_params
from .losses import loss_graph, loss_layout
from .sampling import (
    denoise_graph,
    denoise_layout,
    edit_with_diffusion,
    sample_target_graph,
    sample_target_layout,
)
from .schedule import (
    AbsorbingSchedule,
    NoiseSchedule,
    discrete_posterior,
    linear_schedule,
    q_sample_discrete,
    q_sample_layout,
    q_sample_tokens,
)
from .state import DiscreteState, VocabSpec
from .text import text_features
from .training import TrainConfig, Trainer, load_checkpoint, save_checkpoint, train

__all__ = [
    "AbsorbingSchedule",
    "DiscreteState",
    "ModelConfig",
    "NoiseSchedule",
    "TrainConfig",
    "Trainer",
    "VocabSpec",
    "backward",
    "denoise_graph",
    "denoise_layout",
    "discrete_posterior",
    "edit_with_diffusion",
    "forward",
    "init_params",
    "linear_schedule",
    "load_checkpoint",
    "loss_graph",
    "loss_layout",
    "q_sample_discrete",
    "q_sample_layout",
    "q_sample_tokens",
    "sample_target_graph",
    "sample_target_layout",
    "save_checkpoint",
    "text_features",
    "train",
]
