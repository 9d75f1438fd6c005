"""Phase 2: conditional photo-to-mask translation."""

from .checkpoint import load_checkpoint, save_checkpoint
from .config import GanConfig
from .losses import gan_loss
from .networks import (PatchDiscriminator, UnetGenerator, build_discriminator,
                       build_generator, discriminator_grid_shape, infer)
from .train import TrainState, evaluate_l1, init_train_state, train, train_step

__all__ = [
    "GanConfig", "TrainState", "UnetGenerator", "PatchDiscriminator",
    "build_generator", "build_discriminator", "discriminator_grid_shape",
    "gan_loss", "train_step", "train", "infer", "evaluate_l1",
    "init_train_state", "save_checkpoint", "load_checkpoint",
]
