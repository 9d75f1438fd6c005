"""Adversarial training loop: one discriminator step, one generator step.

The discriminator scores the real (photo, mask) pair against the generated
pair (detached); the generator objective is its adversarial term plus the
weighted L1 distance to ground truth. Training is seed-deterministic: same
config, data, and order produce bit-identical loss traces and parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from ..errors import TrainingDivergedError, ValidationError
from ..synthgen import SamplePair
from .config import GanConfig
from .losses import gan_loss
from .networks import (PatchDiscriminator, UnetGenerator, build_discriminator,
                       build_generator, mask_to_tensor, photo_to_tensor)

LOG_HEADER = "step,d_loss,g_gan,g_l1"
_EMA = 0.98


@dataclass
class TrainState:
    generator: UnetGenerator
    discriminator: PatchDiscriminator
    opt_g: torch.optim.Optimizer
    opt_d: torch.optim.Optimizer
    config: GanConfig
    step: int = 0
    running: dict = field(default_factory=lambda: {"d_loss": 0.0, "g_gan": 0.0,
                                                   "g_l1": 0.0})


def init_train_state(config: GanConfig) -> TrainState:
    config.validate()
    if config.image_size < 32:
        # The discriminator's last normalized block collapses to 1x1 below
        # this, which batch/instance statistics cannot normalize.
        raise ValidationError("training requires image_size >= 32")
    generator = build_generator(config)
    discriminator = build_discriminator(config)
    opt_g = torch.optim.Adam(generator.parameters(), lr=config.learning_rate,
                             betas=(0.5, 0.999))
    opt_d = torch.optim.Adam(discriminator.parameters(), lr=config.learning_rate,
                             betas=(0.5, 0.999))
    return TrainState(generator, discriminator, opt_g, opt_d, config)


def _batch_tensors(batch: Sequence[SamplePair],
                   config: GanConfig) -> tuple[torch.Tensor, torch.Tensor]:
    if len(batch) < 1:
        raise ValidationError("batch must hold at least one pair")
    xs, ys = [], []
    for pair in batch:
        h, w = pair.mask.shape
        if h != config.image_size or w != config.image_size:
            raise ValidationError(
                f"pair {pair.id} is {h}x{w}, config.image_size is "
                f"{config.image_size}; standardize first")
        xs.append(photo_to_tensor(pair.photo))
        ys.append(mask_to_tensor(pair.mask))
    return torch.cat(xs), torch.cat(ys)


def _set_requires_grad(module: torch.nn.Module, flag: bool) -> None:
    for p in module.parameters():
        p.requires_grad_(flag)


def train_step(state: TrainState, batch: Sequence[SamplePair],
               config: GanConfig | None = None) -> tuple[TrainState, dict]:
    """One D update then one G update on a batch; returns finite losses."""
    cfg = config or state.config
    x, y = _batch_tensors(batch, cfg)
    G, D = state.generator, state.discriminator

    fake = G(x)

    # Discriminator: real pair up, generated pair (detached) down.
    _set_requires_grad(D, True)
    state.opt_d.zero_grad(set_to_none=True)
    d_real = gan_loss(cfg.gan_mode, D(x, y), True)
    d_fake = gan_loss(cfg.gan_mode, D(x, fake.detach()), False)
    d_loss = 0.5 * (d_real + d_fake)
    d_loss.backward()
    state.opt_d.step()

    # Generator: fool the (updated) discriminator plus weighted L1.
    _set_requires_grad(D, False)
    state.opt_g.zero_grad(set_to_none=True)
    g_gan = gan_loss(cfg.gan_mode, D(x, fake), True)
    g_l1 = torch.mean(torch.abs(fake - y))
    objective = g_gan if cfg.l1_weight == 0 else g_gan + cfg.l1_weight * g_l1
    objective.backward()
    state.opt_g.step()
    _set_requires_grad(D, True)

    losses = {"d_loss": float(d_loss.detach()),
              "g_gan": float(g_gan.detach()),
              "g_l1": float(g_l1.detach())}
    for term, value in losses.items():
        if not math.isfinite(value):
            raise TrainingDivergedError(term, value)

    state.step += 1
    for key, value in losses.items():
        prev = state.running[key]
        state.running[key] = value if state.step == 1 else \
            _EMA * prev + (1 - _EMA) * value
    return state, losses


def format_log_row(step: int, losses: dict) -> str:
    return f"{step},{losses['d_loss']!r},{losses['g_gan']!r},{losses['g_l1']!r}"


def train(pairs: Sequence[SamplePair], config: GanConfig, steps: int,
          log_path: str | Path | None = None,
          progress: Callable[[int, dict], None] | None = None) -> TrainState:
    """Run the loop for ``steps`` batches, cycling pairs in sequence order.

    The training set order is the caller's contract (hybrid datasets are
    mixed by manifest order); no shuffling happens here.
    """
    config.validate()
    if not pairs:
        raise ValidationError("training requires at least one pair")
    if steps < 0:
        raise ValidationError("steps must be >= 0")
    torch.manual_seed(config.seed)
    state = init_train_state(config)

    log_fh = None
    if log_path is not None:
        path = Path(log_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        new_file = not path.exists()
        log_fh = open(path, "a")
        if new_file:
            log_fh.write(LOG_HEADER + "\n")
    try:
        cursor = 0
        for _ in range(steps):
            batch = [pairs[(cursor + i) % len(pairs)]
                     for i in range(config.batch_size)]
            cursor = (cursor + config.batch_size) % len(pairs)
            state, losses = train_step(state, batch)
            if log_fh is not None:
                log_fh.write(format_log_row(state.step, losses) + "\n")
            if progress is not None:
                progress(state.step, losses)
    finally:
        if log_fh is not None:
            log_fh.close()
    return state


def evaluate_l1(generator: UnetGenerator, pairs: Sequence[SamplePair]) -> float:
    """Mean absolute error of the raw generator output on held-out pairs."""
    if not pairs:
        raise ValidationError("need at least one pair")
    was_training = generator.training
    generator.eval()
    total = 0.0
    try:
        with torch.no_grad():
            for pair in pairs:
                x = photo_to_tensor(pair.photo)
                y = mask_to_tensor(pair.mask)
                total += float(torch.mean(torch.abs(generator(x) - y)))
    finally:
        generator.train(was_training)
    return total / len(pairs)
