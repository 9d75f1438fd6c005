"""Adversarial objectives over patch logit grids."""

from __future__ import annotations

import torch
import torch.nn.functional as F

from ..errors import ValidationError


def gan_loss(mode: str, logits: torch.Tensor, is_real: bool) -> torch.Tensor:
    """Mean loss of a logit grid against an all-real or all-fake target.

    vanilla: sigmoid cross-entropy. least_squares: mean squared error of the
    raw logits against 1/0.
    """
    target = torch.ones_like(logits) if is_real else torch.zeros_like(logits)
    if mode == "vanilla":
        return F.binary_cross_entropy_with_logits(logits, target)
    if mode == "least_squares":
        return F.mse_loss(logits, target)
    raise ValidationError(f"unknown gan_mode {mode!r}")
