"""Encoder-decoder generator with skips and a patch-grid discriminator.

The generator halves the spatial size at every level down to 1x1 when depth
equals log2(image_size); channel width doubles per level and is capped at
8x base. Normalization layers run on current-batch statistics
(track_running_stats off), matching the paired-translation convention of
normalizing with test-batch statistics at inference.

The discriminator sees the (photo, mask) pair as a 4-channel input and
emits an H' x W' logit grid: three stride-2 blocks plus two stride-1
blocks, all 4x4 kernels, for a 70x70 receptive field.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from ..errors import ValidationError
from .config import GanConfig


def _norm_layer(kind: str, channels: int) -> nn.Module:
    if kind == "batch":
        return nn.BatchNorm2d(channels, track_running_stats=False)
    if kind == "instance":
        return nn.InstanceNorm2d(channels)
    raise ValidationError(f"unknown norm {kind!r}")


def init_weights(module: nn.Module) -> None:
    """Gaussian(0, 0.02) conv init, the standard GAN initialization."""
    name = module.__class__.__name__
    if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d)):
        nn.init.normal_(module.weight, 0.0, 0.02)
        if module.bias is not None:
            nn.init.zeros_(module.bias)
    elif "BatchNorm" in name and getattr(module, "weight", None) is not None:
        nn.init.normal_(module.weight, 1.0, 0.02)
        nn.init.zeros_(module.bias)


class UnetBlock(nn.Module):
    """One down/up level wrapping the next-inner block."""

    def __init__(self, outer_ch: int, inner_ch: int, in_ch: int,
                 submodule: nn.Module | None, norm: str,
                 outermost: bool = False, innermost: bool = False,
                 out_ch: int | None = None):
        super().__init__()
        self.outermost = outermost
        use_bias = norm == "instance"
        downconv = nn.Conv2d(in_ch, inner_ch, 4, stride=2, padding=1,
                             bias=use_bias or outermost or innermost)
        if outermost:
            if submodule is None:  # single-level toy network
                down = [downconv]
                up = [nn.ReLU(True),
                      nn.ConvTranspose2d(inner_ch, out_ch, 4, 2, 1),
                      nn.Sigmoid()]
                model = down + up
            else:
                down = [downconv]
                up = [nn.ReLU(True),
                      nn.ConvTranspose2d(inner_ch * 2, out_ch, 4, 2, 1),
                      nn.Sigmoid()]
                model = down + [submodule] + up
        elif innermost:
            down = [nn.LeakyReLU(0.2, True), downconv]
            up = [nn.ReLU(True),
                  nn.ConvTranspose2d(inner_ch, outer_ch, 4, 2, 1, bias=use_bias),
                  _norm_layer(norm, outer_ch)]
            model = down + up
        else:
            down = [nn.LeakyReLU(0.2, True), downconv, _norm_layer(norm, inner_ch)]
            up = [nn.ReLU(True),
                  nn.ConvTranspose2d(inner_ch * 2, outer_ch, 4, 2, 1, bias=use_bias),
                  _norm_layer(norm, outer_ch)]
            model = down + [submodule] + up
        self.model = nn.Sequential(*model)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if self.outermost:
            return self.model(x)
        return torch.cat([x, self.model(x)], dim=1)


class UnetGenerator(nn.Module):
    def __init__(self, depth: int, base_channels: int, norm: str,
                 in_channels: int = 3, out_channels: int = 1,
                 image_size: int | None = None):
        super().__init__()
        if depth < 1:
            raise ValidationError("generator depth must be >= 1")
        self.depth = depth
        self.image_size = image_size
        chans = [min(base_channels * 2 ** i, base_channels * 8)
                 for i in range(depth)]
        if depth == 1:
            block = UnetBlock(0, chans[0], in_channels, None, norm,
                              outermost=True, out_ch=out_channels)
        else:
            block = UnetBlock(chans[depth - 2], chans[depth - 1],
                              chans[depth - 2], None, norm, innermost=True)
            for level in reversed(range(1, depth - 1)):
                block = UnetBlock(chans[level - 1], chans[level],
                                  chans[level - 1], block, norm)
            block = UnetBlock(0, chans[0], in_channels, block, norm,
                              outermost=True, out_ch=out_channels)
        self.model = block
        self.apply(init_weights)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h, w = x.shape[-2:]
        step = 2 ** self.depth
        if h % step or w % step:
            raise ValidationError(
                f"input {h}x{w} not divisible by 2^depth ({step})")
        return self.model(x)


class PatchDiscriminator(nn.Module):
    def __init__(self, base_channels: int, norm: str, in_channels: int = 4):
        super().__init__()
        b = base_channels
        layers: list[nn.Module] = [
            nn.Conv2d(in_channels, b, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, True),
        ]
        for cin, cout, stride in ((b, b * 2, 2), (b * 2, b * 4, 2),
                                  (b * 4, b * 8, 1)):
            layers += [nn.Conv2d(cin, cout, 4, stride=stride, padding=1,
                                 bias=norm == "instance"),
                       _norm_layer(norm, cout),
                       nn.LeakyReLU(0.2, True)]
        layers.append(nn.Conv2d(b * 8, 1, 4, stride=1, padding=1))
        self.model = nn.Sequential(*layers)
        self.apply(init_weights)

    def forward(self, photo: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        return self.model(torch.cat([photo, mask], dim=1))


def build_generator(config: GanConfig) -> UnetGenerator:
    config.validate()
    torch.manual_seed(config.seed)
    return UnetGenerator(config.generator_depth, config.base_channels,
                         config.norm, image_size=config.image_size)


def build_discriminator(config: GanConfig) -> PatchDiscriminator:
    config.validate()
    torch.manual_seed(config.seed + 1)
    return PatchDiscriminator(config.base_channels, config.norm)


def discriminator_grid_shape(image_size: int) -> tuple[int, int]:
    """Conv-arithmetic oracle for the logit grid: 3x (k4 s2 p1), 2x (k4 s1 p1)."""
    n = image_size
    for _ in range(3):
        n = (n + 2 * 1 - 4) // 2 + 1
    for _ in range(2):
        n = n + 2 * 1 - 4 + 1
    return n, n


def photo_to_tensor(photo: np.ndarray) -> torch.Tensor:
    arr = np.asarray(photo, dtype=np.float32)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValidationError(f"expected HxWx3 photo, got {arr.shape}")
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(2, 0, 1)))[None]


def mask_to_tensor(mask: np.ndarray) -> torch.Tensor:
    arr = np.asarray(mask, dtype=np.float32)
    if arr.ndim != 2:
        raise ValidationError(f"expected HxW mask, got {arr.shape}")
    return torch.from_numpy(arr)[None, None]


def infer(generator: UnetGenerator, photo: np.ndarray) -> np.ndarray:
    """Forward pass plus 0.5 threshold; returns an HxW bool mask.

    Reentrant: no module state is touched. Normalization layers run on
    current-batch statistics in train and eval mode alike (running stats are
    disabled), so the result does not depend on the module's mode.
    """
    x = photo_to_tensor(photo)
    size = generator.image_size
    if size is not None and (x.shape[-2] != size or x.shape[-1] != size):
        raise ValidationError(
            f"photo is {x.shape[-2]}x{x.shape[-1]}, generator expects {size}x{size}")
    with torch.no_grad():
        prob = generator(x)
    return (prob[0, 0].numpy() >= 0.5)
