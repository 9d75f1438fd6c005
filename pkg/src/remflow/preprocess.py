"""Phase 1: resolution standardization and paired augmentations.

``standardize`` center-crops or zero-pads each axis independently to a
square target and promotes grayscale to RGB. ``augment`` applies one
seed-deterministic geometric transform to photo and mask together (flip,
rotation about the image center) plus a photo-only brightness shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .imageio import to_rgb
from .synthgen import SamplePair


def fit_axes(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Center-crop / zero-pad to (height, width); odd remainders go bottom/right."""
    out = image
    for axis, target in ((0, height), (1, width)):
        size = out.shape[axis]
        if size > target:
            start = (size - target) // 2
            sl = [slice(None)] * out.ndim
            sl[axis] = slice(start, start + target)
            out = out[tuple(sl)]
        elif size < target:
            before = (target - size) // 2
            after = target - size - before
            pad = [(0, 0)] * out.ndim
            pad[axis] = (before, after)
            out = np.pad(out, pad, mode="constant", constant_values=0)
    return out


def standardize(image: np.ndarray, target: int = 1024) -> np.ndarray:
    """Square standardization to target x target RGB, values untouched."""
    if target < 1:
        raise ValidationError("target side length must be >= 1")
    img = np.asarray(image)
    if img.size == 0:
        raise ValidationError("empty image")
    if img.ndim not in (2, 3):
        raise ValidationError(f"expected HxW or HxWxC image, got shape {img.shape}")
    img = to_rgb(img.astype(np.float32))
    return fit_axes(img, target, target)


@dataclass
class AugmentPolicy:
    hflip_prob: float = 0.5
    rotation_degrees_max: float = 15.0
    brightness_delta_max: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 <= self.hflip_prob <= 1.0:
            raise ValidationError(f"hflip_prob {self.hflip_prob} outside [0, 1]")
        if self.rotation_degrees_max < 0:
            raise ValidationError("rotation_degrees_max must be >= 0")
        if not 0.0 <= self.brightness_delta_max <= 0.5:
            raise ValidationError("brightness_delta_max outside [0, 0.5]")
        if self.seed < 0:
            raise ValidationError("seed must be >= 0")


def _rotate(image: np.ndarray, degrees: float, order: int) -> np.ndarray:
    """Rotate about the pixel-grid center with zero fill.

    A positive angle rotates content clockwise in array terms: +90 degrees
    maps ``m`` to ``np.rot90(m, -1)``. ``order`` 0 = nearest (masks),
    1 = bilinear (photos).
    """
    h, w = image.shape[:2]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    theta = math.radians(degrees)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    rows, cols = np.mgrid[0:h, 0:w]
    dy, dx = rows - cy, cols - cx
    # Inverse map: where does each output pixel come from.
    src_x = cos_t * dx + sin_t * dy + cx
    src_y = -sin_t * dx + cos_t * dy + cy

    flat_shape = (h, w) if image.ndim == 2 else (h, w, image.shape[2])
    out = np.zeros(flat_shape, dtype=np.float64)

    if order == 0:
        ix = np.round(src_x).astype(np.int64)
        iy = np.round(src_y).astype(np.int64)
        ok = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
        out[ok] = image[iy[ok], ix[ok]]
        return out.astype(image.dtype)

    x0 = np.floor(src_x).astype(np.int64)
    y0 = np.floor(src_y).astype(np.int64)
    fx = src_x - x0
    fy = src_y - y0
    for oy, ox, wgt in ((0, 0, (1 - fy) * (1 - fx)), (0, 1, (1 - fy) * fx),
                        (1, 0, fy * (1 - fx)), (1, 1, fy * fx)):
        yy = y0 + oy
        xx = x0 + ox
        ok = (xx >= 0) & (xx < w) & (yy >= 0) & (yy < h)
        vals = np.zeros(flat_shape, dtype=np.float64)
        vals[ok] = image[yy[ok], xx[ok]]
        out += vals * (wgt if image.ndim == 2 else wgt[:, :, None])
    return out.astype(np.float32)


def augment(pair: SamplePair, policy: AugmentPolicy, index: int) -> SamplePair:
    """Deterministic paired augmentation; stream derived from (seed, index)."""
    policy.validate()
    if index < 0:
        raise ValidationError("index must be >= 0")
    rng = np.random.default_rng(np.random.SeedSequence([policy.seed, index]))
    flip = bool(rng.random() < policy.hflip_prob)
    angle = float(rng.uniform(-policy.rotation_degrees_max,
                              policy.rotation_degrees_max))
    delta = float(rng.uniform(-policy.brightness_delta_max,
                              policy.brightness_delta_max))

    photo = np.asarray(pair.photo, dtype=np.float32)
    mask = np.asarray(pair.mask, dtype=bool)
    if flip:
        photo = photo[:, ::-1].copy()
        mask = mask[:, ::-1].copy()
    if angle != 0.0:
        photo = _rotate(photo, angle, order=1)
        mask = _rotate(mask.astype(np.float32), angle, order=0) >= 0.5
    if delta != 0.0:
        photo = np.clip(photo + delta, 0.0, 1.0)

    return SamplePair(photo=photo, mask=mask, spec_seed=pair.spec_seed,
                      id=pair.id)
