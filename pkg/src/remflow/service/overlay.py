"""Contour-alignment overlay: ground truth black, generated blue, refined red.

Contours are 1-px boundary skeletons (mask minus its 4-connected erosion)
drawn on a white canvas in fixed order, so the topmost layer wins where
contours coincide.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import ValidationError

_CROSS = ndimage.generate_binary_structure(2, 1)


@dataclass
class OverlaySpec:
    ground_truth_color: tuple[int, int, int] = (0, 0, 0)
    generated_color: tuple[int, int, int] = (0, 0, 255)
    refined_color: tuple[int, int, int] = (255, 0, 0)
    background: tuple[int, int, int] = (255, 255, 255)
    thickness: int = 1

    def validate(self) -> None:
        colors = (self.ground_truth_color, self.generated_color, self.refined_color)
        if len(set(colors)) != 3:
            raise ValidationError("overlay colors must be pairwise distinct")
        if self.thickness < 1:
            raise ValidationError("thickness must be >= 1")


def contour_pixels(mask: np.ndarray, thickness: int = 1) -> np.ndarray:
    """Boundary skeleton: foreground pixels with a 4-neighbor outside."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return np.zeros_like(mask)
    boundary = mask & ~ndimage.binary_erosion(mask, structure=_CROSS,
                                              border_value=1)
    if thickness > 1:
        boundary = ndimage.binary_dilation(
            boundary, structure=_CROSS, iterations=thickness - 1)
    return boundary


def render_overlay(ground_truth: np.ndarray, generated: np.ndarray,
                   refined: np.ndarray,
                   spec: OverlaySpec | None = None) -> np.ndarray:
    """Compose the three contour layers; returns a uint8 HxWx3 image."""
    spec = spec or OverlaySpec()
    spec.validate()
    masks = [np.asarray(m, dtype=bool) for m in (ground_truth, generated, refined)]
    shape = masks[0].shape
    if any(m.shape != shape for m in masks):
        raise ValidationError(
            f"overlay masks must share a shape, got {[m.shape for m in masks]}")
    canvas = np.empty(shape + (3,), dtype=np.uint8)
    canvas[:] = spec.background
    layers = ((masks[0], spec.ground_truth_color),
              (masks[1], spec.generated_color),
              (masks[2], spec.refined_color))
    for mask, color in layers:
        canvas[contour_pixels(mask, spec.thickness)] = color
    return canvas
