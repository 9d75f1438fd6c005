"""PNG I/O and pixel conventions.

In memory a photo is a float32 H x W x 3 array with values in [0, 1] and a
mask is a bool H x W array. On disk photos are 8-bit RGB PNGs and masks are
8-bit grayscale PNGs holding only {0, 255}.
"""

from __future__ import annotations

import hashlib
import io
import os
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ValidationError

# BT.601 luma weights, used everywhere a grayscale view of RGB is needed.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float64)


def luminance(image: np.ndarray) -> np.ndarray:
    """Grayscale view of an image: RGB is reduced with BT.601 weights."""
    if image.ndim == 2:
        return np.asarray(image, dtype=np.float32)
    if image.ndim == 3 and image.shape[2] == 3:
        return (image.astype(np.float64) @ LUMA_WEIGHTS).astype(np.float32)
    raise ValidationError(f"expected HxW or HxWx3 image, got shape {image.shape}")


def to_rgb(image: np.ndarray) -> np.ndarray:
    """Replicate a grayscale image to 3 channels; RGB passes through."""
    if image.ndim == 2:
        return np.repeat(image.astype(np.float32)[:, :, None], 3, axis=2)
    if image.ndim == 3 and image.shape[2] == 3:
        return image.astype(np.float32)
    raise ValidationError(f"expected HxW or HxWx3 image, got shape {image.shape}")


def photo_to_bytes(photo: np.ndarray) -> bytes:
    arr = np.clip(np.asarray(photo, dtype=np.float32), 0.0, 1.0)
    u8 = np.round(arr * 255.0).astype(np.uint8)
    if u8.ndim == 2:
        img = Image.fromarray(u8, mode="L")
    else:
        img = Image.fromarray(u8, mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def mask_to_bytes(mask: np.ndarray) -> bytes:
    u8 = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(u8, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def bytes_to_photo(data: bytes) -> np.ndarray:
    """Decode image bytes to a float32 RGB array in [0, 1]."""
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ValidationError(f"undecodable image: {exc}") from exc
    arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return arr


def bytes_to_mask(data: bytes) -> np.ndarray:
    """Decode image bytes to a bool mask (luminance >= 0.5)."""
    return luminance(bytes_to_photo(data)) >= 0.5


def save_photo(path: str | os.PathLike, photo: np.ndarray) -> None:
    _atomic_write(Path(path), photo_to_bytes(photo))


def save_mask(path: str | os.PathLike, mask: np.ndarray) -> None:
    _atomic_write(Path(path), mask_to_bytes(mask))


def load_photo(path: str | os.PathLike) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"image file not found: {p}")
    return bytes_to_photo(p.read_bytes())


def load_mask(path: str | os.PathLike) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"mask file not found: {p}")
    return bytes_to_mask(p.read_bytes())


def png_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _atomic_write(path: Path, data: bytes) -> None:
    """Write-then-rename so a crash never leaves a half-written file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)
