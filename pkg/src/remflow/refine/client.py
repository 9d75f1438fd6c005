"""Refinement dispatch: retries with backoff, output normalization.

Provider calls retry transient failures with exponential backoff (base 1 s,
factor 2, full jitter) up to ``max_retries`` extra attempts. Whatever a
provider returns is re-fit to the request mask's height and width and
re-binarized at 0.5 luminance, because hosted models return soft RGB
images while everything downstream needs binary masks.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import (ProviderProtocolError, ProviderTransientError,
                      ProviderUnavailableError, ValidationError)
from ..imageio import bytes_to_photo, luminance, mask_to_bytes
from ..preprocess import fit_axes
from .providers import RefinementProvider

BACKOFF_BASE_S = 1.0
BACKOFF_FACTOR = 2.0

# Global bound on concurrent provider calls across all sessions.
_parallelism = threading.Semaphore(4)


@dataclass
class RefinementRequest:
    input_mask: np.ndarray
    prompt: str
    provider_id: str
    timeout_s: float = 60.0
    max_retries: int = 2

    def validate(self) -> None:
        if np.asarray(self.input_mask).ndim != 2:
            raise ValidationError("input_mask must be HxW")
        if not self.prompt:
            raise ValidationError("prompt must be non-empty")
        if self.timeout_s <= 0:
            raise ValidationError("timeout_s must be > 0")
        if self.max_retries < 0:
            raise ValidationError("max_retries must be >= 0")


@dataclass
class RefinementResult:
    output_image: np.ndarray       # bool HxW, already re-binarized
    provider_id: str
    latency_ms: float
    attempt_count: int
    raw_response_id: str = ""
    prompt: str = ""
    extra: dict = field(default_factory=dict)


def _normalize_output(png: bytes, height: int, width: int) -> np.ndarray:
    photo = bytes_to_photo(png)
    fitted = fit_axes(photo, height, width)
    return luminance(fitted) >= 0.5


def refine(provider: RefinementProvider, request: RefinementRequest,
           sleep=time.sleep, rng: random.Random | None = None) -> RefinementResult:
    """Send the mask and prompt, with bounded retries on transient failure."""
    request.validate()
    rng = rng or random.Random()
    mask = np.asarray(request.input_mask, dtype=bool)
    payload = mask_to_bytes(mask)
    height, width = mask.shape

    start = time.monotonic()
    attempts = 0
    last_error: Exception | None = None
    while attempts <= request.max_retries:
        attempts += 1
        try:
            with _parallelism:
                out_png = provider.edit_image(payload, request.prompt,
                                              request.timeout_s)
        except ProviderTransientError as exc:
            last_error = exc
            if attempts <= request.max_retries:
                cap = BACKOFF_BASE_S * (BACKOFF_FACTOR ** (attempts - 1))
                sleep(rng.uniform(0.0, cap))
            continue
        except ProviderProtocolError:
            raise

        output = _normalize_output(out_png, height, width)
        return RefinementResult(
            output_image=output,
            provider_id=request.provider_id,
            latency_ms=(time.monotonic() - start) * 1000.0,
            attempt_count=attempts,
            prompt=request.prompt,
        )

    raise ProviderUnavailableError(
        f"provider {request.provider_id!r} failed after {attempts} attempts: "
        f"{last_error}")


def set_parallelism(limit: int) -> None:
    """Reset the global in-flight provider-call bound (default 4)."""
    global _parallelism
    if limit < 1:
        raise ValidationError("parallelism limit must be >= 1")
    _parallelism = threading.Semaphore(limit)
