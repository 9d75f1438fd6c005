"""Refinement providers: image + prompt in, image out.

The provider contract is one call. The offline ``mock`` provider is always
registered and backs the whole test surface; HTTP-backed adapters for
hosted image-editing models are thin optional plug-ins configured through
``RF_PROVIDER_<ID>_URL`` / ``RF_PROVIDER_<ID>_KEY`` environment variables.
"""

from __future__ import annotations

import os
import uuid
from typing import Protocol

import httpx

from ..errors import (ProviderProtocolError, ProviderTransientError,
                      UnknownProviderError)
from ..imageio import bytes_to_mask, mask_to_bytes
from .mock import mock_refine


class RefinementProvider(Protocol):
    id: str

    def edit_image(self, image_png: bytes, prompt: str, timeout_s: float) -> bytes:
        """Return the edited image as PNG bytes."""


class MockProvider:
    """Local deterministic provider wrapping :func:`mock_refine`.

    The standardized prompt steers it minimally: a prompt that asks for
    uniform holes enables the hole fix; everything else runs the default
    close-and-despeckle pass.
    """

    id = "mock"

    def __init__(self, close_radius: int = 2, min_component_area: int = 16):
        self.close_radius = close_radius
        self.min_component_area = min_component_area

    def edit_image(self, image_png: bytes, prompt: str, timeout_s: float) -> bytes:
        mask = bytes_to_mask(image_png)
        hole_fix = "uniform" in prompt.lower()
        refined = mock_refine(mask, close_radius=self.close_radius,
                              min_component_area=self.min_component_area,
                              hole_roundness_fix=hole_fix)
        return mask_to_bytes(refined)


class HttpProvider:
    """Generic adapter for a hosted multipart image-edit endpoint.

    Request: multipart form {image: PNG bytes, prompt: UTF-8 text}.
    Response: PNG bytes. 408/429/5xx and transport errors are transient;
    anything else that violates the contract is a protocol error carrying
    the provider's response id when one is present.
    """

    def __init__(self, provider_id: str, url: str | None = None,
                 api_key: str | None = None):
        self.id = provider_id
        env = provider_id.upper().replace("-", "_")
        self.url = url or os.environ.get(f"RF_PROVIDER_{env}_URL", "")
        self.api_key = api_key or os.environ.get(f"RF_PROVIDER_{env}_KEY", "")
        if not self.url:
            raise UnknownProviderError(
                f"provider {provider_id!r} has no endpoint; "
                f"set RF_PROVIDER_{env}_URL")

    def edit_image(self, image_png: bytes, prompt: str, timeout_s: float) -> bytes:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = httpx.post(
                self.url,
                files={"image": ("mask.png", image_png, "image/png")},
                data={"prompt": prompt},
                headers=headers,
                timeout=timeout_s,
            )
        except httpx.TimeoutException as exc:
            raise ProviderTransientError(f"provider {self.id} timed out: {exc}") from exc
        except httpx.HTTPError as exc:
            raise ProviderTransientError(f"provider {self.id} transport error: {exc}") from exc

        response_id = resp.headers.get("x-request-id", uuid.uuid4().hex)
        if resp.status_code in (408, 429) or resp.status_code >= 500:
            raise ProviderTransientError(
                f"provider {self.id} returned {resp.status_code}")
        if resp.status_code != 200:
            raise ProviderProtocolError(
                f"provider {self.id} returned {resp.status_code}",
                raw_response_id=response_id)
        if not resp.content.startswith(b"\x89PNG"):
            raise ProviderProtocolError(
                f"provider {self.id} returned a non-PNG payload",
                raw_response_id=response_id)
        return resp.content


_REGISTRY: dict[str, RefinementProvider] = {}


def register_provider(provider: RefinementProvider) -> None:
    _REGISTRY[provider.id] = provider


def get_provider(provider_id: str) -> RefinementProvider:
    if provider_id in _REGISTRY:
        return _REGISTRY[provider_id]
    if provider_id == "mock":
        provider = MockProvider()
        register_provider(provider)
        return provider
    env = provider_id.upper().replace("-", "_")
    if os.environ.get(f"RF_PROVIDER_{env}_URL"):
        provider = HttpProvider(provider_id)
        register_provider(provider)
        return provider
    raise UnknownProviderError(
        f"no provider registered as {provider_id!r} and no "
        f"RF_PROVIDER_{env}_URL configured")


def clear_registry() -> None:
    _REGISTRY.clear()
