"""Phase 3: prompt-guided mask refinement through pluggable providers."""

from .chat import ACTIONS, REGIONS, ChatTurn, PromptPatch, patch_to_params, translate_chat
from .client import RefinementRequest, RefinementResult, refine, set_parallelism
from .mock import mock_refine
from .providers import (HttpProvider, MockProvider, RefinementProvider,
                        clear_registry, get_provider, register_provider)
from .templates import (ALLOWED_PLACEHOLDERS, PromptTemplate, builtin_template,
                        load_template, render_prompt, save_template)

__all__ = [
    "ChatTurn", "PromptPatch", "PromptTemplate", "RefinementProvider",
    "RefinementRequest", "RefinementResult", "MockProvider", "HttpProvider",
    "ACTIONS", "REGIONS", "ALLOWED_PLACEHOLDERS",
    "translate_chat", "patch_to_params", "render_prompt", "builtin_template",
    "load_template", "save_template", "refine", "set_parallelism",
    "mock_refine", "get_provider", "register_provider", "clear_registry",
]
