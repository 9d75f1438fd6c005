"""Operator chat to structured prompt-patch translation.

Deliberately rule-based over a closed lexicon: deterministic and auditable.
Unrecognized text is a normal outcome that asks the operator to rephrase,
never a silent default action.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

ACTIONS = ("remove_noise", "close_gaps", "uniform_holes", "smooth_edges")
REGIONS = ("full", "top_left", "top_right", "bottom_left", "bottom_right", "center")


@dataclass(frozen=True)
class PromptPatch:
    action: str
    region: str = "full"


@dataclass
class ChatTurn:
    role: str                      # operator | system
    text: str
    timestamp: str = ""
    derived_prompt_patch: Optional[PromptPatch] = None


# Phrase lexicons; matching is case-insensitive substring search with longer
# phrases tried first so "make all holes uniform" never reads as smoothing.
_ACTION_PHRASES = {
    "uniform_holes": ("make all holes uniform", "holes uniform", "uniform holes",
                      "same size holes", "holes the same size", "equalize holes",
                      "equalize the holes", "regularize holes",
                      "regularize the holes", "round out the holes"),
    "remove_noise": ("remove noise", "remove the noise", "clean up noise",
                     "clean up the noise", "get rid of noise",
                     "get rid of the noise", "denoise", "despeckle",
                     "remove speckle", "remove speckles", "remove the specks",
                     "delete the noise", "clear the noise"),
    "close_gaps": ("close the gap", "close gaps", "close the gaps", "fill gap",
                   "fill gaps", "fill the gap", "fill the gaps",
                   "fill missing contour", "fill in missing", "bridge the gap",
                   "connect the contour", "connect the outline",
                   "close the contour", "close the outline",
                   "make the outline continuous"),
    "smooth_edges": ("smooth the edges", "smooth edges", "smooth out",
                     "smooth the boundary", "soften the edges",
                     "remove jagged", "fix jagged", "less jagged",
                     "clean up the edges", "straighten the edges"),
}

_REGION_PHRASES = {
    "top_right": ("top-right", "top right", "upper-right", "upper right"),
    "top_left": ("top-left", "top left", "upper-left", "upper left"),
    "bottom_right": ("bottom-right", "bottom right", "lower-right", "lower right"),
    "bottom_left": ("bottom-left", "bottom left", "lower-left", "lower left"),
    "center": ("center", "centre", "middle"),
    "full": ("everywhere", "whole image", "entire image", "all over",
             "the whole", "entire mask"),
}


def _match(text: str, phrases: dict[str, tuple[str, ...]]) -> Optional[str]:
    candidates = [(len(p), p, key) for key, ps in phrases.items() for p in ps]
    for _, phrase, key in sorted(candidates, reverse=True):
        if phrase in text:
            return key
    return None


def translate_chat(turn_text: str, session_context: dict | None = None
                   ) -> Optional[PromptPatch]:
    """Map operator text to a patch; None means clarification is needed."""
    text = " ".join(turn_text.lower().split())
    if not text:
        return None
    action = _match(text, _ACTION_PHRASES)
    if action is None:
        return None
    region = _match(text, _REGION_PHRASES) or "full"
    return PromptPatch(action=action, region=region)


_DEFECT_TEXT = {
    "remove_noise": "remove stray specks and isolated noise fragments",
    "close_gaps": "close breaks in the boundary and fill missing contour gaps",
    "uniform_holes": "keep the boundary as is",
    "smooth_edges": "smooth jagged stair-step artifacts along the boundary",
}

_REGION_TEXT = {
    "full": "full image",
    "top_left": "top-left",
    "top_right": "top-right",
    "bottom_left": "bottom-left",
    "bottom_right": "bottom-right",
    "center": "center",
}


def patch_to_params(patch: PromptPatch, material: str = "sheet metal") -> dict:
    """Template parameters for a patch; covers every placeholder."""
    hole_policy = ("make all interior holes uniform circles of equal area"
                   if patch.action == "uniform_holes"
                   else "preserve existing hole geometry")
    return {
        "material": material,
        "defects": _DEFECT_TEXT[patch.action],
        "region": _REGION_TEXT[patch.region],
        "hole_policy": hole_policy,
    }
