"""Pipeline orchestration: persistent sessions behind an HTTP JSON API."""

from .app import create_app
from .overlay import OverlaySpec, contour_pixels, render_overlay
from .sessions import (GROUND_TRUTH, INPUT_PHOTO, PHASE2_MASK, SESSION_STATES,
                       STANDARDIZED, Iteration, RefinementSession, SessionStore,
                       iteration_file)

__all__ = [
    "create_app", "SessionStore", "RefinementSession", "Iteration",
    "OverlaySpec", "render_overlay", "contour_pixels", "SESSION_STATES",
    "INPUT_PHOTO", "GROUND_TRUTH", "STANDARDIZED", "PHASE2_MASK",
    "iteration_file",
]
