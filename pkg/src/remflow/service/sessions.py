"""Persistent refinement sessions and their state machine.

One directory per session holding a ``session.json`` record plus PNG
artifacts; inspectable and diffable, no database. Mutations write artifact
files first and commit by atomically replacing ``session.json``, so a crash
mid-operation loses at most the in-flight iteration and never exposes a
half-written record.

State graph: created -> preprocessed -> generated -> refining -> accepted,
where refining loops on itself and regeneration is allowed until the first
refinement iteration exists.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import os
import shutil
import threading
import uuid
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import gan
from ..errors import NotFoundError, ValidationError, WrongStateError
from ..imageio import (bytes_to_photo, load_mask, load_photo, mask_to_bytes,
                       save_mask, save_photo)
from ..metrics import compute_sample_metrics
from ..preprocess import fit_axes, standardize
from ..refine import (RefinementRequest, builtin_template, get_provider,
                      patch_to_params, refine, render_prompt, translate_chat)
from ..vectorize import polyset_to_dxf, polyset_to_svg, simplify_polyset, trace_contours

SESSION_STATES = ("created", "preprocessed", "generated", "refining", "accepted")

INPUT_PHOTO = "input.png"
GROUND_TRUTH = "ground_truth.png"
STANDARDIZED = "standardized.png"
PHASE2_MASK = "phase2_mask.png"


def iteration_file(index: int) -> str:
    return f"iter_{index:03d}.png"


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


@dataclass
class Iteration:
    index: int
    prompt_text: str
    chat_turn: int | None
    output_mask: str
    input_digest: str
    output_digest: str
    provider_id: str
    timestamp: str
    metrics: dict | None = None


@dataclass
class RefinementSession:
    id: str
    state: str = "created"
    input_photo: str = INPUT_PHOTO
    ground_truth: str | None = None
    standardized: str | None = None
    phase2_mask: str | None = None
    iterations: list[Iteration] = field(default_factory=list)
    chat_log: list[dict] = field(default_factory=list)
    accepted_iteration: int | None = None
    created_at: str = ""
    updated_at: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RefinementSession":
        iters = [Iteration(**it) for it in data.get("iterations", [])]
        fields = {k: v for k, v in data.items() if k != "iterations"}
        return cls(iterations=iters, **fields)


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class SessionStore:
    """All session mutations, serialized per session by an exclusive lock."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._checkpoint_cache: dict[str, tuple[float, object]] = {}

    # -- plumbing ---------------------------------------------------------

    def _lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def session_dir(self, session_id: str) -> Path:
        return self.root / session_id

    def _session_path(self, session_id: str) -> Path:
        return self.session_dir(session_id) / "session.json"

    def _write_record(self, session: RefinementSession) -> None:
        session.updated_at = _now()
        path = self._session_path(session.id)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(session.to_dict(), indent=2))
        os.replace(tmp, path)

    def load(self, session_id: str) -> RefinementSession:
        path = self._session_path(session_id)
        if not path.is_file():
            raise NotFoundError(f"no session {session_id!r}")
        return RefinementSession.from_dict(json.loads(path.read_text()))

    def list_ids(self) -> list[str]:
        return sorted(p.parent.name for p in self.root.glob("*/session.json"))

    def artifact_path(self, session_id: str, name: str) -> Path:
        session = self.load(session_id)
        known = {session.input_photo, session.ground_truth, session.standardized,
                 session.phase2_mask} | {it.output_mask for it in session.iterations}
        if name not in known or name is None:
            raise NotFoundError(f"session {session_id!r} has no artifact {name!r}")
        path = self.session_dir(session_id) / name
        if not path.is_file():
            raise NotFoundError(f"artifact file missing: {name}")
        return path

    def _load_checkpoint(self, checkpoint: str):
        path = Path(checkpoint)
        if not path.is_file():
            raise ValidationError(f"checkpoint not found: {path}")
        key = str(path.resolve())
        mtime = path.stat().st_mtime
        cached = self._checkpoint_cache.get(key)
        if cached is not None and cached[0] == mtime:
            return cached[1]
        config, generator, _ = gan.load_checkpoint(path)
        self._checkpoint_cache[key] = (mtime, (config, generator))
        return config, generator

    # -- operations -------------------------------------------------------

    def create_session(self, photo_bytes: bytes,
                       ground_truth_bytes: bytes | None = None) -> RefinementSession:
        # Decode-validate before creating anything on disk, so a corrupt
        # upload leaves no session directory behind.
        photo = bytes_to_photo(photo_bytes)
        truth = None
        if ground_truth_bytes is not None:
            truth = bytes_to_photo(ground_truth_bytes)

        session_id = uuid.uuid4().hex[:12]
        sdir = self.session_dir(session_id)
        try:
            sdir.mkdir(parents=True)
            save_photo(sdir / INPUT_PHOTO, photo)
            session = RefinementSession(id=session_id, created_at=_now())
            if truth is not None:
                save_mask(sdir / GROUND_TRUTH,
                          truth.mean(axis=2) >= 0.5)
                session.ground_truth = GROUND_TRUTH
            self._write_record(session)
        except Exception:
            shutil.rmtree(sdir, ignore_errors=True)
            raise
        return session

    def run_generate(self, session_id: str, checkpoint: str) -> RefinementSession:
        with self._lock(session_id):
            session = self.load(session_id)
            if session.state not in ("created", "preprocessed", "generated"):
                raise WrongStateError(
                    f"generate not allowed in state {session.state!r}")
            config, generator = self._load_checkpoint(checkpoint)
            sdir = self.session_dir(session_id)

            photo = load_photo(sdir / session.input_photo)
            std = standardize(photo, config.image_size)
            save_photo(sdir / STANDARDIZED, std)
            session.standardized = STANDARDIZED
            session.state = "preprocessed"
            self._write_record(session)

            mask = gan.infer(generator, std)
            save_mask(sdir / PHASE2_MASK, mask)
            session.phase2_mask = PHASE2_MASK
            session.state = "generated"
            self._write_record(session)
            return session

    def _fitted_ground_truth(self, session: RefinementSession,
                             shape: tuple[int, int]) -> np.ndarray | None:
        if not session.ground_truth:
            return None
        gt = load_mask(self.session_dir(session.id) / session.ground_truth)
        return fit_axes(gt.astype(np.float32), shape[0], shape[1]) >= 0.5

    def run_refine(self, session_id: str, text: str | None = None,
                   template_id: str | None = None, params: dict | None = None,
                   provider_id: str = "mock"
                   ) -> tuple[RefinementSession, str | None]:
        """Returns (session, clarification); clarification set means no
        iteration was appended and the operator should rephrase."""
        with self._lock(session_id):
            session = self.load(session_id)
            if session.state not in ("generated", "refining"):
                raise WrongStateError(
                    f"refine not allowed in state {session.state!r}")

            operator_turn = None
            patch = None
            if text is not None:
                operator_turn = {"role": "operator", "text": text,
                                 "timestamp": _now(), "derived_prompt_patch": None}
                patch = translate_chat(text)
                if patch is None:
                    clarification = (
                        "I did not recognize that request. Try something like "
                        "'remove noise in the top-right corner', 'close the gaps', "
                        "'make all holes uniform' or 'smooth the edges'.")
                    session.chat_log.append(operator_turn)
                    session.chat_log.append({"role": "system", "text": clarification,
                                             "timestamp": _now(),
                                             "derived_prompt_patch": None})
                    self._write_record(session)
                    return session, clarification
                operator_turn["derived_prompt_patch"] = {"action": patch.action,
                                                         "region": patch.region}
                template = builtin_template()
                prompt = render_prompt(template, patch_to_params(patch))
            elif template_id is not None:
                template = builtin_template(template_id)
                prompt = render_prompt(template, params or {})
            else:
                raise ValidationError("refine needs chat text or template_id")

            sdir = self.session_dir(session_id)
            if session.iterations:
                input_name = session.iterations[-1].output_mask
            else:
                input_name = session.phase2_mask
            input_path = sdir / input_name
            input_mask = load_mask(input_path)
            input_digest = _digest(input_path)

            provider = get_provider(provider_id)
            request = RefinementRequest(input_mask=input_mask, prompt=prompt,
                                        provider_id=provider_id)
            try:
                result = refine(provider, request)
            except Exception as exc:
                if operator_turn is not None:
                    session.chat_log.append(operator_turn)
                session.chat_log.append({"role": "system",
                                         "text": f"refinement failed: {exc}",
                                         "timestamp": _now(),
                                         "derived_prompt_patch": None})
                self._write_record(session)
                raise

            index = len(session.iterations)
            out_name = iteration_file(index)
            save_mask(sdir / out_name, result.output_image)

            metrics_row = None
            truth = self._fitted_ground_truth(session, result.output_image.shape)
            if truth is not None and truth.any() and result.output_image.any():
                metrics_row = compute_sample_metrics(result.output_image, truth)

            chat_turn_idx = None
            if operator_turn is not None:
                session.chat_log.append(operator_turn)
                chat_turn_idx = len(session.chat_log) - 1
                session.chat_log.append({
                    "role": "system",
                    "text": f"applied {patch.action} on {patch.region} "
                            f"(iteration {index})",
                    "timestamp": _now(), "derived_prompt_patch": None})

            session.iterations.append(Iteration(
                index=index, prompt_text=prompt, chat_turn=chat_turn_idx,
                output_mask=out_name, input_digest=input_digest,
                output_digest=_digest(sdir / out_name),
                provider_id=provider_id, timestamp=_now(),
                metrics=metrics_row))
            session.state = "refining"
            self._write_record(session)
            return session, None

    def accept_iteration(self, session_id: str, index: int) -> RefinementSession:
        with self._lock(session_id):
            session = self.load(session_id)
            if session.state != "refining":
                raise WrongStateError(
                    f"accept not allowed in state {session.state!r}")
            if not 0 <= index < len(session.iterations):
                raise ValidationError(
                    f"iteration {index} does not exist "
                    f"({len(session.iterations)} present)")
            session.accepted_iteration = index
            session.state = "accepted"
            self._write_record(session)
            return session

    def export_session(self, session_id: str, fmt: str,
                       simplify_epsilon: float = 1.0,
                       px_per_unit: float = 1.0) -> bytes:
        session = self.load(session_id)
        if session.state != "accepted":
            raise WrongStateError(
                f"export requires an accepted session, state is {session.state!r}")
        name = session.iterations[session.accepted_iteration].output_mask
        mask = load_mask(self.session_dir(session_id) / name)
        polyset = simplify_polyset(trace_contours(mask), simplify_epsilon)
        if fmt == "svg":
            return polyset_to_svg(polyset, px_per_unit).encode()
        if fmt == "dxf":
            return polyset_to_dxf(polyset, px_per_unit).encode()
        raise ValidationError(f"unknown export format {fmt!r} (svg or dxf)")
