"""Versioned prompt templates with named placeholders.

Templates are configuration, not code: they ship as JSON data files
({"id", "version", "body"}) and render by plain substitution. The
placeholder vocabulary is closed so chat-derived patches can always fill a
template completely.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..errors import MissingPlaceholderError, ValidationError

ALLOWED_PLACEHOLDERS = ("material", "defects", "region", "hole_policy")


@dataclass
class PromptTemplate:
    id: str
    body: str
    version: int = 1

    def placeholders(self) -> list[str]:
        names = []
        for _, fieldname, _, _ in string.Formatter().parse(self.body):
            if fieldname is not None and fieldname not in names:
                names.append(fieldname)
        return names

    def validate(self) -> None:
        if not self.id:
            raise ValidationError("template id must be non-empty")
        for name in self.placeholders():
            if name == "":
                raise ValidationError("positional placeholders are not allowed")
            if name not in ALLOWED_PLACEHOLDERS:
                raise ValidationError(
                    f"template {self.id!r} uses undeclared placeholder {name!r}; "
                    f"allowed: {ALLOWED_PLACEHOLDERS}")


def render_prompt(template: PromptTemplate, params: dict[str, str]) -> str:
    """Deterministic substitution; raises naming any missing placeholder."""
    template.validate()
    for name in template.placeholders():
        if name not in params:
            raise MissingPlaceholderError(name)
    return template.body.format(**{k: str(v) for k, v in params.items()})


def load_template(path: str | Path) -> PromptTemplate:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"template file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"bad template JSON {p}: {exc}") from exc
    try:
        tpl = PromptTemplate(id=data["id"], body=data["body"],
                             version=int(data.get("version", 1)))
    except KeyError as exc:
        raise ValidationError(f"template {p} missing key {exc}") from exc
    tpl.validate()
    return tpl


def save_template(template: PromptTemplate, path: str | Path) -> None:
    template.validate()
    payload = {"id": template.id, "version": template.version,
               "body": template.body}
    Path(path).write_text(json.dumps(payload, indent=2))


def builtin_template(template_id: str = "contour-cleanup") -> PromptTemplate:
    """Load one of the packaged template data files by id."""
    pkg = resources.files(__package__) / "templates"
    for entry in pkg.iterdir():
        if entry.name.endswith(".json"):
            data = json.loads(entry.read_text())
            if data["id"] == template_id:
                tpl = PromptTemplate(id=data["id"], body=data["body"],
                                     version=int(data.get("version", 1)))
                tpl.validate()
                return tpl
    raise ValidationError(f"no builtin template with id {template_id!r}")
