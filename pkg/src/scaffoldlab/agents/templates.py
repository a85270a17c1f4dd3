"""Prompt templates with ``{name}`` placeholders and ``{{``/``}}`` escapes."""

from __future__ import annotations

import string
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Sequence, Union

from ..domain import PhaseKind, ProcessModel, RoleKind
from ..errors import ContextOverflow, MissingBinding, UnknownPlaceholder

PLACEHOLDERS = frozenset(
    {"project_name", "requirement", "prd", "detailed_design", "sprint_context", "prior_artifacts"}
)
TRUNCATION_MARKER = "[... earlier context truncated ...]\n"
ARTIFACT_SEPARATOR = "\n\n"

Binding = Union[str, Sequence[str]]
_formatter = string.Formatter()


def _split(body: str) -> list[tuple[str, str | None]]:
    """Split a template body into (literal, field_name) pieces."""
    pieces = []
    try:
        for literal, name, spec, conv in _formatter.parse(body):
            if name is not None and (spec or conv or name not in PLACEHOLDERS):
                raise UnknownPlaceholder(f"unsupported placeholder {{{name}}}")
            pieces.append((literal, name))
    except ValueError as exc:
        if isinstance(exc, UnknownPlaceholder):
            raise
        raise UnknownPlaceholder(f"bad template syntax: {exc}") from exc
    return pieces


@dataclass(frozen=True)
class PromptTemplate:
    role: RoleKind
    process: ProcessModel
    phase: PhaseKind
    body: str

    def __post_init__(self):
        _split(self.body)  # validate eagerly

    @property
    def placeholders(self) -> frozenset[str]:
        return frozenset(n for _, n in _split(self.body) if n is not None)


def _join(value: Binding) -> str:
    if isinstance(value, str):
        return value
    return ARTIFACT_SEPARATOR.join(value)


def _truncate_oldest(text: str, budget: int) -> str:
    """Keep the newest ``budget`` characters of ``text``, marking the cut."""
    if len(text) <= budget:
        return text
    if budget < len(TRUNCATION_MARKER):
        return ""
    keep = budget - len(TRUNCATION_MARKER)
    return TRUNCATION_MARKER + (text[len(text) - keep:] if keep else "")


def render(
    template: PromptTemplate | str,
    bindings: Mapping[str, Binding],
    max_context_chars: int | None = None,
) -> str:
    """Substitute ``bindings`` into the template body.

    ``prior_artifacts`` may be a list ordered oldest first. When the rendered
    prompt would exceed ``max_context_chars`` the oldest prior-artifact text is
    dropped first and replaced by a truncation marker.
    """
    body = template.body if isinstance(template, PromptTemplate) else template
    pieces = _split(body)
    for _, name in pieces:
        if name is not None and name not in bindings:
            raise MissingBinding(name)

    values = {name: _join(bindings[name]) for _, name in pieces if name is not None}

    def assemble(vals):
        return "".join(lit + (vals[name] if name is not None else "") for lit, name in pieces)

    text = assemble(values)
    if max_context_chars is None or len(text) <= max_context_chars:
        return text

    slots = sum(1 for _, n in pieces if n == "prior_artifacts")
    fixed = len(text) - slots * len(values.get("prior_artifacts", ""))
    if slots == 0 or fixed > max_context_chars:
        raise ContextOverflow(
            f"prompt needs {fixed} characters without prior artifacts; limit is {max_context_chars}"
        )
    budget = (max_context_chars - fixed) // slots
    values["prior_artifacts"] = _truncate_oldest(values["prior_artifacts"], budget)
    return assemble(values)


def template_name(role: RoleKind, phase: PhaseKind) -> str:
    return f"{role.value}_{phase.value}.txt"


def load_template(process: ProcessModel, role: RoleKind, phase: PhaseKind) -> PromptTemplate:
    res = resources.files("scaffoldlab") / "templates" / process.value / template_name(role, phase)
    return PromptTemplate(role, process, phase, res.read_text(encoding="utf-8"))


def available_templates(process: ProcessModel) -> list[str]:
    root = resources.files("scaffoldlab") / "templates" / process.value
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".txt"))
