"""Prompt templates live in versioned text files so course staff can swap them.

Rendering is a single-pass substitution of known {placeholder} tokens only;
braces inside interpolated values (student code is full of dict literals)
are left alone and never re-substituted.
"""

from __future__ import annotations

import hashlib
import re
from importlib import resources

from .benchmark import Assignment

TEMPLATE_NAMES = ("system", "generate", "grade", "reference_grade")


def load_template(name: str) -> str:
    if name not in TEMPLATE_NAMES:
        raise ValueError(f"unknown template: {name!r}")
    text = resources.files("feedjudge.prompts").joinpath(f"{name}.txt").read_text(encoding="utf-8")
    return text.rstrip("\n")


def template_digest(name: str) -> str:
    return hashlib.sha256(load_template(name).encode("utf-8")).hexdigest()


def all_template_digests() -> dict[str, str]:
    return {name: template_digest(name) for name in TEMPLATE_NAMES}


def render(name: str, **values: str) -> str:
    template = load_template(name)
    known = "|".join(re.escape(k) for k in values)
    return re.sub(rf"\{{({known})\}}", lambda m: values[m.group(1)], template)


def render_test_cases(a: Assignment) -> str:
    """Test cases exactly as given in the benchmark file, one per line."""
    lines = []
    for t in a.test_cases:
        if t.assertion is not None:
            lines.append(t.assertion)
        else:
            lines.append(f"{t.invocation} == {t.expected}")
    return "\n".join(lines)


def render_numbered(items: tuple[str, ...] | list[str]) -> str:
    return "\n".join(f"{i}. {item}" for i, item in enumerate(items, start=1))
