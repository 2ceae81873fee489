"""Prompt rendering and response parsing for the four-way token taxonomy."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from string import Template

MULTI = "MULTI"
SINGLE = "SINGLE"
DEFAULT_BATCH_SIZE = 10
MAX_CONTEXTS = 3


class Label(str, Enum):
    ENTITY = "ENTITY"
    NEOLOGISM = "NEOLOGISM"
    FOREIGN = "FOREIGN"
    NONE = "NONE"
    # vote-tie marker, never a final label
    UNKNOWN = "UNKNOWN"


LABELS = (Label.ENTITY, Label.NEOLOGISM, Label.FOREIGN, Label.NONE)
PARSE_FAIL = "PARSE_FAIL"

_LINE = re.compile(r"^\s*(\S+?)\s*:\s*(ENTITY|NEOLOGISM|FOREIGN|NONE)\s*$", re.IGNORECASE)


@dataclass
class PromptBatch:
    tokens: list = field(default_factory=list)  # [(surface, [Context, ...]), ...]
    template: str = MULTI


def _template(name: str) -> Template:
    return Template(resources.files("neocascade").joinpath(f"prompts/{name}.txt").read_text("utf-8"))


def escape_context(text: str) -> str:
    """Single-line, quote-safe context text.

    Whitespace runs collapse to one space; backslashes and double quotes are
    backslash-escaped so the closing quote stays unambiguous.
    """
    text = " ".join(text.split())
    return text.replace("\\", "\\\\").replace('"', '\\"')


def token_block(surface: str, contexts) -> str:
    lines = [f"TOKEN: {surface}"]
    for i, ctx in enumerate(list(contexts)[:MAX_CONTEXTS], 1):
        lines.append(f'  context_{i} (r/{ctx.subreddit}): "{escape_context(ctx.snippet)}"')
    return "\n".join(lines)


def render_prompt(batch: PromptBatch, batch_size: int = DEFAULT_BATCH_SIZE) -> str:
    if not batch.tokens:
        raise ValueError("cannot render an empty batch")
    if batch.template == SINGLE:
        if len(batch.tokens) != 1:
            raise ValueError("SINGLE template takes exactly one token")
        surface, contexts = batch.tokens[0]
        return _template("single").substitute(token_block=token_block(surface, contexts), token=surface)
    if batch.template != MULTI:
        raise ValueError(f"unknown template {batch.template!r}")
    if len(batch.tokens) > batch_size:
        raise ValueError(f"batch of {len(batch.tokens)} exceeds batch_size {batch_size}")
    blocks = "\n".join(token_block(s, c) for s, c in batch.tokens)
    return _template("multi").substitute(token_blocks=blocks)


def parse_response(text: str, expected) -> dict:
    """Map each expected surface to a ``Label`` or ``PARSE_FAIL``.

    Only ``surface:LABEL`` lines with one of the four labels count; matching
    is case-insensitive and tolerant of surrounding whitespace. Conflicting
    answers for one surface are a failure for that surface.
    """
    wanted = {s.lower(): s for s in expected}
    found: dict = {}
    conflicted = set()
    for line in (text or "").splitlines():
        m = _LINE.match(line)
        if not m:
            continue
        key = m.group(1).lower()
        if key not in wanted:
            continue
        label = Label(m.group(2).upper())
        if key in found and found[key] != label:
            conflicted.add(key)
        found.setdefault(key, label)
    return {
        s: (found[k] if k in found and k not in conflicted else PARSE_FAIL)
        for k, s in wanted.items()
    }
