"""Structural and language-specific noise rules for candidate tokens."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

RULE_PACK_FORMAT = "neocascade-rules/1"

# evaluation order; the first failing rule names the rejection
RULES = (
    "alphabetic",
    "length",
    "spam",
    "expressive",
    "repetition",
    "entropy",
    "prefix",
    "cluster",
    "placeholder",
)

PASS = "PASS"

_ALPHA = re.compile(r"[a-z]+")
_CHAR_RUN = re.compile(r"(.)\1{2,}")
_BIGRAM_RUN = re.compile(r"(.)(?!\1)(.)(?:\1\2){2,}")


@dataclass(frozen=True)
class PatternRuleSet:
    min_len: int = 3
    max_len: int = 20
    spam_len: int = 6
    spam_unique_max: int = 2
    entropy_min: float = 2.0
    entropy_min_len: int = 10
    banned_prefixes: tuple = ()
    banned_cluster_patterns: tuple = ()
    expressive_patterns: tuple = ()
    placeholder_words: frozenset = frozenset()
    language: str = "en"
    _clusters: tuple = field(default=(), repr=False, compare=False)
    _expressive: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if not 0 < self.min_len <= self.max_len:
            raise ValueError("need 0 < min_len <= max_len")
        if self.entropy_min < 0:
            raise ValueError("entropy_min must be >= 0")
        object.__setattr__(self, "_clusters", tuple(re.compile(p) for p in self.banned_cluster_patterns))
        object.__setattr__(self, "_expressive", tuple(re.compile(p) for p in self.expressive_patterns))


def parse_rule_pack(text: str) -> dict:
    """Parse a rule pack into ``{"header": {...}, section: [entries]}``."""
    out: dict = {"header": {}}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            out.setdefault(section, [])
        elif section is None:
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"rule pack line {lineno}: expected key = value in header")
            out["header"][key.strip()] = value.strip()
        else:
            out[section].append(line)
    fmt = out["header"].get("format")
    if fmt != RULE_PACK_FORMAT:
        raise ValueError(f"unsupported rule pack format {fmt!r}, expected {RULE_PACK_FORMAT!r}")
    return out


def load_rule_pack(path=None, language: str = "en", **params) -> PatternRuleSet:
    """Build a rule set from a pack file (bundled pack when ``path`` is None).

    Numeric thresholds come from ``params``; the pack supplies the
    language-specific lists.
    """
    if path is None:
        text = resources.files("neocascade").joinpath(f"data/rules/{language}.rules").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    pack = parse_rule_pack(text)
    return PatternRuleSet(
        banned_prefixes=tuple(pack.get("banned_prefixes", ())),
        banned_cluster_patterns=tuple(pack.get("banned_cluster_patterns", ())),
        expressive_patterns=tuple(pack.get("expressive_patterns", ())),
        placeholder_words=frozenset(w.lower() for w in pack.get("placeholder_words", ())),
        language=pack["header"].get("language", language),
        **params,
    )


def char_entropy(surface: str) -> float:
    """Shannon entropy in bits of the character distribution."""
    if not surface:
        raise ValueError("entropy of an empty string is undefined")
    n = len(surface)
    return -sum((c / n) * math.log2(c / n) for c in Counter(surface).values()) + 0.0


def check(surface: str, rules: PatternRuleSet) -> str:
    """Return ``"PASS"`` or the identifier of the first rule that rejects."""
    if not _ALPHA.fullmatch(surface):
        return "alphabetic"
    n = len(surface)
    if n < rules.min_len or n > rules.max_len:
        return "length"
    if n > rules.spam_len and len(set(surface)) <= rules.spam_unique_max:
        return "spam"
    if any(p.search(surface) for p in rules._expressive):
        return "expressive"
    if _CHAR_RUN.search(surface) or _BIGRAM_RUN.search(surface):
        return "repetition"
    if n >= rules.entropy_min_len and char_entropy(surface) < rules.entropy_min:
        return "entropy"
    if surface.startswith(tuple(rules.banned_prefixes)):
        return "prefix"
    if any(p.search(surface) for p in rules._clusters):
        return "cluster"
    if surface in rules.placeholder_words:
        return "placeholder"
    return PASS
