"""Majority vote across voter models and the verification override."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .prompts import Label

LEXICAL = (Label.NEOLOGISM, Label.ENTITY)


@dataclass
class Classification:
    surface: str
    votes: dict = field(default_factory=dict)
    raw_majority: Label = Label.UNKNOWN
    majority: Label = Label.NONE
    verifier: Label | None = None
    final: Label = Label.NONE
    unverified: bool = False

    @property
    def exported(self) -> bool:
        """Final candidates are majority neologisms the verifier kept."""
        return self.majority == Label.NEOLOGISM and self.final in LEXICAL


def tally(votes) -> Label:
    """Label holding a strict majority of votes, else ``UNKNOWN``."""
    labels = list(votes.values()) if isinstance(votes, dict) else list(votes)
    if not labels:
        return Label.UNKNOWN
    label, n = Counter(labels).most_common(1)[0]
    return Label(label) if n * 2 > len(labels) else Label.UNKNOWN


def majority_vote(votes) -> Label:
    """Strict-majority label; ties resolve conservatively to ``NONE``."""
    n = len(votes)
    if n < 3 or n % 2 == 0:
        raise ValueError(f"majority vote needs an odd number (>= 3) of voters, got {n}")
    label = tally(votes)
    return Label.NONE if label == Label.UNKNOWN else label


def classify_votes(surface: str, votes: dict) -> Classification:
    raw = tally(votes)
    majority = Label.NONE if raw == Label.UNKNOWN else raw
    return Classification(surface, dict(votes), raw, majority, None, majority)


def apply_verification(c: Classification, verifier_label: Label | None) -> Classification:
    """Let the verifier's label become final for majority neologisms.

    ``None`` means the verifier could not answer: the majority stands and the
    record is marked unverified. Other majority labels are untouched.
    """
    if c.majority != Label.NEOLOGISM:
        return c
    if verifier_label is None:
        c.unverified = True
        c.final = c.majority
    else:
        c.verifier = Label(verifier_label)
        c.final = c.verifier
    return c
