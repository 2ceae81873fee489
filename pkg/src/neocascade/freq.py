"""Minimum-occurrence gate with reintegration of spell-flagged tokens."""

from __future__ import annotations

from dataclasses import dataclass

TYPO = "TYPO"
CONCAT = "CONCAT"


@dataclass
class FreqStats:
    kept: int = 0
    dropped_low_frequency: int = 0
    reintegrated_typo: int = 0
    reintegrated_concat: int = 0
    dropped_flagged: int = 0
    dropped_dispersion: int = 0

    @property
    def reintegrated(self) -> int:
        return self.reintegrated_typo + self.reintegrated_concat


def gate(tokens, threshold: int = 100, min_subreddits: int = 0, stage: str = "freq"):
    """Split tokens into survivors by raw corpus count.

    Clean and flagged tokens face the same threshold; a flagged token that
    clears it is counted as reintegrated and keeps its flag. ``min_subreddits``
    adds an optional dispersion requirement (0 disables it).
    Returns ``(survivors, stats)``.
    """
    stats = FreqStats()
    survivors = []
    for t in tokens:
        flagged = bool(t.flags & {TYPO, CONCAT})
        if t.count < threshold:
            if flagged:
                stats.dropped_flagged += 1
            else:
                stats.dropped_low_frequency += 1
            t.mark(stage, "drop:low-frequency")
            continue
        if min_subreddits and t.n_subreddits < min_subreddits:
            stats.dropped_dispersion += 1
            t.mark(stage, "drop:dispersion")
            continue
        if flagged:
            if CONCAT in t.flags:
                stats.reintegrated_concat += 1
            else:
                stats.reintegrated_typo += 1
            t.mark(stage, "reintegrated")
        else:
            stats.kept += 1
            t.mark(stage, "pass")
        survivors.append(t)
    return survivors, stats
