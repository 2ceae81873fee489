"""Typo and concatenation detection against a frequency dictionary.

Typos are found with a symmetric-delete index: every dictionary word is
stored under all its variants with up to ``max_edit`` deleted characters, so
a query only needs its own deletion variants to reach every word within
``max_edit`` edits. Candidates are then verified with the optimal string
alignment distance (Levenshtein plus adjacent transposition).

Concatenations are found by dictionary-constrained segmentation, using a
dynamic program over split positions.
"""

from __future__ import annotations

import logging
import pickle
from collections import defaultdict
from dataclasses import dataclass

logger = logging.getLogger(__name__)

CLEAN = "CLEAN"
TYPO = "TYPO"
CONCAT = "CONCAT"

INDEX_MAGIC = b"NEOCASCADE-DELETE-INDEX\x00"
INDEX_VERSION = 1


@dataclass(frozen=True)
class SpellVerdict:
    kind: str = CLEAN
    correction: str | None = None
    segments: tuple | None = None
    distance: int | None = None


class FrequencyDict(dict):
    """Lowercase surface -> count (>= 1)."""

    @classmethod
    def from_file(cls, path) -> "FrequencyDict":
        d = cls()
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                surface, _, count = line.partition("\t")
                try:
                    n = int(count)
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: bad count {count!r}") from None
                if n >= 1:
                    surface = surface.strip().lower()
                    d[surface] = d.get(surface, 0) + n
        return d


def osa_distance(a: str, b: str, max_dist: int | None = None) -> int:
    """Optimal string alignment distance.

    With ``max_dist`` set, any result above it is reported as ``max_dist + 1``.
    """
    if a == b:
        return 0
    la, lb = len(a), len(b)
    cap = max_dist + 1 if max_dist is not None else None
    if cap is not None and abs(la - lb) >= cap:
        return cap
    if la == 0 or lb == 0:
        d = la or lb
        return min(d, cap) if cap is not None else d
    prev2 = None
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        ca = a[i - 1]
        cur = [i] + [0] * lb
        row_min = i
        for j in range(1, lb + 1):
            cb = b[j - 1]
            cost = 0 if ca == cb else 1
            v = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if i > 1 and j > 1 and ca == b[j - 2] and a[i - 2] == cb:
                t = prev2[j - 2] + 1
                if t < v:
                    v = t
            cur[j] = v
            if v < row_min:
                row_min = v
        if cap is not None and row_min >= cap:
            return cap
        prev2, prev = prev, cur
    d = prev[lb]
    return min(d, cap) if cap is not None else d


def deletes(word: str, max_edit: int) -> set:
    """All strings obtained from ``word`` by deleting up to ``max_edit`` characters."""
    out = {word}
    frontier = {word}
    for _ in range(max_edit):
        frontier = {w[:i] + w[i + 1:] for w in frontier for i in range(len(w))}
        out |= frontier
    return out


class DeleteIndex:
    def __init__(self, max_edit: int = 2):
        if max_edit not in (1, 2):
            raise ValueError("max_edit must be 1 or 2")
        self.max_edit = max_edit
        self.buckets: dict = defaultdict(set)

    def add(self, word: str) -> None:
        for d in deletes(word, self.max_edit):
            self.buckets[d].add(word)

    def candidates(self, query: str) -> set:
        out: set = set()
        for d in deletes(query, self.max_edit):
            hit = self.buckets.get(d)
            if hit:
                out |= hit
        return out

    def __len__(self):
        return len(self.buckets)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(INDEX_MAGIC)
            fh.write(INDEX_VERSION.to_bytes(2, "little"))
            pickle.dump((self.max_edit, {k: sorted(v) for k, v in self.buckets.items()}), fh,
                        protocol=pickle.HIGHEST_PROTOCOL)

    @classmethod
    def load(cls, path) -> "DeleteIndex":
        with open(path, "rb") as fh:
            if fh.read(len(INDEX_MAGIC)) != INDEX_MAGIC:
                raise ValueError(f"{path}: not a delete-index snapshot")
            version = int.from_bytes(fh.read(2), "little")
            if version != INDEX_VERSION:
                raise ValueError(f"{path}: unsupported index version {version}")
            max_edit, buckets = pickle.load(fh)
        idx = cls(max_edit)
        idx.buckets.update((k, set(v)) for k, v in buckets.items())
        return idx


def build_index(freq: FrequencyDict, max_edit: int = 2) -> DeleteIndex:
    idx = DeleteIndex(max_edit)
    for word in freq:
        idx.add(word)
    logger.debug("delete index: %d words, %d variants", len(freq), len(idx))
    return idx


def typo_check(
    surface: str,
    index: DeleteIndex,
    freq: FrequencyDict,
    min_len: int = 5,
    freq_floor: int = 100,
    floor_on: str = "match",
    token_count: int | None = None,
) -> SpellVerdict:
    """Flag ``surface`` as a typo of its nearest frequent dictionary word.

    The nearest word has the smallest distance in ``[1, max_edit]``; ties go
    to the higher count, then the lexicographically smaller word. By default
    the frequency floor applies to the dictionary match; with
    ``floor_on="token"`` it applies to the token's own corpus count instead.
    """
    if len(surface) < min_len:
        return SpellVerdict()
    if floor_on == "token" and (token_count is None or token_count <= freq_floor):
        return SpellVerdict()
    max_edit = index.max_edit
    best = None
    for word in index.candidates(surface):
        if word == surface:
            continue
        count = freq.get(word, 0)
        if floor_on == "match" and count <= freq_floor:
            continue
        d = osa_distance(surface, word, max_edit)
        if d > max_edit:
            continue
        key = (d, -count, word)
        if best is None or key < best:
            best = key
    if best is None:
        return SpellVerdict()
    return SpellVerdict(TYPO, correction=best[2], distance=best[0])


def segment(surface: str, freq: FrequencyDict, min_len: int = 6, min_part: int = 3) -> SpellVerdict:
    """Split ``surface`` into two or more dictionary words, if possible.

    Among valid splits the fewest parts win, then the largest product of
    part counts (equivalent to relative frequencies at equal part count),
    then the earliest split points.
    """
    n = len(surface)
    if n < min_len or n < 2 * min_part:
        return SpellVerdict()
    # best[i]: (parts, -product, split tuple) for the prefix surface[:i]
    best: list = [None] * (n + 1)
    best[0] = (0, -1, ())
    for i in range(min_part, n + 1):
        for j in range(0, i - min_part + 1):
            if best[j] is None:
                continue
            piece = surface[j:i]
            count = freq.get(piece)
            if not count:
                continue
            parts, negprod, splits = best[j]
            cand = (parts + 1, negprod * count, splits + (j,))
            if best[i] is None or cand < best[i]:
                best[i] = cand
    # the whole word as one piece does not count: require a last split > 0
    final = None
    for j in range(min_part, n - min_part + 1):
        if best[j] is None:
            continue
        count = freq.get(surface[j:])
        if not count:
            continue
        parts, negprod, splits = best[j]
        cand = (parts + 1, negprod * count, splits + (j,))
        if final is None or cand < final:
            final = cand
    if final is None:
        return SpellVerdict()
    cuts = final[2][1:] + (n,)
    starts = final[2]
    return SpellVerdict(CONCAT, segments=tuple(surface[s:e] for s, e in zip(starts, cuts)))
