"""Reference-vocabulary exclusion.

A token type attested in any pre-cutoff lexicon is treated as established
and dropped. Matching is exact, type-level, with no sense disambiguation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VocabularySet:
    name: str
    entries: frozenset
    cutoff: date | None = None
    source_sizes: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, surface):
        return surface in self.entries


def _read_source(path: Path) -> set:
    words = set()
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, 1):
            try:
                line = raw.decode("utf-8").strip()
            except UnicodeDecodeError:
                logger.warning("%s:%d: non-UTF-8 line skipped", path, lineno)
                continue
            # multi-word titles are not single surface forms
            if not line or any(c.isspace() for c in line):
                continue
            words.add(line.lower())
    return words


def load_vocab(paths, name: str = "reference", cutoff: date | None = None,
               labels=None) -> VocabularySet:
    """Union of one-token-per-line files, lowercased and deduplicated.

    A missing file raises ``FileNotFoundError``.
    """
    paths = [Path(p) for p in paths]
    labels = list(labels) if labels is not None else [p.stem for p in paths]
    entries: set = set()
    sizes = {}
    for label, path in zip(labels, paths):
        if not path.exists():
            raise FileNotFoundError(f"vocabulary source not found: {path}")
        words = _read_source(path)
        sizes[label] = len(words)
        entries |= words
        logger.info("vocab %s: %s entries", label, f"{len(words):,}")
    logger.info("vocab total: %s unique entries", f"{len(entries):,}")
    return VocabularySet(name, frozenset(entries), cutoff, sizes)


def load_manifest(path) -> VocabularySet:
    """Load the sources listed in a manifest.

    Manifest lines are ``name<TAB>path<TAB>cutoff`` (ISO date); relative paths
    resolve against the manifest's directory. The set's cutoff is the
    earliest claimed cutoff.
    """
    path = Path(path)
    names, paths, cutoffs = [], [], []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < 2:
            raise ValueError(f"bad manifest line: {line!r}")
        names.append(cols[0])
        p = Path(cols[1])
        paths.append(p if p.is_absolute() else path.parent / p)
        if len(cols) > 2 and cols[2].strip():
            cutoffs.append(date.fromisoformat(cols[2].strip()))
    return load_vocab(paths, name=path.stem, cutoff=min(cutoffs) if cutoffs else None, labels=names)


def is_known(vocab: VocabularySet, surface: str) -> bool:
    return surface in vocab.entries


def filter_unknown(surfaces, vocab: VocabularySet) -> list:
    return [s for s in surfaces if s not in vocab.entries]
