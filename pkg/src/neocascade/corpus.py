"""Corpus ingest: stream posts, normalize, tokenize, and count token types.

Posts come from newline-delimited JSON dumps (Pushshift layout), optionally
zstd-compressed. Counting is an associative merge of per-shard maps, so
shards can be processed by separate workers and combined in any order.
"""

from __future__ import annotations

import io
import json
import logging
import re
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

SKIP_BODIES = frozenset({"", "[deleted]", "[removed]"})

PLACEHOLDERS = {
    "url": "⟦URL⟧",
    "sub": "⟦SUB⟧",
    "user": "⟦USER⟧",
    "tag": "⟦TAG⟧",
}

_NON_ASCII = re.compile(r"[^\x00-\x7f]+")
_URL = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_SUBREDDIT = re.compile(r"(?<![\w/])/?r/\w+")
_USER = re.compile(r"(?<![\w/])/?u/\w+")
_HASHTAG = re.compile(r"(?<![\w#])#\w+")

# placeholders first so their inner letters never surface as words
_TOKEN = re.compile(r"⟦[A-Z]+⟧|[A-Za-z0-9_]+")

DEFAULT_CONTEXT_CHARS = 120


@dataclass
class Post:
    id: str
    body: str
    subreddit: str
    created_utc: int


@dataclass
class TokenType:
    surface: str
    count: int = 0
    subreddits: set = field(default_factory=set)
    n_subreddits: int = 0
    flags: set = field(default_factory=set)
    trace: list = field(default_factory=list)

    def mark(self, stage: str, decision: str) -> None:
        self.trace.append((stage, decision))


@dataclass
class Context:
    subreddit: str
    snippet: str


@dataclass
class ReadStats:
    posts: int = 0
    skipped: int = 0
    malformed: int = 0


# -- reading ---------------------------------------------------------------

def _open_text(path: Path) -> io.TextIOBase:
    if path.suffix == ".zst":
        import zstandard

        fh = open(path, "rb")
        reader = zstandard.ZstdDecompressor(max_window_size=2**31).stream_reader(fh)
        return io.TextIOWrapper(reader, encoding="utf-8", errors="replace")
    return open(path, "r", encoding="utf-8", errors="replace")


def _record_body(record: dict) -> str:
    body = record.get("body")
    if body is None:
        # submissions: title and selftext are ingested as one body
        parts = [record.get("title") or "", record.get("selftext") or ""]
        parts = [p for p in parts if p.strip() not in SKIP_BODIES]
        body = "\n".join(parts)
    return body if isinstance(body, str) else ""


def read_posts(path, format: str = "ndjson", stats: ReadStats | None = None) -> Iterator[Post]:
    """Yield posts from an ndjson dump in file order.

    Deleted, removed and empty posts are skipped; malformed lines are
    counted in ``stats.malformed`` and logged. An unreadable file raises.
    """
    if format != "ndjson":
        raise ValueError(f"unsupported corpus format: {format}")
    path = Path(path)
    stats = stats if stats is not None else ReadStats()
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                if not isinstance(record, dict):
                    raise ValueError("record is not an object")
                body = _record_body(record)
                subreddit = str(record.get("subreddit") or "")
                created = int(record.get("created_utc") or 0)
            except (ValueError, TypeError) as exc:
                stats.malformed += 1
                logger.warning("%s:%d: malformed record skipped (%s)", path, lineno, exc)
                continue
            if body.strip() in SKIP_BODIES or not subreddit:
                stats.skipped += 1
                continue
            stats.posts += 1
            yield Post(str(record.get("id", lineno)), body, subreddit, created)


# -- text normalization ----------------------------------------------------

def preprocess(body: str) -> str:
    text = _NON_ASCII.sub("", body)
    text = _URL.sub(PLACEHOLDERS["url"], text)
    text = _SUBREDDIT.sub(PLACEHOLDERS["sub"], text)
    text = _USER.sub(PLACEHOLDERS["user"], text)
    text = _HASHTAG.sub(PLACEHOLDERS["tag"], text)
    return text


def load_stopwords(path=None, language: str = "en") -> frozenset:
    """Read a one-word-per-line stopword file; defaults to the bundled list."""
    if path is None:
        text = resources.files("neocascade").joinpath(f"data/stopwords/{language}.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip() and not w.startswith("#"))


def tokenize(text: str, stopwords: Iterable[str] = frozenset()) -> list[str]:
    out = []
    for m in _TOKEN.finditer(text):
        tok = m.group()
        if tok[0] == "⟦":
            continue
        tok = tok.lower()
        if tok in stopwords:
            continue
        out.append(tok)
    return out


# -- counting --------------------------------------------------------------

class TypeCounts:
    """Mergeable surface -> (count, subreddit set) aggregate."""

    def __init__(self):
        self.counts: Counter = Counter()
        self.subs: dict = defaultdict(set)
        self.total_tokens = 0

    def add_post(self, post: Post, stopwords) -> None:
        toks = tokenize(preprocess(post.body), stopwords)
        self.total_tokens += len(toks)
        self.counts.update(toks)
        for t in set(toks):
            self.subs[t].add(post.subreddit)

    def merge(self, other: "TypeCounts") -> "TypeCounts":
        self.counts.update(other.counts)
        for t, s in other.subs.items():
            self.subs[t] |= s
        self.total_tokens += other.total_tokens
        return self

    def to_types(self) -> dict:
        return {
            s: TokenType(s, c, set(self.subs[s]), len(self.subs[s]))
            for s, c in sorted(self.counts.items())
        }


def count_types(posts: Iterable[Post], stopwords: Iterable[str] = frozenset()) -> dict:
    """Aggregate posts into a sorted surface -> TokenType map."""
    stopwords = frozenset(stopwords)
    agg = TypeCounts()
    for post in posts:
        agg.add_post(post, stopwords)
    return agg.to_types()


def _count_shard(args) -> TypeCounts:
    path, stopwords = args
    agg = TypeCounts()
    for post in read_posts(path):
        agg.add_post(post, stopwords)
    return agg


def count_files(paths, stopwords=frozenset(), workers: int = 1) -> dict:
    """Count types over several shard files, optionally in worker processes."""
    stopwords = frozenset(stopwords)
    jobs = [(Path(p), stopwords) for p in paths]
    total = TypeCounts()
    if workers <= 1 or len(jobs) <= 1:
        for job in jobs:
            total.merge(_count_shard(job))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_count_shard, jobs):
                total.merge(part)
    return total.to_types()


def write_counts(types: dict, path) -> None:
    """Checkpoint snapshot: ``surface<TAB>count<TAB>n_subreddits``."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in sorted(types):
            t = types[s]
            fh.write(f"{s}\t{t.count}\t{t.n_subreddits}\n")


def read_counts(path) -> dict:
    types = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            surface, count, n_subs = line.rstrip("\n").split("\t")
            types[surface] = TokenType(surface, int(count), n_subreddits=int(n_subs))
    return types


# -- contexts --------------------------------------------------------------

def _snippet(text: str, surface: str, window: int) -> str | None:
    m = re.search(rf"(?<![A-Za-z0-9_]){re.escape(surface)}(?![A-Za-z0-9_])", text, re.IGNORECASE)
    if m is None:
        return None
    start = max(0, m.start() - window)
    end = min(len(text), m.end() + window)
    # trim inward to whitespace so no word is cut in half
    if start > 0:
        ws = text.find(" ", start, m.start())
        start = ws + 1 if ws != -1 else m.start()
    if end < len(text):
        ws = text.rfind(" ", m.end(), end)
        end = ws if ws != -1 else m.end()
    return text[start:end].strip()


def harvest_contexts(
    posts: Iterable[Post],
    candidates: Iterable[str],
    k: int = 3,
    stopwords: Iterable[str] = frozenset(),
    window: int = DEFAULT_CONTEXT_CHARS,
) -> dict:
    """Collect up to ``k`` context snippets per candidate, one pass over posts.

    Distinct subreddits are preferred; repeats from an already-seen subreddit
    only fill remaining slots. Candidates never seen map to an empty list.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    wanted = set(candidates)
    stopwords = frozenset(stopwords)
    primary = {c: [] for c in wanted}
    spare = {c: [] for c in wanted}
    seen_subs = {c: set() for c in wanted}
    open_ = set(wanted)

    for post in posts:
        if not open_:
            break
        text = " ".join(preprocess(post.body).split())
        hits = open_.intersection(tokenize(text, stopwords))
        for c in hits:
            if post.subreddit in seen_subs[c]:
                if len(spare[c]) + len(primary[c]) < k:
                    snip = _snippet(text, c, window)
                    if snip:
                        spare[c].append(Context(post.subreddit, snip))
                continue
            snip = _snippet(text, c, window)
            if not snip:
                continue
            seen_subs[c].add(post.subreddit)
            primary[c].append(Context(post.subreddit, snip))
            if len(primary[c]) >= k:
                open_.discard(c)

    return {c: (primary[c] + spare[c])[:k] for c in sorted(wanted)}
