import json
from collections import Counter

import pytest
import zstandard
from hypothesis import given, settings
from hypothesis import strategies as st

from neocascade import corpus
from neocascade.corpus import (Post, ReadStats, count_types, harvest_contexts, preprocess, read_counts,
                               read_posts, tokenize, write_counts)


def _write(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write((r if isinstance(r, str) else json.dumps(r)) + "\n")
    return path


def test_removed_post_is_skipped(tmp_path):
    p = _write(tmp_path / "c.ndjson", [{"body": "[removed]", "subreddit": "x"}])
    assert list(read_posts(p)) == []


def test_well_formed_record_yields_post(tmp_path):
    p = _write(tmp_path / "c.ndjson", [{"body": "hello", "subreddit": "x", "created_utc": 1}])
    posts = list(read_posts(p))
    assert len(posts) == 1
    assert (posts[0].body, posts[0].subreddit, posts[0].created_utc) == ("hello", "x", 1)


def test_malformed_line_counted_and_skipped(tmp_path):
    good = [{"id": str(i), "body": f"post {i}", "subreddit": "s", "created_utc": i} for i in range(3)]
    p = _write(tmp_path / "c.ndjson", good[:2] + ["{broken"] + good[2:])
    stats = ReadStats()
    posts = list(read_posts(p, stats=stats))
    assert [x.id for x in posts] == ["0", "1", "2"]
    assert stats.malformed == 1


def test_deleted_empty_and_subredditless_skipped(tmp_path):
    p = _write(tmp_path / "c.ndjson", [
        {"body": "[deleted]", "subreddit": "x"},
        {"body": "", "subreddit": "x"},
        {"body": "text", "subreddit": ""},
        {"body": "kept", "subreddit": "y"},
    ])
    stats = ReadStats()
    assert [x.body for x in read_posts(p, stats=stats)] == ["kept"]
    assert stats.skipped == 3


def test_submission_title_and_selftext_joined(tmp_path):
    p = _write(tmp_path / "c.ndjson", [{"title": "big news", "selftext": "[removed]", "subreddit": "s"},
                                       {"title": "ask", "selftext": "details here", "subreddit": "s"}])
    assert [x.body for x in read_posts(p)] == ["big news", "ask\ndetails here"]


def test_zstd_input(tmp_path):
    raw = "".join(json.dumps({"body": f"w{i}", "subreddit": "s"}) + "\n" for i in range(5)).encode()
    p = tmp_path / "c.ndjson.zst"
    p.write_bytes(zstandard.ZstdCompressor().compress(raw))
    assert [x.body for x in read_posts(p)] == [f"w{i}" for i in range(5)]


def test_missing_file_is_fatal(tmp_path):
    with pytest.raises(OSError):
        list(read_posts(tmp_path / "nope.ndjson"))


def test_preprocess_examples():
    assert preprocess("see r/funny now") == "see ⟦SUB⟧ now"
    assert preprocess("plain ascii text") == "plain ascii text"
    assert preprocess("café ☕") == "caf "


def test_preprocess_placeholders():
    out = preprocess("ask u/spez at https://x.com/a?b=1 #blessed /r/pics")
    assert out == "ask ⟦USER⟧ at ⟦URL⟧ ⟦TAG⟧ ⟦SUB⟧"


def test_tokenize_examples():
    assert tokenize("The DOGS run!!", {"the"}) == ["dogs", "run"]
    assert tokenize("", set()) == []
    assert tokenize("doomscrolling, again", {"again"}) == ["doomscrolling"]


def test_placeholders_never_tokens():
    assert tokenize(preprocess("r/funny u/x www.a.com #tag word"), set()) == ["word"]


def test_bundled_stopwords_load():
    sw = corpus.load_stopwords()
    assert {"the", "and", "again"} <= sw
    assert all(w == w.lower() for w in sw)


def test_count_types_example():
    posts = [Post("1", "a b a", "s1", 0), Post("2", "a", "s2", 0)]
    types = count_types(posts)
    assert set(types) == {"a", "b"}
    assert (types["a"].count, types["a"].subreddits, types["a"].n_subreddits) == (3, {"s1", "s2"}, 2)
    assert (types["b"].count, types["b"].subreddits) == (1, {"s1"})


def test_count_types_empty():
    assert count_types([]) == {}


def _summary(types):
    return {s: (t.count, frozenset(t.subreddits)) for s, t in types.items()}


words = st.sampled_from(["alpha", "beta", "gamma", "the", "x1", "delta", "r/sub", "Beta"])
posts_strategy = st.lists(
    st.tuples(st.lists(words, max_size=8).map(" ".join), st.sampled_from(["s1", "s2", "s3"])), max_size=30)


@settings(max_examples=60, deadline=None)
@given(posts_strategy, st.integers(0, 30), st.randoms(use_true_random=False))
def test_aggregation_is_order_and_shard_independent(raw, cut, rnd):
    posts = [Post(str(i), b, s, 0) for i, (b, s) in enumerate(raw)]
    whole = count_types(posts, {"the"})
    a, b = corpus.TypeCounts(), corpus.TypeCounts()
    for p in posts[:cut]:
        a.add_post(p, frozenset({"the"}))
    for p in posts[cut:]:
        b.add_post(p, frozenset({"the"}))
    merged = b.merge(a).to_types()
    shuffled = posts[:]
    rnd.shuffle(shuffled)
    assert _summary(whole) == _summary(merged) == _summary(count_types(shuffled, {"the"}))


@settings(max_examples=60, deadline=None)
@given(posts_strategy)
def test_count_sum_equals_token_total(raw):
    posts = [Post(str(i), b, s, 0) for i, (b, s) in enumerate(raw)]
    total = sum(len(tokenize(preprocess(p.body), {"the"})) for p in posts)
    types = count_types(posts, {"the"})
    assert sum(t.count for t in types.values()) == total
    for s in types:
        assert s == s.lower()
        assert "⟦" not in s
        assert tokenize(s, {"the"}) == [s]


@settings(max_examples=100, deadline=None)
@given(st.text(max_size=60))
def test_tokens_are_lowercase_and_roundtrip(text):
    for tok in tokenize(preprocess(text), set()):
        assert tok == tok.lower()
        assert tokenize(tok, set()) == [tok]


def test_count_files_workers_agree(tmp_path):
    shards = []
    for k in range(3):
        shards.append(_write(tmp_path / f"s{k}.ndjson",
                             [{"body": f"foo bar{k} baz", "subreddit": f"r{k}"} for _ in range(4)]))
    one = corpus.count_files(shards, workers=1)
    two = corpus.count_files(shards, workers=2)
    assert _summary(one) == _summary(two)
    assert one["foo"].count == 12 and one["foo"].n_subreddits == 3


def test_counts_snapshot_roundtrip(tmp_path):
    types = count_types([Post("1", "a b a", "s1", 0), Post("2", "a", "s2", 0)])
    write_counts(types, tmp_path / "c.tsv")
    back = read_counts(tmp_path / "c.tsv")
    assert {s: (t.count, t.n_subreddits) for s, t in back.items()} == {"a": (3, 2), "b": (1, 1)}


def test_contexts_prefer_distinct_subreddits():
    subs = ["s1", "s1", "s2", "s3", "s3"]
    posts = [Post(str(i), f"post {i} mentions updoot here", s, 0) for i, s in enumerate(subs)]
    ctx = harvest_contexts(posts, {"updoot"}, k=3)
    assert [c.subreddit for c in ctx["updoot"]] == ["s1", "s2", "s3"]


def test_contexts_absent_candidate_and_k1():
    posts = [Post("1", "updoot this", "s1", 0), Post("2", "more updoot", "s2", 0)]
    ctx = harvest_contexts(posts, {"updoot", "missing"}, k=1)
    assert ctx["missing"] == []
    assert len(ctx["updoot"]) == 1


def test_contexts_fill_from_same_subreddit_when_needed():
    posts = [Post(str(i), f"yeet number {i}", "only", 0) for i in range(5)]
    ctx = harvest_contexts(posts, {"yeet"}, k=3)
    assert len(ctx["yeet"]) == 3


def test_k_must_be_positive():
    with pytest.raises(ValueError):
        harvest_contexts([], {"x"}, k=0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["lorem", "ipsum", "dolor", "sit", "amet", "xyzzy", "XYZZY!"]),
                min_size=1, max_size=120), st.integers(10, 60))
def test_snippet_contains_token_and_respects_window(ws, window):
    body = " ".join(ws + ["xyzzy"] + ws)
    ctx = harvest_contexts([Post("1", body, "s", 0)], {"xyzzy"}, k=1, window=window)
    snip = ctx["xyzzy"][0].snippet
    assert "xyzzy" in snip.lower()
    assert len(snip) <= 2 * window + len("xyzzy")


def test_context_counter_matches_hits():
    posts = [Post("1", "Finsta FINSTA finsta", "a", 0)]
    assert Counter(tokenize(preprocess(posts[0].body))) == {"finsta": 3}
