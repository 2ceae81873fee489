import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from rapidfuzz.distance import OSA

import oracles
from neocascade.spell import (CLEAN, CONCAT, TYPO, DeleteIndex, FrequencyDict, build_index, deletes,
                              osa_distance, segment, typo_check)


def test_build_index_single_deletions():
    idx = build_index(FrequencyDict({"cat": 5}), 1)
    for key in ("at", "ct", "ca", "cat"):
        assert "cat" in idx.buckets[key]


def test_empty_dict_empty_index():
    assert len(build_index(FrequencyDict(), 2)) == 0


def test_max_edit_validated():
    with pytest.raises(ValueError):
        DeleteIndex(3)


def test_typo_examples():
    fd = FrequencyDict({"hello": 5000, "tuber": 2000, "nose": 900})
    idx = build_index(fd, 2)
    assert typo_check("nope", idx, fd).kind == CLEAN
    assert typo_check("helllo", idx, fd) == typo_check("helllo", idx, fd)
    v = typo_check("helllo", idx, fd)
    assert (v.kind, v.correction, v.distance) == (TYPO, "hello", 1)
    v = typo_check("vtuber", idx, fd)
    assert (v.kind, v.correction, v.distance) == (TYPO, "tuber", 1)


def test_floor_applies_to_match_by_default():
    fd = FrequencyDict({"hello": 100})
    idx = build_index(fd, 2)
    assert typo_check("helllo", idx, fd).kind == CLEAN  # count must exceed the floor
    fd["hello"] = 101
    assert typo_check("helllo", idx, fd).kind == TYPO


def test_floor_on_token_count():
    fd = FrequencyDict({"hello": 5})
    idx = build_index(fd, 2)
    assert typo_check("helllo", idx, fd, floor_on="token", token_count=50).kind == CLEAN
    assert typo_check("helllo", idx, fd, floor_on="token", token_count=500).kind == TYPO


def test_tie_break_count_then_lexicographic():
    fd = FrequencyDict({"bands": 500, "hands": 900, "lands": 900})
    idx = build_index(fd, 2)
    assert typo_check("xands", idx, fd).correction == "hands"
    fd2 = FrequencyDict({"hands": 900, "handy": 900})
    assert typo_check("handz", build_index(fd2, 2), fd2).correction == "hands"


def test_transposition_is_one_edit():
    assert osa_distance("ab", "ba") == 1
    assert osa_distance("ca", "abc") == 3  # OSA, not unrestricted Damerau
    fd = FrequencyDict({"their": 1000})
    v = typo_check("thier", build_index(fd, 2), fd)
    assert (v.correction, v.distance) == ("their", 1)


def test_dictionary_word_never_distance_zero():
    fd = FrequencyDict({"hello": 5000, "hallo": 300})
    idx = build_index(fd, 2)
    v = typo_check("hello", idx, fd)
    assert v.distance != 0
    assert v.correction == "hallo"


letters = st.text(alphabet="abcde", max_size=8)


@settings(max_examples=400, deadline=None)
@given(letters, letters, st.sampled_from([None, 0, 1, 2]))
def test_osa_matches_reference(a, b, cap):
    ref = OSA.distance(a, b)
    got = osa_distance(a, b, cap)
    if cap is None:
        assert got == ref
    else:
        assert got == min(ref, cap + 1)


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="abcdef", max_size=7), st.sampled_from([1, 2]))
def test_deletes_enumeration(word, k):
    import itertools

    ref = {word}
    for r in range(1, k + 1):
        for drop in itertools.combinations(range(len(word)), r):
            ref.add("".join(c for i, c in enumerate(word) if i not in drop))
    assert deletes(word, k) == ref


@settings(max_examples=30, deadline=None)
@given(st.randoms(use_true_random=False), st.sampled_from([1, 2]))
def test_typo_check_matches_bruteforce(rnd, max_edit):
    alphabet = "abcdefgh"
    words = {"".join(rnd.choice(alphabet) for _ in range(rnd.randint(3, 8))) for _ in range(150)}
    counts = {w: rnd.randint(1, 400) for w in sorted(words)}
    fd = FrequencyDict(counts)
    idx = build_index(fd, max_edit)
    for _ in range(80):
        q = "".join(rnd.choice(alphabet) for _ in range(rnd.randint(3, 9)))
        v = typo_check(q, idx, fd)
        ref = oracles.typo_oracle(q, sorted(words), counts, max_edit=max_edit)
        assert ((v.correction, v.distance) if v.kind == TYPO else None) == ref


def test_index_snapshot_roundtrip(tmp_path):
    fd = FrequencyDict({"hello": 5000, "world": 300})
    idx = build_index(fd, 2)
    idx.save(tmp_path / "idx.bin")
    back = DeleteIndex.load(tmp_path / "idx.bin")
    assert back.max_edit == 2
    assert dict(back.buckets) == dict(idx.buckets)
    (tmp_path / "bad.bin").write_bytes(b"garbage")
    with pytest.raises(ValueError):
        DeleteIndex.load(tmp_path / "bad.bin")


def test_freq_dict_file(tmp_path):
    p = tmp_path / "f.tsv"
    p.write_text("Hello\t10\nworld\t0\n# c\nhello\t5\n", encoding="utf-8")
    assert FrequencyDict.from_file(p) == {"hello": 15}
    p.write_text("x\tnan\n", encoding="utf-8")
    with pytest.raises(ValueError):
        FrequencyDict.from_file(p)


def test_segment_examples():
    fd = FrequencyDict({"dating": 900, "app": 800, "cottage": 300, "core": 700, "short": 10})
    assert segment("datingapp", fd) .segments == ("dating", "app")
    assert segment("datingapp", fd).kind == CONCAT
    assert segment("short", fd).kind == CLEAN
    v = segment("cottagecore", fd)
    assert (v.kind, v.segments) == (CONCAT, ("cottage", "core"))


def test_segment_requires_two_parts_and_min_part():
    fd = FrequencyDict({"goblincore": 50, "go": 9999, "blincore": 5})
    assert segment("goblincore", fd).kind == CLEAN
    fd = FrequencyDict({"aaab": 5, "bb": 5})
    assert segment("aaabbb", fd).kind == CLEAN


def test_segment_prefers_fewest_parts_then_product():
    fd = FrequencyDict({"sun": 10, "flower": 10, "sunflow": 1, "ers": 1, "pot": 5, "sunflowerpot": 0})
    assert segment("sunflowerpot", fd).segments == ("sun", "flower", "pot")
    fd = FrequencyDict({"abc": 2, "defghi": 2, "abcdef": 10, "ghi": 10})
    assert segment("abcdefghi", fd).segments == ("abcdef", "ghi")


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_segment_matches_enumeration(rnd):
    alphabet = "abcd"
    words = {"".join(rnd.choice(alphabet) for _ in range(rnd.randint(2, 5))) for _ in range(40)}
    counts = {w: rnd.randint(1, 50) for w in sorted(words)}
    fd = FrequencyDict(counts)
    for _ in range(40):
        parts = [rnd.choice(sorted(words)) for _ in range(rnd.randint(1, 3))]
        s = "".join(parts)[:12] if rnd.random() < 0.7 else "".join(rnd.choice(alphabet) for _ in range(9))
        v = segment(s, fd)
        ref = oracles.segment_oracle(s, counts)
        assert (v.segments if v.kind == CONCAT else None) == ref
        if v.kind == CONCAT:
            assert "".join(v.segments) == s
            assert len(v.segments) >= 2 and all(p in fd and len(p) >= 3 for p in v.segments)


def test_batch_oracle_matches_scalar_oracle():
    rng = random.Random(5)
    words = sorted({"".join(rng.choice("abcde") for _ in range(rng.randint(4, 7))) for _ in range(150)})
    counts = {w: rng.randint(1, 1000) for w in words}
    queries = ["".join(rng.choice("abcde") for _ in range(rng.randint(3, 8))) for _ in range(300)]
    assert oracles.typo_oracle_batch(queries, words, counts) == [
        oracles.typo_oracle(q, words, counts) for q in queries]
