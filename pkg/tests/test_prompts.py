import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neocascade.corpus import Context
from neocascade.llm.prompts import (MULTI, PARSE_FAIL, SINGLE, Label, PromptBatch, escape_context,
                                    parse_response, render_prompt)

GOLDEN = Path(__file__).parent / "golden"


def _batch():
    data = json.loads((GOLDEN / "batch.json").read_text(encoding="utf-8"))
    toks = [(t["surface"], [Context(**c) for c in t["contexts"]]) for t in data["tokens"]]
    s = data["single"]
    return toks, (s["surface"], [Context(**c) for c in s["contexts"]])


def test_multi_golden():
    toks, _ = _batch()
    assert render_prompt(PromptBatch(toks, MULTI)) == (GOLDEN / "multi_batch10.txt").read_text(encoding="utf-8")


def test_single_golden():
    _, single = _batch()
    out = render_prompt(PromptBatch([single], SINGLE))
    assert out == (GOLDEN / "single_retry.txt").read_text(encoding="utf-8")
    assert out.rstrip().endswith("sharent:LABEL")
    assert "Answer with ONLY the label" in out


def test_one_token_no_contexts():
    out = render_prompt(PromptBatch([("quietquit", [])], MULTI))
    assert "TOKENS:\nTOKEN: quietquit\n\nOUTPUT:" in out
    assert "context_1" not in out


def test_at_most_three_contexts():
    ctx = [Context(f"s{i}", f"text {i}") for i in range(5)]
    out = render_prompt(PromptBatch([("word", ctx)], MULTI))
    assert "context_3" in out and "context_4" not in out


def test_batch_limits():
    with pytest.raises(ValueError):
        render_prompt(PromptBatch([], MULTI))
    with pytest.raises(ValueError):
        render_prompt(PromptBatch([(f"t{i}", []) for i in range(11)], MULTI))
    with pytest.raises(ValueError):
        render_prompt(PromptBatch([("a", []), ("b", [])], SINGLE))


def test_escape_rule():
    assert escape_context('she said "hi"') == 'she said \\"hi\\"'
    assert escape_context("a\\b") == "a\\\\b"
    assert escape_context("line\nbreak\t tab") == "line break tab"


def test_parse_examples():
    assert parse_response("doomscroll:NEOLOGISM", ["doomscroll"]) == {"doomscroll": Label.NEOLOGISM}
    assert parse_response("doomscroll: maybe a neologism?", ["doomscroll"]) == {"doomscroll": PARSE_FAIL}


def test_partial_parse():
    toks = [f"tok{i}" for i in range(10)]
    text = "\n".join(f"{t}:NONE" for t in toks[:8])
    out = parse_response(text, toks)
    assert sum(v == PARSE_FAIL for v in out.values()) == 2
    assert out["tok0"] == Label.NONE


def test_parse_lenient_whitespace_and_case():
    out = parse_response("  Rizz :  neologism  \nGOOGLE:entity\n", ["rizz", "google"])
    assert out == {"rizz": Label.NEOLOGISM, "google": Label.ENTITY}


def test_parse_rejects_other_labels_and_conflicts():
    out = parse_response("a:UNKNOWN\nb:NONE\nb:ENTITY\nc:NEOLOGISM.", ["a", "b", "c"])
    assert out == {"a": PARSE_FAIL, "b": PARSE_FAIL, "c": PARSE_FAIL}


def test_garbage_response():
    assert parse_response("I cannot help with that.", ["x", "y"]) == {"x": PARSE_FAIL, "y": PARSE_FAIL}
    assert parse_response("", ["x"]) == {"x": PARSE_FAIL}


surfaces = st.lists(st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=3, max_size=12),
                    min_size=1, max_size=10, unique=True)
label_lists = st.lists(st.sampled_from(["ENTITY", "NEOLOGISM", "FOREIGN", "NONE"]), min_size=10, max_size=10)


@settings(max_examples=100, deadline=None)
@given(surfaces, label_lists)
def test_echo_roundtrip(toks, labels):
    table = dict(zip(toks, labels))
    prompt = render_prompt(PromptBatch([(t, [Context("sub", f"about {t}")]) for t in toks], MULTI))
    # echo endpoint: answer each TOKEN line of the prompt from the table
    answer = "\n".join(f"{line[7:]}:{table[line[7:]]}" for line in prompt.splitlines() if line.startswith("TOKEN: "))
    assert parse_response(answer, toks) == {t: Label(l) for t, l in table.items()}
