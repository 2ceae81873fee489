import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neocascade.corpus import TokenType
from neocascade.lang import (DEFAULT_INVENTORY, LangVerdict, NgramDetector, fold_ascii, gate, is_foreign,
                             make_detector)


@pytest.fixture(scope="module")
def detector():
    return NgramDetector.bundled()


class Fixed:
    """Detector stub returning preset verdicts."""

    target = "en"

    def __init__(self, verdicts):
        self.verdicts = verdicts

    def detect(self, surface):
        return self.verdicts[surface]


def test_inventory_has_47_codes():
    assert len(DEFAULT_INVENTORY) == 47 and len(set(DEFAULT_INVENTORY)) == 47
    assert "en" in DEFAULT_INVENTORY


def test_spanish_word_confidently_foreign(detector):
    v = detector.detect("además")
    assert v.language == "es"
    assert v.confidence >= 0.75


def test_taglish_token_kept(detector):
    v = detector.detect("naghost")
    assert not is_foreign(v, "en", 0.75)


def test_english_control(detector):
    assert detector.detect("the").language == "en"


def test_short_surface_defaults_to_target(detector):
    assert detector.detect("ok") == LangVerdict("en", 0.0)


@pytest.mark.parametrize("word", ["doomscrolling", "covidiot", "youtuber", "ghosting", "rizz", "vtuber",
                                  "enshittification", "deplatforming", "breadcrumbing", "finfluencer"])
def test_english_coinages_not_removed(detector, word):
    assert not is_foreign(detector.detect(word), "en", 0.75)


@settings(max_examples=100, deadline=None)
@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyzéü", min_size=0, max_size=15))
def test_verdict_bounds_and_determinism(detector, word):
    v = detector.detect(word)
    assert 0.0 <= v.confidence <= 1.0
    assert v.language in detector.languages
    assert detector.detect(word) == v


def test_gate_rule():
    toks = [TokenType("a1", 5), TokenType("b1", 5), TokenType("c1", 5)]
    det = Fixed({"a1": LangVerdict("de", 0.80), "b1": LangVerdict("de", 0.60), "c1": LangVerdict("en", 0.99)})
    survivors, removed = gate(toks, det, 0.75)
    assert [t.surface for t in survivors] == ["b1", "c1"]
    assert removed == 1
    assert toks[0].trace[-1][0] == "lang"


def test_gate_boundaries():
    verdicts = {"a1": LangVerdict("de", 1.0), "b1": LangVerdict("fr", 0.999), "c1": LangVerdict("en", 1.0),
                "d1": LangVerdict("es", 0.0)}
    det = Fixed(verdicts)

    def run(th):
        return [t.surface for t in gate([TokenType(s, 1) for s in sorted(verdicts)], det, th)[0]]

    assert run(1.0) == ["b1", "c1", "d1"]
    assert run(0.0) == ["c1"]
    with pytest.raises(ValueError):
        gate([], det, 1.5)


def test_profiles_roundtrip(tmp_path):
    det = NgramDetector.from_words({"en": ["the", "and", "with"], "de": ["und", "nicht", "mit"]})
    det.save(tmp_path)
    back = NgramDetector.load(tmp_path)
    for w in ("without", "nichts", "mitten"):
        assert back.detect(w) == det.detect(w)
    sub = make_detector("ngram", ("en", "de"), "en", tmp_path)
    assert sub.languages == ("de", "en")


def test_fold_ascii():
    assert fold_ascii("Además") == "ademas"


def test_unknown_backend():
    with pytest.raises(ValueError):
        make_detector("bogus")


def test_lingua_adapter():
    pytest.importorskip("lingua")
    det = make_detector("lingua", ("en", "es", "de"), "en")
    v = det.detect("además")
    assert v.language == "es"
    assert 0.0 <= v.confidence <= 1.0
