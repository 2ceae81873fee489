#!/usr/bin/env python3
"""Regenerate the bundled language seed lists and the English test dictionary.

Requires the ``wordfreq`` package, which is NOT a runtime dependency; the
outputs are committed so the package and its tests stay hermetic.

    python tools/build_seed_lists.py
"""

import argparse
import unicodedata
from pathlib import Path

import wordfreq

ROOT = Path(__file__).resolve().parent.parent
LANG_DIR = ROOT / "src" / "neocascade" / "data" / "lang"
TEST_DATA = ROOT / "tests" / "data"

# wordfreq code -> ISO 639-1 code used by the detector
LATIN_LANGS = {
    "ca": "ca", "cs": "cs", "da": "da", "de": "de", "en": "en", "es": "es",
    "fi": "fi", "fil": "tl", "fr": "fr", "hu": "hu", "id": "id", "is": "is",
    "it": "it", "lt": "lt", "lv": "lv", "ms": "ms", "nb": "nb", "nl": "nl",
    "pl": "pl", "pt": "pt", "ro": "ro", "sh": "hr", "sk": "sk", "sl": "sl",
    "sv": "sv", "tr": "tr", "vi": "vi",
}


def fold(word):
    decomposed = unicodedata.normalize("NFKD", word.lower())
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    return "".join(c for c in stripped if "a" <= c <= "z")


def seed_words(lang, n):
    out = []
    seen = set()
    for w in wordfreq.top_n_list(lang, n * 3):
        if not w.isalpha():
            continue
        f = fold(w)
        if len(f) < 2 or f in seen:
            continue
        seen.add(f)
        out.append(f)
        if len(out) >= n:
            break
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed-size", type=int, default=3000)
    ap.add_argument("--dict-size", type=int, default=30000)
    args = ap.parse_args()

    LANG_DIR.mkdir(parents=True, exist_ok=True)
    for wf_code, code in sorted(LATIN_LANGS.items()):
        words = seed_words(wf_code, args.seed_size)
        path = LANG_DIR / f"{code}.txt"
        path.write_text("\n".join(words) + "\n", encoding="utf-8")
        print(f"{code}: {len(words)} words -> {path.relative_to(ROOT)}")

    # English frequency dictionary for synthetic corpora (counts per billion)
    TEST_DATA.mkdir(parents=True, exist_ok=True)
    lines = []
    seen = set()
    for w in wordfreq.top_n_list("en", args.dict_size * 2):
        if not (w.isascii() and w.isalpha()) or w in seen:
            continue
        seen.add(w)
        count = max(1, round(wordfreq.word_frequency(w, "en") * 1e9))
        lines.append(f"{w}\t{count}")
        if len(lines) >= args.dict_size:
            break
    (TEST_DATA / "en_freq.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"en_freq.tsv: {len(lines)} entries")


if __name__ == "__main__":
    main()
