"""Token-level language identification and the foreign-language gate.

The built-in detector scores a token's character n-grams against
per-language profiles trained from bundled seed word lists. Confidence is
the gap between the two highest softmax probabilities, so a token that two
languages explain equally well gets a confidence near zero and is kept.
"""

from __future__ import annotations

import logging
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

logger = logging.getLogger(__name__)

PROFILE_HEADER = "# neocascade-ngram-profile v1"

# a common 47-language inventory; the built-in detector covers those with
# bundled seed lists and logs the rest as unavailable
DEFAULT_INVENTORY = (
    "af", "ar", "az", "be", "bg", "bn", "bs", "ca", "cs", "cy", "da", "de",
    "el", "en", "eo", "es", "et", "eu", "fa", "fi", "fr", "ga", "he", "hi",
    "hr", "hu", "hy", "id", "is", "it", "ja", "ko", "lt", "lv", "ms", "nb",
    "nl", "pl", "pt", "ro", "ru", "sk", "sl", "sv", "tl", "tr", "vi",
)


@dataclass(frozen=True)
class LangVerdict:
    language: str
    confidence: float


def fold_ascii(surface: str) -> str:
    decomposed = unicodedata.normalize("NFKD", surface.lower())
    return "".join(c for c in decomposed if "a" <= c <= "z")


def _ngrams(word: str, n: int):
    padded = f"^{word}$"
    return [padded[i:i + n] for i in range(len(padded) - n + 1)]


class NgramDetector:
    """Character n-gram language identifier.

    ``profiles`` maps language code -> Counter of n-gram counts, holding
    every order in ``orders``. A token's score for a language is the average
    over orders of the mean smoothed log-probability of its n-grams.
    """

    def __init__(self, profiles: dict, target: str = "en", orders=(1, 2, 3, 4, 5),
                 smoothing: float = 0.5, temperature: float = 0.2):
        if target not in profiles:
            raise ValueError(f"target language {target!r} has no profile")
        self.orders = tuple(sorted(orders))
        self.min_len = 3
        self.target = target
        self.temperature = temperature
        self.languages = tuple(sorted(profiles))
        self.profiles = profiles
        self._logp = {}
        self._floor = {}
        for n in self.orders:
            vocab = set()
            for counts in profiles.values():
                vocab.update(g for g in counts if len(g) == n)
            v = len(vocab) + 1
            for lang in self.languages:
                counts = {g: c for g, c in profiles[lang].items() if len(g) == n}
                total = sum(counts.values()) + smoothing * v
                self._logp[lang, n] = {g: math.log((c + smoothing) / total) for g, c in counts.items()}
                self._floor[lang, n] = math.log(smoothing / total)

    @classmethod
    def from_words(cls, words_by_lang: dict, target: str = "en", orders=(1, 2, 3, 4, 5), **kw) -> "NgramDetector":
        profiles = {}
        for lang, words in words_by_lang.items():
            c = Counter()
            for rank, w in enumerate(words, 1):
                w = fold_ascii(w)
                if not w:
                    continue
                # seed lists are frequency-ranked; Zipf weight approximates running text
                weight = max(1, round(1000 / rank))
                for n in orders:
                    for g in _ngrams(w, n):
                        c[g] += weight
            profiles[lang] = c
        return cls(profiles, target=target, orders=orders, **kw)

    @classmethod
    def bundled(cls, inventory=DEFAULT_INVENTORY, target: str = "en", **kw) -> "NgramDetector":
        root = resources.files("neocascade").joinpath("data/lang")
        words, missing = {}, []
        for code in inventory:
            f = root.joinpath(f"{code}.txt")
            if f.is_file():
                words[code] = f.read_text("utf-8").split()
            else:
                missing.append(code)
        if missing:
            logger.info("no bundled profile for: %s", ", ".join(missing))
        return cls.from_words(words, target=target, **kw)

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        orders = ",".join(map(str, self.orders))
        for lang, counts in self.profiles.items():
            with open(directory / f"{lang}.tsv", "w", encoding="utf-8") as fh:
                fh.write(f"{PROFILE_HEADER} orders={orders}\n")
                for g in sorted(counts):
                    fh.write(f"{g}\t{counts[g]}\n")

    @classmethod
    def load(cls, directory, inventory=None, target: str = "en", **kw) -> "NgramDetector":
        profiles = {}
        orders = None
        for path in sorted(Path(directory).glob("*.tsv")):
            lang = path.stem
            if inventory is not None and lang not in inventory:
                continue
            with open(path, encoding="utf-8") as fh:
                header = fh.readline().strip()
                if not header.startswith(PROFILE_HEADER):
                    raise ValueError(f"{path}: not an n-gram profile")
                here = tuple(int(x) for x in header.rsplit("orders=", 1)[1].split(","))
                if orders is not None and here != orders:
                    raise ValueError("profiles disagree on n-gram orders")
                orders = here
                counts = Counter()
                for line in fh:
                    g, c = line.rstrip("\n").split("\t")
                    counts[g] = int(c)
            profiles[lang] = counts
        if not profiles:
            raise ValueError(f"no n-gram profiles in {directory}")
        return cls(profiles, target=target, orders=orders, **kw)

    def scores(self, surface: str) -> dict:
        word = fold_ascii(surface)
        grams = {n: _ngrams(word, n) for n in self.orders}
        out = {}
        for lang in self.languages:
            total = 0.0
            for n, gs in grams.items():
                table, floor = self._logp[lang, n], self._floor[lang, n]
                total += sum(table.get(g, floor) for g in gs) / len(gs)
            out[lang] = total / len(grams)
        return out

    def detect(self, surface: str) -> LangVerdict:
        folded = fold_ascii(surface)
        if len(folded) < self.min_len or len(self.languages) < 2:
            return LangVerdict(self.target, 0.0)
        s = self.scores(folded)
        top = max(s.values())
        exp = {lang: math.exp((v - top) / self.temperature) for lang, v in s.items()}
        z = sum(exp.values())
        ranked = sorted(exp.items(), key=lambda kv: (-kv[1], kv[0]))
        p1, p2 = ranked[0][1] / z, ranked[1][1] / z
        return LangVerdict(ranked[0][0], min(1.0, max(0.0, p1 - p2)))


class LinguaDetector:
    """Adapter over the ``lingua`` package (optional dependency)."""

    def __init__(self, inventory=DEFAULT_INVENTORY, target: str = "en"):
        try:
            from lingua import IsoCode639_1, LanguageDetectorBuilder
        except ImportError as exc:
            raise RuntimeError("lingua backend requested but lingua-language-detector is not installed") from exc
        langs = []
        for code in inventory:
            try:
                langs.append(IsoCode639_1.from_str(code))
            except ValueError:
                logger.info("lingua does not know %s", code)
        self.target = target
        self._detector = LanguageDetectorBuilder.from_iso_codes_639_1(*langs).build()

    def detect(self, surface: str) -> LangVerdict:
        values = self._detector.compute_language_confidence_values(surface)
        if not values:
            return LangVerdict(self.target, 0.0)
        best = values[0]
        return LangVerdict(best.language.iso_code_639_1.name.lower(), float(best.value))


def make_detector(backend: str = "ngram", inventory=DEFAULT_INVENTORY, target: str = "en",
                  profiles_dir=None):
    if backend == "lingua":
        return LinguaDetector(inventory, target)
    if backend != "ngram":
        raise ValueError(f"unknown language backend {backend!r}")
    if profiles_dir:
        return NgramDetector.load(profiles_dir, inventory=set(inventory), target=target)
    return NgramDetector.bundled(inventory, target=target)


def detect(surface: str, detector) -> LangVerdict:
    return detector.detect(surface)


def is_foreign(verdict: LangVerdict, target: str, threshold: float) -> bool:
    return verdict.language != target and verdict.confidence >= threshold


def gate(tokens, detector, threshold: float = 0.75, target: str | None = None, stage: str = "lang"):
    """Drop tokens confidently identified as another language."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    target = target or detector.target
    survivors, removed = [], 0
    for t in tokens:
        v = detector.detect(t.surface)
        if is_foreign(v, target, threshold):
            removed += 1
            t.mark(stage, f"drop:{v.language}:{v.confidence:.3f}")
        else:
            t.mark(stage, f"pass:{v.language}:{v.confidence:.3f}")
            survivors.append(t)
    return survivors, removed
