"""Cascade accounting, gold-standard cross-tabs, and reference-list recall."""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

logger = logging.getLogger(__name__)

# stage id -> display name, in cascade order
STAGES = (
    ("tokenization", "Tokenization"),
    ("vocab", "Vocabulary lookup"),
    ("pattern", "Pattern cleaning"),
    ("concat", "Concatenation detection"),
    ("typo", "Typo detection"),
    ("freq", "Freq. threshold + reintegration"),
    ("lang", "Foreign language detection"),
    ("vote", "Majority vote (NEOLOGISM)"),
    ("verify", "Verification"),
)
STAGE_NAMES = dict(STAGES)
STAGE_IDS = {name: sid for sid, name in STAGES}

GOLD_LABELS = ("NEOLOGISM", "ENTITY", "FOREIGN", "NONE")
LEXICAL_INNOVATION = ("NEOLOGISM", "ENTITY")
RECALL_STATUSES = ("TP", "FN", "PRE15", "EXCL")


def round_half_up(x: float, places: int = 0) -> Decimal:
    q = Decimal(1).scaleb(-places)
    return Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP)


def pct(n: int, total: int) -> float:
    return float(round_half_up(100.0 * n / total, 1)) if total else 0.0


# -- cascade report --------------------------------------------------------

@dataclass
class StageRow:
    stage: str
    remaining: int
    removed: int = 0
    reintegrated: int = 0


class ConservationError(AssertionError):
    pass


@dataclass
class CascadeReport:
    rows: list = field(default_factory=list)

    def add(self, stage: str, remaining: int, removed: int = 0, reintegrated: int = 0) -> StageRow:
        row = StageRow(stage, remaining, removed, reintegrated)
        if self.rows:
            prev = self.rows[-1].remaining
            if prev - removed + reintegrated != remaining:
                raise ConservationError(
                    f"{stage}: {prev} - {removed} + {reintegrated} != {remaining}"
                )
        self.rows.append(row)
        return row

    def check(self) -> None:
        for prev, row in zip(self.rows, self.rows[1:]):
            if prev.remaining - row.removed + row.reintegrated != row.remaining:
                raise ConservationError(f"conservation violated at {row.stage}")

    @property
    def initial(self) -> int:
        return self.rows[0].remaining if self.rows else 0

    @property
    def final(self) -> int:
        return self.rows[-1].remaining if self.rows else 0

    @property
    def compression_ratio(self) -> float | None:
        if not self.final:
            return None
        return self.initial / self.final

    def ratio_text(self) -> str:
        r = self.compression_ratio
        if r is None:
            return "∞"
        return f"{int(round_half_up(r)):,}:1"

    def to_dict(self) -> dict:
        return {
            "stages": [asdict(r) for r in self.rows],
            "compression_ratio": self.compression_ratio,
            "compression_ratio_text": self.ratio_text(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CascadeReport":
        rep = cls()
        for r in d["stages"]:
            rep.rows.append(StageRow(**r))
        rep.check()
        return rep

    @classmethod
    def from_counts(cls, rows) -> "CascadeReport":
        """Build from ``(stage, remaining[, removed, reintegrated])`` tuples.

        Missing removed counts are inferred as ``previous + reintegrated - remaining``.
        """
        rep = cls()
        for r in rows:
            stage, remaining = r[0], int(r[1])
            reint = int(r[3]) if len(r) > 3 and str(r[3]).strip() else 0
            if len(r) > 2 and str(r[2]).strip():
                removed = int(r[2])
            else:
                removed = rep.rows[-1].remaining + reint - remaining if rep.rows else 0
            rep.add(stage, remaining, removed, reint)
        return rep


def read_counts_tsv(path) -> CascadeReport:
    """``stage<TAB>remaining[<TAB>removed<TAB>reintegrated]``; digits may carry commas."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            cols = [c.strip().replace(",", "") for c in line.rstrip("\n").split("\t")]
            cols[0] = line.split("\t")[0].strip()
            if cols[1].lower() == "remaining":
                continue
            rows.append(cols)
    return CascadeReport.from_counts(rows)


def render_report(rep: CascadeReport) -> str:
    """Plain-text cascade table; stage order follows the cascade, concatenation before typo."""
    header = f"{'Stage':<34}{'Remaining':>15}{'Removed':>15}{'Reintegrated':>15}"
    lines = [
        "Filtering cascade (stage order: concatenation detection precedes typo detection)",
        header,
        "-" * len(header),
    ]
    for r in rep.rows:
        name = STAGE_NAMES.get(r.stage, r.stage)
        reint = f"{r.reintegrated:,}" if r.reintegrated else ""
        lines.append(f"{name:<34}{r.remaining:>15,}{r.removed:>15,}{reint:>15}")
    lines.append("-" * len(header))
    if rep.compression_ratio is None:
        logger.warning("no final candidates: compression ratio undefined")
    lines.append(f"Compression ratio: {rep.ratio_text()} ({rep.initial:,} -> {rep.final:,})")
    return "\n".join(lines) + "\n"


def report(rep: CascadeReport, out_dir=None) -> str:
    """Render the table; with ``out_dir`` also write report.txt and report.json."""
    text = render_report(rep)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.txt").write_text(text, encoding="utf-8")
        (out_dir / "report.json").write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n",
                                             encoding="utf-8")
    return text


# -- gold evaluation -------------------------------------------------------

def read_gold(path) -> dict:
    """``surface<TAB>label[<TAB>wf_tag]`` -> {surface: (label, tag)}; duplicates are fatal."""
    gold = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.rstrip("\n").split("\t")
            surface, label = cols[0].strip(), cols[1].strip().upper()
            if label not in GOLD_LABELS:
                raise ValueError(f"{path}:{lineno}: unknown gold label {label!r}")
            if surface in gold:
                raise ValueError(f"{path}:{lineno}: duplicate gold surface {surface!r}")
            gold[surface] = (label, cols[2].strip() if len(cols) > 2 else "")
    return gold


@dataclass
class GoldSummary:
    total: int
    counts: dict
    crosstab: dict  # (pipeline label, gold label) -> n
    missing: list

    @property
    def lexical_innovation(self) -> int:
        return sum(self.counts[l] for l in LEXICAL_INNOVATION)

    @property
    def non_neologism(self) -> int:
        return self.total - self.lexical_innovation

    def percent(self, label: str) -> float:
        return pct(self.counts[label], self.total)

    @property
    def lexical_innovation_pct(self) -> float:
        return pct(self.lexical_innovation, self.total)

    @property
    def non_neologism_pct(self) -> float:
        return pct(self.non_neologism, self.total)

    def render(self) -> str:
        lines = [
            f"{'Gold label':<24}{'Count':>8}{'%':>8}",
            f"{'Lexical innovation':<24}{self.lexical_innovation:>8,}{self.lexical_innovation_pct:>8.1f}",
            f"{'  of which NEOLOGISM':<24}{self.counts['NEOLOGISM']:>8,}{self.percent('NEOLOGISM'):>8.1f}",
            f"{'  of which ENTITY':<24}{self.counts['ENTITY']:>8,}{self.percent('ENTITY'):>8.1f}",
            f"{'Non-neologism':<24}{self.non_neologism:>8,}{self.non_neologism_pct:>8.1f}",
            f"{'  of which FOREIGN':<24}{self.counts['FOREIGN']:>8,}{self.percent('FOREIGN'):>8.1f}",
            f"{'  of which NONE':<24}{self.counts['NONE']:>8,}{self.percent('NONE'):>8.1f}",
            f"{'Total':<24}{self.total:>8,}{100 if self.total else 0:>8}",
            "",
            "Pipeline label x gold label:",
            f"{'':<12}" + "".join(f"{g:>11}" for g in GOLD_LABELS),
        ]
        pipeline_labels = sorted({p for p, _ in self.crosstab})
        for p in pipeline_labels:
            lines.append(f"{p:<12}" + "".join(f"{self.crosstab.get((p, g), 0):>11}" for g in GOLD_LABELS))
        if self.missing:
            lines.append(f"\n{len(self.missing)} candidates missing from gold (excluded): "
                         + ", ".join(self.missing[:20]))
        return "\n".join(lines) + "\n"


def eval_gold(candidates: dict, gold: dict) -> GoldSummary:
    """``candidates`` maps surface -> pipeline final label; ``gold`` from :func:`read_gold`."""
    counts = Counter({l: 0 for l in GOLD_LABELS})
    crosstab: Counter = Counter()
    missing = []
    for surface in sorted(candidates):
        if surface not in gold:
            missing.append(surface)
            continue
        g = gold[surface][0]
        counts[g] += 1
        crosstab[str(candidates[surface]), g] += 1
    if missing:
        logger.warning("%d candidates have no gold label", len(missing))
    return GoldSummary(sum(counts.values()), dict(counts), dict(crosstab), missing)


# -- recall against a reference list ---------------------------------------

def normalize_status(raw: str) -> str:
    s = raw.strip().upper().replace(".", "").replace("-", "").replace("_", "")
    if s not in RECALL_STATUSES:
        raise ValueError(f"unknown recall status {raw!r}")
    return s


@dataclass
class RecallRecord:
    surface: str
    year: str
    source: str
    status: str
    lost_at: str = ""


def read_reference(path) -> list:
    """``surface<TAB>year<TAB>source<TAB>status``; an optional header row is skipped."""
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for cols in csv.reader(fh, delimiter="\t"):
            if not cols or not cols[0].strip() or cols[0].startswith("#"):
                continue
            if cols[0].strip().lower() in ("surface", "word"):
                continue
            rows.append(RecallRecord(cols[0].strip().lower(), cols[1].strip(), cols[2].strip(),
                                     normalize_status(cols[3])))
    return rows


@dataclass
class RecallSummary:
    records: list
    counts: dict
    lost_at: dict

    @property
    def tp(self) -> int:
        return self.counts.get("TP", 0)

    @property
    def fn(self) -> int:
        return self.counts.get("FN", 0)

    @property
    def recall(self) -> float | None:
        denom = self.tp + self.fn
        return self.tp / denom if denom else None

    def render(self) -> str:
        r = self.recall
        lines = [f"{k}: {self.counts.get(k, 0)}" for k in RECALL_STATUSES]
        lines.append(f"Recall: {self.tp}/{self.tp + self.fn} = "
                     + ("n/a" if r is None else f"{float(round_half_up(100 * r, 1)):.1f}%"))
        if self.lost_at:
            lines.append("False negatives by losing stage:")
            for stage, n in sorted(self.lost_at.items(), key=lambda kv: (-kv[1], kv[0])):
                lines.append(f"  {STAGE_NAMES.get(stage, stage)}: {n}")
        return "\n".join(lines) + "\n"


def eval_recall(reference: list, detected=None, attribute=None) -> RecallSummary:
    """Recall = TP / (TP + FN) over the reference list.

    Without ``detected`` the listed statuses are taken as given. With a set
    of detected surfaces, every item not marked PRE15/EXCL is re-scored as
    TP or FN, and ``attribute(surface)`` names the stage that lost each FN.
    """
    records = []
    for rec in reference:
        rec = RecallRecord(**asdict(rec))
        if detected is not None and rec.status in ("TP", "FN"):
            rec.status = "TP" if rec.surface in detected else "FN"
        if rec.status == "FN" and attribute is not None:
            rec.lost_at = attribute(rec.surface)
        records.append(rec)
    counts = Counter(r.status for r in records)
    lost = Counter(r.lost_at for r in records if r.status == "FN" and r.lost_at)
    return RecallSummary(records, dict(counts), dict(lost))
