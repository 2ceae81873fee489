"""End-to-end cascade with per-stage checkpoints.

Run directory layout::

    manifest.json            stage hashes and counts
    stages/NN_<stage>.tsv    survivor snapshot after each rule stage
    contexts.jsonl           harvested contexts for LLM candidates
    llm/votes.<name>.jsonl   append-only results, one file per voter
    llm/verify.<name>.jsonl  append-only verifier results
    classified.jsonl         every LLM-stage token with its classification
    candidates.jsonl         final export (candidates.tsv with --tsv)
    report.txt, report.json  cascade accounting

A rerun with the same config reuses every checkpoint whose chained hash
still matches and recomputes from the first stale stage onwards.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
import time
from dataclasses import asdict
from pathlib import Path

from . import corpus as ingest
from . import freq as freq_gate
from . import lang as lang_gate
from .config import PipelineConfig, stage_hashes
from .evaluate import STAGES, CascadeReport, StageRow, report
from .llm.prompts import Label
from .llm.providers import EndpointClient, make_provider
from .llm.runner import aggregate, classify_all, verify
from .patterns import PASS, check, load_rule_pack
from .spell import CONCAT, TYPO, DeleteIndex, FrequencyDict, build_index, segment, typo_check
from .vocab import load_manifest, load_vocab

logger = logging.getLogger(__name__)

ALIVE = "alive"
FLAGGED = "flagged"
SNAPSHOT_HEADER = "# neocascade-snapshot v1"
RULE_STAGES = ("tokenization", "vocab", "pattern", "concat", "typo", "freq", "lang")
STAGE_ORDER = tuple(s for s, _ in STAGES)


# -- snapshots -------------------------------------------------------------

def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_snapshot(path: Path, stage: str, digest: str, tokens, status: dict | None = None) -> None:
    """TSV: surface, count, n_subreddits, status, flags, trace."""
    lines = [f"{SNAPSHOT_HEADER} stage={stage} hash={digest}"]
    for t in sorted(tokens, key=lambda t: t.surface):
        st = (status or {}).get(t.surface, ALIVE)
        trace = "|".join(f"{s}={d}" for s, d in t.trace)
        lines.append(f"{t.surface}\t{t.count}\t{t.n_subreddits}\t{st}\t{','.join(sorted(t.flags))}\t{trace}")
    _atomic_write(path, "\n".join(lines) + "\n")


def read_snapshot(path: Path):
    """Returns (tokens, status map)."""
    tokens, status = [], {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith(SNAPSHOT_HEADER):
            raise ValueError(f"{path}: not a stage snapshot")
        for line in fh:
            surface, count, nsubs, st, flags, trace = line.rstrip("\n").split("\t")
            t = ingest.TokenType(surface, int(count), n_subreddits=int(nsubs))
            t.flags = set(flags.split(",")) if flags else set()
            t.trace = [tuple(item.split("=", 1)) for item in trace.split("|")] if trace else []
            tokens.append(t)
            status[surface] = st
    return tokens, status


def snapshot_path(run_dir: Path, stage: str) -> Path:
    return Path(run_dir) / "stages" / f"{STAGE_ORDER.index(stage) + 1:02d}_{stage}.tsv"


# -- pipeline --------------------------------------------------------------

class Pipeline:
    def __init__(self, cfg: PipelineConfig, corpus, run_dir, providers: dict | None = None,
                 sleep=time.sleep):
        self.cfg = cfg
        self.corpus = [Path(p) for p in ([corpus] if isinstance(corpus, (str, Path)) else corpus)]
        self.run_dir = Path(run_dir)
        self.providers = providers or {}
        self.sleep = sleep
        self.hashes = stage_hashes(cfg, self.corpus)
        self._index = None
        self._freq = None

    # resources, loaded on first use
    def stopwords(self):
        return ingest.load_stopwords(self.cfg.stopwords or None, self.cfg.target_language)

    def vocab(self):
        if self.cfg.vocab_manifest:
            return load_manifest(self.cfg.vocab_manifest)
        return load_vocab(self.cfg.vocab_files, name="reference")

    def rules(self):
        c = self.cfg
        return load_rule_pack(c.rule_pack or None, c.target_language, min_len=c.min_len, max_len=c.max_len,
                              spam_len=c.spam_len, spam_unique_max=c.spam_unique_max,
                              entropy_min=c.entropy_min, entropy_min_len=c.entropy_min_len)

    def freq_dict(self) -> FrequencyDict:
        if self._freq is None:
            self._freq = FrequencyDict.from_file(self.cfg.freq_dict) if self.cfg.freq_dict else FrequencyDict()
        return self._freq

    def delete_index(self) -> DeleteIndex:
        if self._index is None:
            cache = self.run_dir / "cache" / f"delete-index-{self.hashes['typo']}.bin"
            if cache.exists():
                self._index = DeleteIndex.load(cache)
            else:
                self._index = build_index(self.freq_dict(), self.cfg.max_edit)
                cache.parent.mkdir(parents=True, exist_ok=True)
                self._index.save(cache)
        return self._index

    def detector(self):
        c = self.cfg
        return lang_gate.make_detector(c.lang_backend, c.lang_inventory, c.target_language,
                                       c.lang_profiles or None)

    def client(self, name: str) -> EndpointClient:
        ep = self.cfg.endpoints[name]
        provider = self.providers.get(name) or make_provider(ep)
        return EndpointClient(provider, sleep=self.sleep)

    def posts(self):
        for path in self.corpus:
            yield from ingest.read_posts(path, self.cfg.corpus_format)

    # manifest
    def _manifest_path(self) -> Path:
        return self.run_dir / "manifest.json"

    def load_manifest(self) -> dict:
        p = self._manifest_path()
        if p.exists():
            return json.loads(p.read_text(encoding="utf-8"))
        return {"stages": {}}

    def _save_manifest(self, manifest: dict) -> None:
        _atomic_write(self._manifest_path(), json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    # stages
    def _stage(self, stage: str, tokens, status):
        c = self.cfg
        alive = [t for t in tokens if status.get(t.surface, ALIVE) == ALIVE]
        flagged = [t for t in tokens if status.get(t.surface, ALIVE) == FLAGGED]
        if stage == "vocab":
            vocab = self.vocab()
            keep = []
            for t in alive:
                if t.surface not in vocab.entries:
                    t.mark("vocab", "pass")
                    keep.append(t)
            return keep, {}, len(alive) - len(keep), 0
        if stage == "pattern":
            rules = self.rules()
            keep = []
            for t in alive:
                verdict = check(t.surface, rules)
                if verdict == PASS:
                    t.mark("pattern", "pass")
                    keep.append(t)
            return keep, {}, len(alive) - len(keep), 0
        if stage == "concat":
            fd = self.freq_dict()
            new_status, n = {}, 0
            for t in alive:
                v = segment(t.surface, fd, c.concat_min_len, c.concat_min_part)
                if v.kind == CONCAT:
                    t.flags.add(CONCAT)
                    t.mark("concat", "CONCAT:" + "+".join(v.segments))
                    new_status[t.surface] = FLAGGED
                    n += 1
                else:
                    t.mark("concat", "pass")
            for t in flagged:
                new_status[t.surface] = FLAGGED
            return alive + flagged, new_status, n, 0
        if stage == "typo":
            fd, idx = self.freq_dict(), self.delete_index()
            new_status, n = {}, 0
            for t in alive:
                v = typo_check(t.surface, idx, fd, c.typo_min_len, c.typo_freq_floor, c.typo_floor_on, t.count)
                if v.kind == TYPO:
                    t.flags.add(TYPO)
                    t.mark("typo", f"TYPO:{v.correction}/{v.distance}")
                    new_status[t.surface] = FLAGGED
                    n += 1
                else:
                    t.mark("typo", "pass")
            for t in flagged:
                new_status[t.surface] = FLAGGED
            return alive + flagged, new_status, n, 0
        if stage == "freq":
            survivors, _ = freq_gate.gate(sorted(alive + flagged, key=lambda t: t.surface),
                                          c.freq_threshold, c.min_subreddits)
            reint = sum(1 for t in survivors if t.flags & {TYPO, CONCAT})
            removed = len(alive) - (len(survivors) - reint)
            return survivors, {}, removed, reint
        if stage == "lang":
            survivors, removed = lang_gate.gate(alive, self.detector(), c.lang_confidence, c.target_language)
            return survivors, {}, removed, 0
        raise ValueError(stage)

    def run(self, stop_after: str | None = None, tsv: bool = False) -> CascadeReport:
        """Run (or resume) the cascade; ``stop_after`` ends early after that stage."""
        if stop_after is not None and stop_after not in STAGE_ORDER:
            raise ValueError(f"unknown stage {stop_after!r}")
        self.run_dir.mkdir(parents=True, exist_ok=True)
        manifest = self.load_manifest()
        done = manifest.get("stages", {})
        rep = CascadeReport()

        # longest prefix of rule stages with a matching checkpoint
        resume_at = 0
        for i, stage in enumerate(RULE_STAGES):
            entry = done.get(stage)
            if entry and entry.get("hash") == self.hashes[stage] and snapshot_path(self.run_dir, stage).exists():
                resume_at = i + 1
            else:
                break
        for stage in list(done):
            if stage not in RULE_STAGES[:resume_at]:
                del done[stage]
        manifest["stages"] = done

        tokens, status = [], {}
        for stage in RULE_STAGES[:resume_at]:
            e = done[stage]
            rep.rows.append(StageRow(stage, e["remaining"], e["removed"], e["reintegrated"]))
        rep.check()
        if resume_at:
            last = RULE_STAGES[resume_at - 1]
            logger.info("resuming after stage %s", last)
            tokens, status = read_snapshot(snapshot_path(self.run_dir, last))
            if stop_after in RULE_STAGES[:resume_at]:
                return rep

        for stage in RULE_STAGES[resume_at:]:
            t0 = time.perf_counter()
            if stage == "tokenization":
                types = ingest.count_files(self.corpus, self.stopwords(), self.cfg.workers)
                tokens, status = list(types.values()), {}
                for t in tokens:
                    t.subreddits = set()
                removed, reint = 0, 0
            else:
                tokens, status, removed, reint = self._stage(stage, tokens, status)
            remaining = sum(1 for t in tokens if status.get(t.surface, ALIVE) == ALIVE)
            rep.add(stage, remaining, removed, reint)
            write_snapshot(snapshot_path(self.run_dir, stage), stage, self.hashes[stage], tokens, status)
            done[stage] = {"hash": self.hashes[stage], "remaining": remaining,
                           "removed": removed, "reintegrated": reint}
            self._save_manifest(manifest)
            logger.info("%s: %s remaining (-%s +%s) in %.1fs", stage, f"{remaining:,}", f"{removed:,}",
                        f"{reint:,}", time.perf_counter() - t0)
            if stage == stop_after:
                return rep

        candidates = sorted(tokens, key=lambda t: t.surface)
        contexts = self._contexts(candidates)
        if not self.cfg.voter_endpoints:
            logger.info("no voter endpoints configured; exporting rule-stage survivors")
            self._export(candidates, contexts, None, tsv)
            report(rep, self.run_dir)
            return rep

        classified = self._llm(candidates, contexts, rep, done, manifest, stop_after)
        if classified is None:
            return rep
        self._export(candidates, contexts, classified, tsv)
        report(rep, self.run_dir)
        return rep

    def _contexts(self, candidates) -> dict:
        path = self.run_dir / "contexts.jsonl"
        key = self.hashes["vote"]
        if path.exists():
            with open(path, encoding="utf-8") as fh:
                head = json.loads(fh.readline())
                if head.get("hash") == key:
                    out = {}
                    for line in fh:
                        rec = json.loads(line)
                        out[rec["surface"]] = [ingest.Context(**c) for c in rec["contexts"]]
                    if set(out) == {t.surface for t in candidates}:
                        return out
        out = ingest.harvest_contexts(self.posts(), [t.surface for t in candidates],
                                      self.cfg.contexts_per_candidate, self.stopwords(), self.cfg.context_chars)
        lines = [json.dumps({"hash": key})]
        for s in sorted(out):
            lines.append(json.dumps({"surface": s, "contexts": [asdict(c) for c in out[s]]}, sort_keys=True))
        _atomic_write(path, "\n".join(lines) + "\n")
        return out

    def _rotate_log(self, path: Path, stage: str, manifest: dict) -> None:
        """Set aside results logged under a different stage hash."""
        seen = manifest.setdefault("llm_logs", {})
        old = seen.get(stage)
        if old not in (None, self.hashes[stage]):
            stale = path.parent / f"stale-{old}"
            for f in sorted(path.parent.glob(f"{path.stem}.*.jsonl")):
                stale.mkdir(parents=True, exist_ok=True)
                shutil.move(str(f), str(stale / f.name))
        seen[stage] = self.hashes[stage]
        self._save_manifest(manifest)

    def _llm(self, candidates, contexts, rep, done, manifest, stop_after):
        c = self.cfg
        surfaces = [t.surface for t in candidates]
        by_surface = {t.surface: t for t in candidates}
        votes_log = self.run_dir / "llm" / "votes.jsonl"
        verify_log = self.run_dir / "llm" / "verify.jsonl"
        self._rotate_log(votes_log, "vote", manifest)
        voters = [self.client(n) for n in c.voter_endpoints]
        votes = classify_all(surfaces, voters, votes_log, contexts, c.batch_size)
        majority = aggregate(votes)
        neos = [s for s, cl in majority.items() if cl.majority == Label.NEOLOGISM]
        prev = rep.final
        rep.add("vote", len(neos), prev - len(neos), 0)
        write_snapshot(snapshot_path(self.run_dir, "vote"), "vote", self.hashes["vote"],
                       [by_surface[s] for s in neos])
        done["vote"] = {"hash": self.hashes["vote"], "remaining": len(neos), "removed": prev - len(neos),
                        "reintegrated": 0}
        self._save_manifest(manifest)
        if stop_after == "vote":
            return None

        verified = None
        if c.verifier_endpoint:
            self._rotate_log(verify_log, "verify", manifest)
            verified = verify(neos, self.client(c.verifier_endpoint), verify_log, contexts, c.batch_size)
        classified = aggregate(votes, verified)
        final = [s for s in neos if classified[s].exported]
        rep.add("verify", len(final), len(neos) - len(final), 0)
        write_snapshot(snapshot_path(self.run_dir, "verify"), "verify", self.hashes["verify"],
                       [by_surface[s] for s in final])
        done["verify"] = {"hash": self.hashes["verify"], "remaining": len(final),
                          "removed": len(neos) - len(final), "reintegrated": 0}
        self._save_manifest(manifest)
        return classified

    def _export(self, candidates, contexts, classified, tsv: bool) -> None:
        records, all_records = [], []
        for t in candidates:
            rec = {
                "surface": t.surface,
                "count": t.count,
                "n_subreddits": t.n_subreddits,
                "flags": sorted(t.flags),
                "trace": [list(x) for x in t.trace],
                "contexts": [asdict(x) for x in contexts.get(t.surface, [])],
                "votes": {}, "raw_majority": None, "majority": None,
                "verifier": None, "final": None, "unverified": False,
            }
            cl = classified.get(t.surface) if classified else None
            if cl is not None:
                rec.update({
                    "votes": {k: Label(v).value for k, v in sorted(cl.votes.items())},
                    "raw_majority": cl.raw_majority.value,
                    "majority": cl.majority.value,
                    "verifier": cl.verifier.value if cl.verifier else None,
                    "final": cl.final.value,
                    "unverified": cl.unverified,
                })
            all_records.append(rec)
            if classified is None or (cl is not None and cl.exported):
                records.append(rec)
        dump = lambda recs: "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in recs)
        _atomic_write(self.run_dir / "classified.jsonl", dump(all_records))
        _atomic_write(self.run_dir / "candidates.jsonl", dump(records))
        if tsv:
            rows = ["surface\tcount\tn_subreddits\tmajority\tverifier\tfinal\tvotes\tcontext_1"]
            for r in records:
                votes = ",".join(f"{k}={v}" for k, v in r["votes"].items())
                ctx = r["contexts"][0]["snippet"].replace("\t", " ") if r["contexts"] else ""
                rows.append(f"{r['surface']}\t{r['count']}\t{r['n_subreddits']}\t{r['majority'] or ''}\t"
                            f"{r['verifier'] or ''}\t{r['final'] or ''}\t{votes}\t{ctx}")
            _atomic_write(self.run_dir / "candidates.tsv", "\n".join(rows) + "\n")


def run(cfg: PipelineConfig, corpus, run_dir, **kw) -> CascadeReport:
    stop_after = kw.pop("stop_after", None)
    tsv = kw.pop("tsv", False)
    return Pipeline(cfg, corpus, run_dir, **kw).run(stop_after=stop_after, tsv=tsv)


# -- reading a finished run ------------------------------------------------

def read_candidates(run_dir) -> list:
    path = Path(run_dir) / "candidates.jsonl"
    if not path.exists():
        return []
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def loss_attributor(run_dir):
    """Return ``f(surface) -> stage`` naming where a surface left the cascade.

    A token flagged as a typo or concatenation and then not reintegrated is
    attributed to the flagging stage, not to the frequency gate.
    """
    run_dir = Path(run_dir)
    snaps = []
    for stage in STAGE_ORDER:
        p = snapshot_path(run_dir, stage)
        if p.exists():
            _, status = read_snapshot(p)
            snaps.append((stage, status))

    def attribute(surface: str) -> str:
        flagged_at = None
        for stage, status in snaps:
            st = status.get(surface)
            if st is None:
                if stage == "freq" and flagged_at:
                    return flagged_at
                return stage
            if st == FLAGGED and flagged_at is None:
                flagged_at = stage
        return ""

    return attribute
