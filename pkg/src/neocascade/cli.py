"""Command-line entry point: ``neocascade <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import corpus as ingest
from .config import ConfigError, PipelineConfig, load_config
from .evaluate import (CascadeReport, eval_gold, eval_recall, read_counts_tsv, read_gold,
                       read_reference, report)
from .llm.providers import EndpointDown
from .pipeline import STAGE_ORDER, Pipeline, loss_attributor, read_candidates, snapshot_path

logger = logging.getLogger("neocascade")

# config keys exposed as --flags; endpoints only via --set endpoint.<name>.<field>=...
_CONFIG_FLAGS = [f for f in fields(PipelineConfig) if f.name != "endpoints"]


def _add_config_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration")
    g.add_argument("--config", type=Path, help="key = value config file")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key (repeatable), e.g. endpoint.a.model=x")
    for f in _CONFIG_FLAGS:
        g.add_argument("--" + f.name.replace("_", "-"), dest="cfg_" + f.name, metavar="VALUE")


def _config(args) -> PipelineConfig:
    pairs = []
    for f in _CONFIG_FLAGS:
        v = getattr(args, "cfg_" + f.name, None)
        if v is not None:
            pairs.append((f.name, v))
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        pairs.append((key, value))
    return load_config(args.config, pairs)


def _pipeline(args) -> Pipeline:
    return Pipeline(_config(args), args.corpus, args.run_dir)


def cmd_run(args) -> int:
    rep = _pipeline(args).run(stop_after=args.stop_after, tsv=args.tsv)
    sys.stdout.write(report(rep))
    return 0


def _need_lang_checkpoint(args) -> None:
    if not snapshot_path(args.run_dir, "lang").exists():
        raise SystemExit(f"{args.run_dir}: no rule-stage checkpoint; run `neocascade run` first")


def cmd_classify(args) -> int:
    _need_lang_checkpoint(args)
    pipe = _pipeline(args)
    if not pipe.cfg.voter_endpoints:
        raise SystemExit("no voter_endpoints configured")
    rep = pipe.run(stop_after="vote")
    sys.stdout.write(report(rep))
    return 0


def cmd_verify(args) -> int:
    _need_lang_checkpoint(args)
    pipe = _pipeline(args)
    if not pipe.cfg.verifier_endpoint:
        raise SystemExit("no verifier_endpoint configured")
    rep = pipe.run(tsv=args.tsv)
    sys.stdout.write(report(rep))
    return 0


def cmd_report(args) -> int:
    if args.counts:
        rep = read_counts_tsv(args.counts)
    elif args.run_dir:
        path = Path(args.run_dir) / "report.json"
        if not path.exists():
            raise SystemExit(f"{path} not found")
        rep = CascadeReport.from_dict(json.loads(path.read_text(encoding="utf-8")))
    else:
        raise SystemExit("report needs --run-dir or --counts")
    sys.stdout.write(report(rep, args.out))
    return 0


def _final_labels(records) -> dict:
    return {r["surface"]: r.get("final") or "CANDIDATE" for r in records}


def cmd_eval_gold(args) -> int:
    if args.candidates:
        with open(args.candidates, encoding="utf-8") as fh:
            records = [json.loads(line) for line in fh if line.strip()]
    else:
        records = read_candidates(args.run_dir)
    summary = eval_gold(_final_labels(records), read_gold(args.gold))
    sys.stdout.write(summary.render())
    return 0


def cmd_eval_recall(args) -> int:
    reference = read_reference(args.reference)
    detected = attribute = None
    if args.run_dir:
        detected = {r["surface"] for r in read_candidates(args.run_dir)}
        attribute = loss_attributor(args.run_dir)
    summary = eval_recall(reference, detected, attribute)
    sys.stdout.write(summary.render())
    if args.verbose:
        for r in summary.records:
            sys.stdout.write(f"{r.surface}\t{r.year}\t{r.source}\t{r.status}\t{r.lost_at}\n")
    return 0


def cmd_contexts(args) -> int:
    cfg = _config(args)
    with open(args.candidates, encoding="utf-8") as fh:
        wanted = [line.split("\t")[0].strip() for line in fh if line.strip() and not line.startswith("#")]
    posts = (p for path in args.corpus for p in ingest.read_posts(path, cfg.corpus_format))
    stopwords = ingest.load_stopwords(cfg.stopwords or None, cfg.target_language)
    ctx = ingest.harvest_contexts(posts, wanted, cfg.contexts_per_candidate, stopwords, cfg.context_chars)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for s in sorted(ctx):
            rec = {"surface": s, "contexts": [{"subreddit": c.subreddit, "snippet": c.snippet} for c in ctx[s]]}
            out.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neocascade", description="Neologism candidate extraction cascade")
    parser.add_argument("--log-level", default="INFO")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run or resume the full cascade")
    p.add_argument("corpus", nargs="+", type=Path, help="ndjson corpus shard(s), optionally .zst")
    p.add_argument("--run-dir", type=Path, required=True)
    p.add_argument("--stop-after", choices=STAGE_ORDER)
    p.add_argument("--tsv", action="store_true", help="also write candidates.tsv")
    _add_config_args(p)
    p.set_defaults(func=cmd_run)

    for name, func, helptext in (("classify", cmd_classify, "LLM majority vote only (resumable)"),
                                 ("verify", cmd_verify, "verification pass and final export")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("corpus", nargs="+", type=Path)
        p.add_argument("--run-dir", type=Path, required=True)
        p.add_argument("--tsv", action="store_true")
        _add_config_args(p)
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="render a cascade report")
    p.add_argument("--run-dir", type=Path)
    p.add_argument("--counts", type=Path, help="TSV: stage, remaining[, removed, reintegrated]")
    p.add_argument("--out", type=Path, help="directory for report.txt / report.json")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("eval-gold", help="cross-tabulate candidates against a gold file")
    p.add_argument("--gold", type=Path, required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--run-dir", type=Path)
    src.add_argument("--candidates", type=Path, help="candidates.jsonl")
    p.set_defaults(func=cmd_eval_gold)

    p = sub.add_parser("eval-recall", help="recall against a reference list")
    p.add_argument("--reference", type=Path, required=True)
    p.add_argument("--run-dir", type=Path, help="re-score TP/FN from this run and attribute losses")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_eval_recall)

    p = sub.add_parser("contexts", help="harvest context snippets for a candidate list")
    p.add_argument("corpus", nargs="+", type=Path)
    p.add_argument("--candidates", type=Path, required=True, help="one surface per line")
    p.add_argument("--out", type=Path)
    _add_config_args(p)
    p.set_defaults(func=cmd_contexts)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        logger.error("%s", exc)
        return 2
    except EndpointDown as exc:
        logger.error("%s; completed work is checkpointed, rerun to resume", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
