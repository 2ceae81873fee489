"""Batch classification against several endpoints with a resumable checkpoint.

Every (endpoint, surface) answer is appended to an ndjson results file as
soon as its batch is done. A rerun reads the files back and only asks for
what is missing, so an interrupted run picks up where it stopped. Each
endpoint writes its own file, in batch order, so logs from two identical
runs are byte-identical regardless of thread timing.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .prompts import MULTI, PARSE_FAIL, SINGLE, Label, PromptBatch, parse_response, render_prompt
from .providers import EndpointDown
from .voting import apply_verification, classify_votes

logger = logging.getLogger(__name__)

DEFAULT = "DEFAULT"  # template_used when both passes failed and NONE was assigned


def _excerpt_hash(text: str) -> str:
    return hashlib.sha256((text or "").encode("utf-8")).hexdigest()[:16]


class ResultsLog:
    """Append-only ndjson of ``{surface, endpoint, label, template_used, raw_excerpt_hash}``."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def load(self) -> dict:
        """(endpoint, surface) -> label; later records win, torn tail lines are ignored."""
        out = {}
        if not self.path.exists():
            return out
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                try:
                    rec = json.loads(line)
                    out[rec["endpoint"], rec["surface"]] = Label(rec["label"])
                except (ValueError, KeyError):
                    logger.warning("%s: unreadable checkpoint line ignored", self.path)
        return out

    def append(self, records) -> None:
        if not records:
            return
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                for rec in records:
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
                fh.flush()


def label_batch(client, surfaces, contexts: dict, batch_size: int = 10) -> list:
    """Ask one endpoint about up to ``batch_size`` tokens.

    Tokens the MULTI answer does not cover are retried one at a time with
    the SINGLE template; a second failure becomes NONE. Returns result
    records in input order.
    """
    batch = PromptBatch([(s, contexts.get(s, [])) for s in surfaces], MULTI)
    raw = client.complete(render_prompt(batch, batch_size))
    parsed = parse_response(raw, surfaces)
    records = []
    for s in surfaces:
        label, template, text = parsed[s], MULTI, raw
        if label == PARSE_FAIL:
            text = client.complete(render_prompt(PromptBatch([(s, contexts.get(s, []))], SINGLE)))
            label, template = parse_response(text, [s])[s], SINGLE
            if label == PARSE_FAIL:
                label, template = Label.NONE, DEFAULT
        records.append({
            "surface": s,
            "endpoint": client.name,
            "label": Label(label).value,
            "template_used": template,
            "raw_excerpt_hash": _excerpt_hash(text),
        })
    return records


def endpoint_log(log_path, endpoint: str) -> Path:
    """Per-endpoint results file: ``votes.jsonl`` -> ``votes.<endpoint>.jsonl``."""
    p = Path(log_path)
    return p.with_name(f"{p.stem}.{endpoint}{p.suffix or '.jsonl'}")


def _run_endpoint(client, pending, contexts, batch_size, log: ResultsLog) -> dict:
    batches = [pending[i:i + batch_size] for i in range(0, len(pending), batch_size)]
    out = {}

    def work(batch):
        return label_batch(client, batch, contexts, batch_size)

    workers = max(1, client.endpoint.concurrency)
    if workers == 1:
        results = map(work, batches)
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        results = pool.map(work, batches)
    try:
        # results arrive in batch order, which keeps the log deterministic
        for recs in results:
            log.append(recs)
            for r in recs:
                out[r["surface"]] = Label(r["label"])
    finally:
        if workers > 1:
            pool.shutdown(wait=True, cancel_futures=True)
    return out


def classify_all(candidates, clients, log_path, contexts: dict | None = None, batch_size: int = 10) -> dict:
    """Collect one label per (voter, candidate); returns surface -> {endpoint: Label}.

    Endpoints run concurrently. If an endpoint stays down, everything
    answered so far is already checkpointed and ``EndpointDown`` propagates.
    """
    contexts = contexts or {}
    surfaces = sorted(set(candidates))
    votes = {s: {} for s in surfaces}
    logs = {}
    for c in clients:
        logs[c.name] = ResultsLog(endpoint_log(log_path, c.name))
        for (ep, s), label in logs[c.name].load().items():
            if s in votes and ep == c.name:
                votes[s][ep] = label

    def run(client):
        pending = [s for s in surfaces if client.name not in votes[s]]
        if pending:
            logger.info("%s: %d tokens to classify", client.name, len(pending))
        return client.name, _run_endpoint(client, pending, contexts, batch_size, logs[client.name])

    with ThreadPoolExecutor(max_workers=max(1, len(clients))) as pool:
        futures = [pool.submit(run, c) for c in clients]
        errors = []
        for f in futures:
            try:
                name, labels = f.result()
            except EndpointDown as exc:
                errors.append(exc)
                continue
            for s, label in labels.items():
                votes[s][name] = label
    if errors:
        raise errors[0]
    return votes


def verify(majority_neologisms, client, log_path, contexts: dict | None = None, batch_size: int = 10) -> dict:
    """Verifier label per surface; ``None`` where the verifier was unreachable."""
    if client is None:
        return {s: None for s in majority_neologisms}
    try:
        votes = classify_all(majority_neologisms, [client], log_path, contexts, batch_size)
        return {s: v.get(client.name) for s, v in votes.items()}
    except EndpointDown as exc:
        logger.error("verifier unreachable, keeping majority labels: %s", exc)
        done = ResultsLog(endpoint_log(log_path, client.name)).load()
        return {s: done.get((client.name, s)) for s in sorted(set(majority_neologisms))}


def aggregate(votes: dict, verified: dict | None = None) -> dict:
    """Deterministic reduction of votes (+ verifier labels) to Classifications."""
    out = {}
    for s in sorted(votes):
        c = classify_votes(s, votes[s])
        if verified is not None and s in verified:
            apply_verification(c, verified[s])
        out[s] = c
    return out
