"""Pipeline configuration: flat ``key = value`` files with environment overrides.

Every threshold defaults to the English/Reddit instantiation, so an empty
config file reproduces that setup. Endpoints are declared as
``endpoint.<name>.<field> = value`` and selected with ``voter_endpoints`` and
``verifier_endpoint``. Environment variables ``NEOCASCADE_<KEY>`` (upper case,
dots as double underscores) override file values.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field, fields
from datetime import date
from pathlib import Path

from .lang import DEFAULT_INVENTORY
from .llm.providers import VERIFIER, VOTER, ModelEndpoint

ENV_PREFIX = "NEOCASCADE_"

# keys holding filesystem paths, resolved against the config file's directory
PATH_KEYS = ("vocab_manifest", "vocab_files", "freq_dict", "stopwords", "rule_pack", "lang_profiles")


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    cutoff_date: str = "2015-01-01"
    # pattern cleaning
    min_len: int = 3
    max_len: int = 20
    spam_len: int = 6
    spam_unique_max: int = 2
    entropy_min: float = 2.0
    entropy_min_len: int = 10
    rule_pack: str = ""
    # typo and concatenation
    max_edit: int = 2
    typo_min_len: int = 5
    typo_freq_floor: int = 100
    typo_floor_on: str = "match"
    concat_min_len: int = 6
    concat_min_part: int = 3
    # frequency gate
    freq_threshold: int = 100
    min_subreddits: int = 0
    # language gate
    lang_confidence: float = 0.75
    lang_inventory: tuple = DEFAULT_INVENTORY
    target_language: str = "en"
    lang_backend: str = "ngram"
    lang_profiles: str = ""
    # LLM stage
    batch_size: int = 10
    contexts_per_candidate: int = 3
    context_chars: int = 120
    voter_endpoints: tuple = ()
    verifier_endpoint: str = ""
    endpoints: dict = field(default_factory=dict)
    # resources
    vocab_manifest: str = ""
    vocab_files: tuple = ()
    freq_dict: str = ""
    stopwords: str = ""
    corpus_format: str = "ndjson"
    workers: int = 1

    def validate(self) -> "PipelineConfig":
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        try:
            date.fromisoformat(self.cutoff_date)
        except ValueError:
            raise ConfigError(f"cutoff_date is not an ISO date: {self.cutoff_date!r}") from None
        need(0 < self.min_len <= self.max_len, "need 0 < min_len <= max_len")
        need(self.spam_len >= 1 and self.spam_unique_max >= 1, "spam_len and spam_unique_max must be >= 1")
        need(self.entropy_min >= 0, "entropy_min must be >= 0")
        need(self.max_edit in (1, 2), "max_edit must be 1 or 2")
        need(self.typo_min_len >= 1 and self.typo_freq_floor >= 0, "bad typo settings")
        need(self.typo_floor_on in ("match", "token"), "typo_floor_on must be 'match' or 'token'")
        need(self.concat_min_part >= 1 and self.concat_min_len >= 2, "bad concatenation settings")
        need(self.freq_threshold >= 0 and self.min_subreddits >= 0, "thresholds must be >= 0")
        need(0.0 <= self.lang_confidence <= 1.0, "lang_confidence must be in [0, 1]")
        need(self.target_language in self.lang_inventory, "target_language must be in lang_inventory")
        need(self.lang_backend in ("ngram", "lingua"), "lang_backend must be 'ngram' or 'lingua'")
        need(self.batch_size >= 1, "batch_size must be >= 1")
        need(1 <= self.contexts_per_candidate <= 3, "contexts_per_candidate must be in 1..3")
        need(self.context_chars >= 1, "context_chars must be >= 1")
        need(self.workers >= 1, "workers must be >= 1")
        if self.voter_endpoints:
            n = len(self.voter_endpoints)
            need(n >= 3 and n % 2 == 1, f"need an odd number (>= 3) of voters, got {n}")
        for name in self.voter_endpoints:
            need(name in self.endpoints, f"voter endpoint {name!r} is not defined")
            need(self.endpoints[name].role == VOTER, f"endpoint {name!r} is not a VOTER")
        if self.verifier_endpoint:
            need(self.verifier_endpoint in self.endpoints, f"verifier {self.verifier_endpoint!r} is not defined")
            need(self.endpoints[self.verifier_endpoint].role == VERIFIER,
                 f"endpoint {self.verifier_endpoint!r} is not a VERIFIER")
            need(self.verifier_endpoint not in self.voter_endpoints, "the verifier must not vote")
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["endpoints"] = {k: dataclasses.asdict(v) for k, v in sorted(self.endpoints.items())}
        return d


_FIELD_TYPES = {f.name: f for f in fields(PipelineConfig)}
_ENDPOINT_FIELDS = {f.name: f for f in fields(ModelEndpoint)}


def _coerce(raw: str, default):
    raw = raw.strip()
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        return tuple(x.strip() for x in raw.split(",") if x.strip())
    return raw


def _default_of(f):
    if f.default is not dataclasses.MISSING:
        return f.default
    return f.default_factory()


def parse_assignments(pairs, base_dir: Path | None = None, cfg: PipelineConfig | None = None) -> PipelineConfig:
    """Apply ``(key, value)`` string pairs to a config (a fresh one by default)."""
    cfg = cfg or PipelineConfig()
    raw_endpoints: dict = {}
    for key, value in pairs:
        key = key.strip()
        if key.startswith("endpoint."):
            _, name, attr = key.split(".", 2)
            if attr not in _ENDPOINT_FIELDS:
                raise ConfigError(f"unknown endpoint field {attr!r}")
            raw_endpoints.setdefault(name, {})[attr] = value
            continue
        if key not in _FIELD_TYPES or key == "endpoints":
            raise ConfigError(f"unknown config key {key!r}")
        value = _coerce(value, _default_of(_FIELD_TYPES[key]))
        if base_dir is not None and key in PATH_KEYS and value:
            if isinstance(value, tuple):
                value = tuple(str((base_dir / v).resolve()) for v in value)
            else:
                value = str((base_dir / value).resolve())
        setattr(cfg, key, value)
    for name, attrs in raw_endpoints.items():
        ep = cfg.endpoints.get(name) or ModelEndpoint(name)
        for attr, value in attrs.items():
            default = _default_of(_ENDPOINT_FIELDS[attr])
            v = _coerce(value, default)
            if attr == "label_table" and base_dir is not None and v:
                v = str((base_dir / v).resolve())
            if attr == "role":
                v = v.upper()
            setattr(ep, attr, v)
        cfg.endpoints[name] = ep
    return cfg


def read_pairs(text: str):
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        yield key.strip(), value.strip()


def env_pairs(environ=None):
    environ = os.environ if environ is None else environ
    for k, v in sorted(environ.items()):
        if k.startswith(ENV_PREFIX):
            yield k[len(ENV_PREFIX):].lower().replace("__", "."), v


def load_config(path=None, overrides=(), environ=None) -> PipelineConfig:
    """File values, then environment, then explicit ``overrides`` pairs."""
    cfg = PipelineConfig()
    if path is not None:
        path = Path(path)
        cfg = parse_assignments(read_pairs(path.read_text(encoding="utf-8")), path.parent.resolve(), cfg)
    cfg = parse_assignments(env_pairs(environ), Path.cwd(), cfg)
    cfg = parse_assignments(overrides, Path.cwd(), cfg)
    return cfg.validate()


def _file_sig(path: str) -> list:
    if not path:
        return []
    p = Path(path)
    if not p.exists():
        return [path, None]
    st = p.stat()
    return [str(p.resolve()), st.st_size, int(st.st_mtime)]


STAGE_KEYS = {
    "tokenization": ("stopwords", "corpus_format"),
    "vocab": ("vocab_manifest", "vocab_files", "cutoff_date"),
    "pattern": ("min_len", "max_len", "spam_len", "spam_unique_max", "entropy_min", "entropy_min_len", "rule_pack"),
    "concat": ("freq_dict", "concat_min_len", "concat_min_part"),
    "typo": ("freq_dict", "max_edit", "typo_min_len", "typo_freq_floor", "typo_floor_on"),
    "freq": ("freq_threshold", "min_subreddits"),
    "lang": ("lang_confidence", "lang_inventory", "target_language", "lang_backend", "lang_profiles"),
    "vote": ("voter_endpoints", "batch_size", "contexts_per_candidate", "context_chars"),
    "verify": ("verifier_endpoint", "batch_size"),
}


def stage_hashes(cfg: PipelineConfig, corpus) -> dict:
    """Chained per-stage hashes: a change invalidates that stage and everything after it."""
    d = cfg.to_dict()
    out = {}
    prev = ""
    for stage, keys in STAGE_KEYS.items():
        material = {k: d[k] for k in keys}
        for k in keys:
            if k in PATH_KEYS:
                vals = material[k] if isinstance(material[k], (list, tuple)) else [material[k]]
                material[k] = [_file_sig(v) for v in vals]
        if stage == "tokenization":
            material["corpus"] = [_file_sig(str(p)) for p in corpus]
        if stage == "vote":
            material["endpoints"] = {n: d["endpoints"].get(n) for n in cfg.voter_endpoints}
        if stage == "verify":
            material["endpoints"] = d["endpoints"].get(cfg.verifier_endpoint)
        blob = json.dumps([prev, material], sort_keys=True, default=str)
        prev = hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]
        out[stage] = prev
    return out
