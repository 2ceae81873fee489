import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import synth  # noqa: E402
from neocascade.config import load_config  # noqa: E402
from neocascade.pipeline import Pipeline  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def synth_corpus(tmp_path_factory):
    return synth.build(tmp_path_factory.mktemp("synth"), seed=7)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    return synth.build(tmp_path_factory.mktemp("synth_small"), seed=11, n_posts=20_000, n_neo=12,
                       n_typo=40, n_concat=20, n_foreign=10, n_spam=50)


def make_config(corpus, with_llm=True, **overrides):
    pairs = synth.config_pairs(corpus, with_llm) + [(k, str(v)) for k, v in overrides.items()]
    return load_config(None, pairs, environ={})


@pytest.fixture(scope="session")
def full_run(synth_corpus, tmp_path_factory):
    run_dir = tmp_path_factory.mktemp("run_full")
    t0 = time.perf_counter()
    rep = Pipeline(make_config(synth_corpus), synth_corpus.path, run_dir).run(tsv=True)
    return run_dir, rep, time.perf_counter() - t0


# acceptance criteria report one line each: (number, title, passed, detail)
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n}. {title}: {detail}")
