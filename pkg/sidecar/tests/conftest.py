"""Shared fixtures for the sidecar suite.

The engine package is used here as the cross-implementation oracle and
integration counterpart; the sidecar's production code never imports it.
The whole suite is skipped when torch or the sidecar package is missing so
the engine suite stays self-contained.
"""

import sys

import pytest

try:
    import torch  # noqa: F401
    import feedback_sidecar  # noqa: F401
except ImportError:
    collect_ignore_glob = ["*"]  # suite needs the optional sidecar install

from transit_feedback.corpus import generate_synthetic_corpus
from transit_feedback.labels import TopicLabel
from transit_feedback.topics import (LabeledRecord, LabelSource,
                                     labeled_to_jsonl)

# Shared synthetic corpus: 11 planted topics with disjoint vocabularies,
# used by both the sidecar and the TF-IDF baseline comparison.
CORPUS_PARAMS = dict(n_docs=660, K_true=11, vocab_per_topic=15,
                     doc_len=30, seed=5)
TRAIN_PARAMS = dict(epochs=30, pretrain_epochs=2, seed=0,
                    n_merges=2000, max_len=64)


def write_labeled_corpus(path, **overrides):
    params = {**CORPUS_PARAMS, **overrides}
    sc = generate_synthetic_corpus(**params)
    recs = [LabeledRecord(r, TopicLabel.from_code(int(l)),
                          LabelSource.LDA, 1.0)
            for r, l in zip(sc.records, sc.doc_labels)]
    labeled_to_jsonl(recs, path)
    return path


@pytest.fixture(scope="session")
def labeled_file(tmp_path_factory):
    return write_labeled_corpus(
        tmp_path_factory.mktemp("corpus") / "labeled.jsonl")


@pytest.fixture(scope="session")
def small_labeled_file(tmp_path_factory):
    return write_labeled_corpus(
        tmp_path_factory.mktemp("corpus-small") / "labeled.jsonl",
        n_docs=220, doc_len=20)


@pytest.fixture(scope="session")
def checkpoint(labeled_file, tmp_path_factory):
    from feedback_sidecar.train import TrainSpec, finetune
    return finetune(TrainSpec(
        labeled_path=labeled_file,
        checkpoint_dir=tmp_path_factory.mktemp("ckpt"),
        **TRAIN_PARAMS))


@pytest.fixture
def serve_cmd(checkpoint):
    return [sys.executable, "-m", "feedback_sidecar.cli",
            "serve", "--checkpoint", str(checkpoint)]


SECONDARY_CRITERIA = {
    "test_protocol_bijection": "bridge protocol conformance (100-request id bijection)",
    "test_macro_f1_vs_baseline": "macro-F1 >= TF-IDF logistic baseline - 0.05",
    "test_internal_metrics_match_engine": "internal eval matches engine metrics <= 1e-9",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_sidecar_acceptance.py" not in rep.nodeid:
                continue
            name = rep.nodeid.split("::")[-1].split("[")[0]
            ok = outcome == "passed" and results.get(name, True)
            results[name] = ok
    if not results:
        return
    terminalreporter.section("sidecar acceptance criteria")
    for name, desc in SECONDARY_CRITERIA.items():
        if name in results:
            verdict = "PASS" if results[name] else "FAIL"
            terminalreporter.write_line(f"{verdict}  {desc}")
