import sys

import pytest

from helpers import FIXTURES, make_record  # noqa: F401 - fixture helpers
from transit_feedback.corpus import AssetCatalog, generate_synthetic_corpus


@pytest.fixture(scope="session")
def catalog():
    return AssetCatalog.load()


@pytest.fixture(scope="session")
def synth_corpus():
    """Small planted-topic corpus shared by topic/classifier tests."""
    return generate_synthetic_corpus(n_docs=400, K_true=4, vocab_per_topic=20,
                                     doc_len=30, seed=11)


@pytest.fixture
def echo_bridge_cmd():
    def make(*extra):
        return [sys.executable, str(FIXTURES / "echo_bridge.py"), *extra]
    return make


CRITERIA = {
    "test_tfidf_oracle": "TF-IDF oracle (brute-force match <= 1e-12, < 1 s)",
    "test_lda_recovery": "LDA recovery (mean TV <= 0.15, >= 90% argmax, < 60 s)",
    "test_gibbs_invariants": "Gibbs count-table invariants (exact, every sweep)",
    "test_classifier_correctness":
        "Classifier correctness (gradient checks 1e-5; 11-class CV >= 0.95)",
    "test_class_weighting_effect":
        "Class weighting (minority recall >= unweighted)",
    "test_metric_identities":
        "Metric identities (weighted recall == accuracy <= 1e-12; hand values)",
    "test_enrichment_fixtures": "Enrichment fixtures (three exact matches)",
    "test_reporting_arithmetic":
        "Reporting arithmetic (<= 1e-9; order-invariant tables)",
    "test_determinism":
        "Determinism (identical manifest metrics across runs, < 5 min)",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" not in getattr(rep, "nodeid", ""):
                continue
            name = rep.nodeid.split("::")[-1].split("[")[0]
            if name in CRITERIA:
                verdict = "PASS" if outcome == "passed" else "FAIL"
                lines.append((name, f"{verdict}  {CRITERIA[name]}"))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        order = list(CRITERIA)
        for _, line in sorted(lines, key=lambda kv: order.index(kv[0])):
            terminalreporter.write_line(line)
