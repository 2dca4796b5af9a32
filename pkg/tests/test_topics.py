import json

import numpy as np
import pytest

from helpers import make_record
from transit_feedback.labels import TopicLabel, N_TOPICS
from transit_feedback.textprep import build_vocabulary, count_terms
from transit_feedback.topics import (DEFAULT_HOLDOUTS, LabelSource,
                                     LabeledRecord, LdaModel,
                                     TopicCondensation, TopicsError,
                                     assign_primary_topic, condense_topics,
                                     fit_lda, greedy_topic_match,
                                     holdout_manual_topics, infer_doc_topics,
                                     labeled_from_jsonl, labeled_to_jsonl,
                                     screen_topic_count, top_words,
                                     topic_category_ratios)


def corpus_counts(sc):
    streams = [r.text.split() for r in sc.records]
    vocab = build_vocabulary(streams, min_count=1, orders={1})
    counts = [count_terms(s, vocab, orders={1}) for s in streams]
    return vocab, counts


@pytest.fixture(scope="module")
def fitted(synth_corpus):
    vocab, counts = corpus_counts(synth_corpus)
    model = fit_lda(counts, vocab, K=4, n_iters=200, seed=42)
    return vocab, counts, model


class TestFitLda:
    def test_recovers_planted_topics(self, synth_corpus, fitted):
        vocab, counts, model = fitted
        # Planted distributions are over the generator's word order; re-index
        # to the fitted vocabulary's columns.
        col = [synth_corpus.vocab_words.index(t) for t in vocab.terms]
        phi_true = synth_corpus.topic_word_dists[:, col]
        phi_est = model.topic_word_dists()
        mapping = greedy_topic_match(phi_est, phi_true)
        tvs = [0.5 * np.abs(phi_est[i] - phi_true[j]).sum()
               for i, j in mapping.items()]
        assert np.mean(tvs) <= 0.15

        theta = model.doc_topic_dists()
        remapped = np.array([mapping[k] for k in np.argmax(theta, axis=1)])
        acc = np.mean(remapped == np.asarray(synth_corpus.doc_labels))
        assert acc >= 0.90

    def test_count_tables_consistent_after_fit(self, fitted):
        _, _, model = fitted
        model.check_counts()  # raises on any inconsistency

    def test_count_invariants_every_sweep(self, synth_corpus):
        vocab, counts = corpus_counts(synth_corpus)
        sweeps = []

        def check(model, sweep):
            model.check_counts()
            sweeps.append(sweep)

        fit_lda(counts[:100], vocab, K=3, n_iters=30, seed=1,
                early_stop_tol=0.0, sweep_callback=check)
        assert len(sweeps) == 30

    def test_log_likelihood_trajectory(self, fitted):
        _, _, model = fitted
        lls = model.log_likelihoods
        assert all(np.isfinite(lls))
        assert lls[-1] > lls[0]  # burn-in improves the collapsed joint

    def test_early_stop_triggers(self, synth_corpus):
        vocab, counts = corpus_counts(synth_corpus)
        model = fit_lda(counts, vocab, K=4, n_iters=1000, seed=0,
                        early_stop_tol=1e-3, early_stop_window=10)
        assert len(model.log_likelihoods) < 1000

    def test_seed_determinism(self, synth_corpus):
        vocab, counts = corpus_counts(synth_corpus)
        a = fit_lda(counts[:80], vocab, K=3, n_iters=20, seed=9)
        b = fit_lda(counts[:80], vocab, K=3, n_iters=20, seed=9)
        np.testing.assert_array_equal(a.n_kw, b.n_kw)
        np.testing.assert_array_equal(a.assignments, b.assignments)

    def test_default_alpha_is_50_over_k(self, synth_corpus):
        vocab, counts = corpus_counts(synth_corpus)
        model = fit_lda(counts[:50], vocab, K=5, n_iters=5, seed=0)
        assert model.alpha == pytest.approx(50 / 5)
        assert model.beta == pytest.approx(0.01)

    def test_invalid_k(self, synth_corpus):
        vocab, counts = corpus_counts(synth_corpus)
        with pytest.raises(TopicsError):
            fit_lda(counts, vocab, K=0, n_iters=5)


class TestInference:
    def test_theta_rows_normalized(self, fitted):
        _, counts, model = fitted
        thetas, flagged = infer_doc_topics(model, counts[:20], n_sweeps=10)
        np.testing.assert_allclose(thetas.sum(axis=1), 1.0, atol=1e-12)
        assert not flagged.any()

    def test_empty_doc_uniform_and_flagged(self, fitted):
        _, counts, model = fitted
        thetas, flagged = infer_doc_topics(model, [counts[0], {}],
                                           n_sweeps=10)
        assert flagged[1] and not flagged[0]
        np.testing.assert_allclose(thetas[1], 1.0 / model.K)

    def test_frozen_model_unchanged(self, fitted):
        _, counts, model = fitted
        before = model.n_kw.copy()
        infer_doc_topics(model, counts[:10], n_sweeps=5)
        np.testing.assert_array_equal(model.n_kw, before)


class TestTopWords:
    def test_descending_and_tie_break(self, fitted):
        _, _, model = fitted
        words = top_words(model, 0, 10)
        probs = [p for _, p in words]
        assert probs == sorted(probs, reverse=True)
        for (w1, p1), (w2, p2) in zip(words, words[1:]):
            if p1 == p2:
                assert w1 < w2  # ties resolve lexicographically

    def test_nonpositive_n(self, fitted):
        _, _, model = fitted
        assert top_words(model, 0, 0) == []


class TestGreedyMatch:
    def test_permutation_recovered_exactly(self):
        rng = np.random.default_rng(0)
        phi = rng.dirichlet(np.ones(12), size=4)
        perm = [2, 0, 3, 1]
        mapping = greedy_topic_match(phi[perm], phi)
        assert mapping == {i: perm[i] for i in range(4)}


class TestPrimaryAssignment:
    def test_above_threshold(self):
        theta = np.array([0.1, 0.7, 0.2])
        label, score = assign_primary_topic(theta, threshold=0.5)
        assert label is TopicLabel.from_code(1)
        assert score == pytest.approx(0.7)

    def test_below_threshold_unassigned(self):
        theta = np.array([0.4, 0.35, 0.25])
        label, score = assign_primary_topic(theta, threshold=0.5)
        assert label is TopicLabel.UNASSIGNED
        assert score == pytest.approx(0.4)

    def test_exact_threshold_assigned(self):
        label, _ = assign_primary_topic(np.array([0.5, 0.5]), threshold=0.5)
        assert label is not TopicLabel.UNASSIGNED

    def test_tie_takes_lowest_index(self):
        label, _ = assign_primary_topic(np.array([0.5, 0.5]), threshold=0.4)
        assert label is TopicLabel.from_code(0)

    def test_condensation_applied(self):
        cond = TopicCondensation({0: TopicLabel.GENERAL,
                                  1: TopicLabel.CROWDING}, {})
        label, _ = assign_primary_topic(np.array([0.2, 0.8]), 0.5, cond)
        assert label is TopicLabel.CROWDING


class TestCondensation:
    def test_condense_topics(self):
        cond = TopicCondensation({0: TopicLabel.GENERAL,
                                  1: TopicLabel.GENERAL,
                                  2: TopicLabel.CROWDING}, {})
        assert condense_topics([0, 2, 1], cond) == [
            TopicLabel.GENERAL, TopicLabel.CROWDING, TopicLabel.GENERAL]

    def test_load_validates_raw_topic_coverage(self, tmp_path):
        p = tmp_path / "cond.json"
        p.write_text(json.dumps({
            "schema_version": 1,
            "mapping": {"0": "General"},  # missing topic 1
            "manual_holdouts": {},
        }), encoding="utf-8")
        with pytest.raises(TopicsError):
            TopicCondensation.load(p, K=2)

    def test_roundtrip(self, tmp_path):
        cond = TopicCondensation(
            {0: TopicLabel.OPERATIONS_DELAYS_PROCEDURES, 1: TopicLabel.CROWDING},
            dict(DEFAULT_HOLDOUTS))
        p = tmp_path / "cond.json"
        cond.save(p)
        again = TopicCondensation.load(p, K=2)
        assert again.mapping == cond.mapping
        assert again.manual_holdouts == cond.manual_holdouts


class TestManualHoldouts:
    def test_holdout_by_category(self):
        recs = [make_record(0, "someone was shoved", problem_category="Crime"),
                make_record(1, "packed train", problem_category="Crowding"),
                make_record(2, "late bus", problem_category="Bus Lateness"),
                make_record(3, "no category")]
        held, remaining = holdout_manual_topics(recs)
        assert [lr.record.id for lr in held] == ["r0", "r1"]
        assert held[0].label is TopicLabel.CRIME_HARASSMENT_SECURITY
        assert held[1].label is TopicLabel.CROWDING
        assert all(lr.label_source is LabelSource.MANUAL_HOLDOUT for lr in held)
        assert all(lr.primary_score == 1.0 for lr in held)
        assert [r.id for r in remaining] == ["r2", "r3"]

    def test_order_preserved_and_partition(self):
        recs = [make_record(i, f"text {i}",
                            problem_category="Security" if i % 3 == 0
                            else None)
                for i in range(9)]
        held, remaining = holdout_manual_topics(recs)
        assert len(held) + len(remaining) == len(recs)
        assert [lr.record.id for lr in held] == ["r0", "r3", "r6"]


class TestLabeledRecords:
    def test_jsonl_roundtrip(self, tmp_path):
        labeled = [
            LabeledRecord(make_record(0, "a"), TopicLabel.GENERAL,
                          LabelSource.LDA, 0.62),
            LabeledRecord(make_record(1, "b", problem_category="Crime"),
                          TopicLabel.CRIME_HARASSMENT_SECURITY,
                          LabelSource.MANUAL_HOLDOUT, 1.0),
        ]
        p = tmp_path / "l.jsonl"
        labeled_to_jsonl(labeled, p)
        assert labeled_from_jsonl(p) == labeled

    def test_category_ratios(self):
        labeled = [
            LabeledRecord(make_record(0, "x", problem_category="Crime"),
                          TopicLabel.CRIME_HARASSMENT_SECURITY,
                          LabelSource.MANUAL_HOLDOUT, 1.0),
            LabeledRecord(make_record(1, "y", problem_category="Security"),
                          TopicLabel.CRIME_HARASSMENT_SECURITY,
                          LabelSource.MANUAL_HOLDOUT, 1.0),
            LabeledRecord(make_record(2, "z", problem_category="Crime"),
                          TopicLabel.CRIME_HARASSMENT_SECURITY,
                          LabelSource.MANUAL_HOLDOUT, 1.0),
            LabeledRecord(make_record(3, "w"), TopicLabel.GENERAL,
                          LabelSource.LDA, 0.7),
        ]
        ratios = topic_category_ratios(labeled)
        per = ratios[TopicLabel.CRIME_HARASSMENT_SECURITY]
        assert per["Crime"] == pytest.approx(2 / 3)
        assert per["Security"] == pytest.approx(1 / 3)
        assert TopicLabel.GENERAL not in ratios  # no category attached


class TestModelPersistence:
    def test_save_load_roundtrip(self, fitted, tmp_path):
        _, counts, model = fitted
        p = tmp_path / "lda.json"
        model.save(p)
        again = LdaModel.load(p)
        np.testing.assert_array_equal(again.n_kw, model.n_kw)
        np.testing.assert_array_equal(again.n_dk, model.n_dk)
        assert again.vocab.terms == model.vocab.terms
        thetas_a, _ = infer_doc_topics(model, counts[:5], n_sweeps=5, seed=2)
        thetas_b, _ = infer_doc_topics(again, counts[:5], n_sweeps=5, seed=2)
        np.testing.assert_allclose(thetas_a, thetas_b, atol=0)

    def test_tampered_counts_rejected(self, fitted, tmp_path):
        _, _, model = fitted
        p = tmp_path / "lda.json"
        model.save(p)
        doc = json.loads(p.read_text(encoding="utf-8"))
        doc["n_kw"][0][0] += 1
        p.write_text(json.dumps(doc), encoding="utf-8")
        with pytest.raises(TopicsError):
            LdaModel.load(p)


class TestScreening:
    def test_well_separated_centroids(self):
        rng = np.random.default_rng(0)
        base = np.eye(3)
        centroids = np.vstack([
            base[i] + 0.01 * rng.random(3) for i in range(3)
            for _ in range(4)])
        assert screen_topic_count(centroids) == 3

    def test_identical_centroids_collapse(self):
        centroids = np.ones((6, 4))
        assert screen_topic_count(centroids) == 1


def test_topic_labels_cover_expected_codes():
    assert N_TOPICS == 11
    assert TopicLabel.OPERATIONS_DELAYS_PROCEDURES.code == 0
    assert TopicLabel.CRIME_HARASSMENT_SECURITY.code == 10
    assert TopicLabel.UNASSIGNED.code == -1
    titles = [TopicLabel.from_code(c).title for c in range(11)]
    assert len(set(titles)) == 11
