import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from transit_feedback.features import (FeaturesError, TfidfVectorizer,
                                       term_frequency)
from transit_feedback.textprep import build_vocabulary, count_terms

# 20 short documents about transit complaints; fixed so the oracle comparison
# below is a stable fixture rather than a random draw.
FIXTURE_DOCS = [
    "bus late again this morning",
    "bus never came at all",
    "train car smelled terrible",
    "driver was rude to riders",
    "card reader broken at gate",
    "station escalator out of service",
    "train delayed twenty minutes",
    "driver skipped my stop",
    "bus crowded beyond belief",
    "station announcement was unclear",
    "card would not reload online",
    "train doors closed on passengers",
    "bus driver ran a red light",
    "elevator broken again at station",
    "late train made me miss work",
    "rude agent at the fare gate",
    "bus stop sign fell over",
    "cold car on the red line",
    "crowded platform at rush hour",
    "came early and left early",
]


def tokenized_fixture():
    return [d.split() for d in FIXTURE_DOCS]


def brute_force_tfidf(streams, orders=(1, 2)):
    """Independent double-loop oracle: raw term strings, no shared code with
    the vectorizer beyond arithmetic.

    TF(t, d) = count(t, d) / len(d);  IDF(t) = ln(D / doc_freq(t)).
    """
    def ngrams(toks):
        out = []
        if 1 in orders:
            out += toks
        if 2 in orders:
            out += [f"{a} {b}" for a, b in zip(toks, toks[1:])]
        return out

    grams = [ngrams(s) for s in streams]
    D = len(streams)
    all_terms = sorted({t for g in grams for t in g})
    doc_freq = {t: sum(1 for g in grams if t in g) for t in all_terms}
    weights = []
    for g in grams:
        row = {}
        for t in all_terms:
            c = g.count(t)
            if c == 0:
                continue
            tf = c / len(g)
            idf = math.log(D / doc_freq[t])
            if tf * idf != 0.0:
                row[t] = tf * idf
        weights.append(row)
    return weights


class TestTermFrequency:
    def test_fraction_of_document(self):
        assert term_frequency(0, {0: 2, 1: 3}) == 2 / 5

    def test_empty_document(self):
        assert term_frequency(0, {}) == 0.0

    def test_absent_term(self):
        assert term_frequency(7, {0: 4}) == 0.0


class TestTfidfAgainstOracle:
    def test_matches_brute_force(self):
        streams = tokenized_fixture()
        vocab = build_vocabulary(streams, min_count=1, orders={1, 2})
        vec = TfidfVectorizer.fit(vocab)
        oracle = brute_force_tfidf(streams)

        for stream, expected in zip(streams, oracle):
            got = vec.vectorize(count_terms(stream, vocab))
            got_by_term = {vocab.terms[tid]: w for tid, w in got.items()}
            assert set(got_by_term) == set(expected)
            for t in expected:
                assert abs(got_by_term[t] - expected[t]) <= 1e-12

    def test_idf_formula(self):
        streams = tokenized_fixture()
        vocab = build_vocabulary(streams, min_count=1, orders={1})
        vec = TfidfVectorizer.fit(vocab)
        D = len(streams)
        for t in vocab.terms:
            expected = math.log(D / vocab.doc_freq[t])
            assert vec.inverse_document_frequency(t) == pytest.approx(
                expected, abs=1e-15)

    def test_oov_idf_is_zero(self):
        vocab = build_vocabulary([["a", "b"], ["a"]], min_count=1, orders={1})
        vec = TfidfVectorizer.fit(vocab)
        assert vec.inverse_document_frequency("never seen") == 0.0

    def test_term_in_every_doc_weights_zero(self):
        # IDF = ln(D/D) = 0, so the term is dropped from sparse output.
        vocab = build_vocabulary([["a", "b"], ["a", "c"]],
                                 min_count=1, orders={1})
        vec = TfidfVectorizer.fit(vocab)
        out = vec.vectorize(count_terms(["a", "b"], vocab))
        assert vocab.index["a"] not in out
        assert vocab.index["b"] in out


class TestVectorizerMechanics:
    def test_matrix_matches_vectorize(self):
        streams = tokenized_fixture()
        vocab = build_vocabulary(streams, min_count=1, orders={1, 2})
        vec = TfidfVectorizer.fit(vocab)
        counts = [count_terms(s, vocab) for s in streams]
        X = vec.matrix(counts)
        assert X.shape == (len(streams), len(vocab.terms))
        for i, c in enumerate(counts):
            sparse_row = vec.vectorize(c)
            dense = np.asarray(X[i].todense()).ravel()
            for tid, w in sparse_row.items():
                assert dense[tid] == pytest.approx(w, abs=1e-15)
            assert np.count_nonzero(dense) == len(sparse_row)

    def test_empty_doc_vectorizes_empty(self):
        vocab = build_vocabulary([["a"], ["a", "b"]], min_count=1, orders={1})
        vec = TfidfVectorizer.fit(vocab)
        assert vec.vectorize({}) == {}

    def test_out_of_range_term_id(self):
        vocab = build_vocabulary([["a"], ["a"]], min_count=1, orders={1})
        vec = TfidfVectorizer.fit(vocab)
        with pytest.raises(FeaturesError):
            vec.vectorize({5: 1})

    def test_save_load_roundtrip(self, tmp_path):
        streams = tokenized_fixture()
        vocab = build_vocabulary(streams, min_count=1, orders={1, 2})
        vec = TfidfVectorizer.fit(vocab)
        p = tmp_path / "vec.json"
        vec.save(p)
        again = TfidfVectorizer.load(p)
        assert again.vocab.terms == vec.vocab.terms
        np.testing.assert_allclose(again.idf, vec.idf, atol=0)
        assert again.n_docs == vec.n_docs

    @given(st.lists(
        st.lists(st.sampled_from("abcdef"), min_size=1, max_size=8),
        min_size=2, max_size=10))
    def test_weights_never_negative(self, streams):
        vocab = build_vocabulary(streams, min_count=1, orders={1})
        vec = TfidfVectorizer.fit(vocab)
        for s in streams:
            for w in vec.vectorize(count_terms(s, vocab)).values():
                assert w > 0.0
