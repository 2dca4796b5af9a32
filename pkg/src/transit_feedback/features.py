"""TF-IDF vectorization over the shared unigram/bigram vocabulary.

TF is the within-document term share, IDF the natural log of corpus size over
document frequency, and the feature weight their product. Vocabulary
construction guarantees doc_freq >= 1, so IDF is always finite and
non-negative; no smoothing is applied.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from .textprep import Vocabulary


class FeaturesError(Exception):
    pass


def term_frequency(term_id: int, doc_counts: dict[int, int]) -> float:
    """count(t, d) / total terms counted in d; 0 for an empty document."""
    total = sum(doc_counts.values())
    if total == 0:
        return 0.0
    return doc_counts.get(term_id, 0) / total


@dataclass
class TfidfVectorizer:
    vocab: Vocabulary
    idf: np.ndarray    # aligned with vocab.terms
    n_docs: int

    @classmethod
    def fit(cls, vocab: Vocabulary) -> "TfidfVectorizer":
        D = vocab.n_docs
        if D < 1:
            raise FeaturesError("vocabulary carries no corpus size")
        idf = np.array([math.log(D / vocab.doc_freq[t]) for t in vocab.terms])
        if (idf < 0).any():
            raise FeaturesError("doc_freq exceeds corpus size")
        return cls(vocab=vocab, idf=idf, n_docs=D)

    def inverse_document_frequency(self, term: str) -> float:
        """log(D / doc_freq(t)); 0 for out-of-vocabulary terms."""
        tid = self.vocab.index.get(term)
        if tid is None:
            return 0.0
        return float(self.idf[tid])

    def vectorize(self, doc_counts: dict[int, int]) -> dict[int, float]:
        """Sparse TF*IDF weights for one document's term counts."""
        total = sum(doc_counts.values())
        if total == 0:
            return {}
        out: dict[int, float] = {}
        for tid, c in doc_counts.items():
            if not 0 <= tid < len(self.vocab):
                raise FeaturesError(f"term id {tid} outside vocabulary")
            w = (c / total) * self.idf[tid]
            if w != 0.0:
                out[tid] = w
        return out

    def matrix(self, docs_counts: list[dict[int, int]]) -> sparse.csr_matrix:
        """CSR feature matrix for a document collection."""
        rows, cols, vals = [], [], []
        for d, counts in enumerate(docs_counts):
            for tid, w in self.vectorize(counts).items():
                rows.append(d)
                cols.append(tid)
                vals.append(w)
        return sparse.csr_matrix(
            (vals, (rows, cols)),
            shape=(len(docs_counts), len(self.vocab)))

    def save(self, path: str | Path) -> None:
        doc = {
            "schema_version": 1,
            "vocab": self.vocab.to_dict(),
            "idf": self.idf.tolist(),
            "n_docs": self.n_docs,
        }
        Path(path).write_text(json.dumps(doc), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TfidfVectorizer":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(vocab=Vocabulary.from_dict(doc["vocab"]),
                   idf=np.array(doc["idf"], dtype=float),
                   n_docs=doc["n_docs"])
