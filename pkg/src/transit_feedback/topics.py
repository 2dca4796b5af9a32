"""Latent topic discovery and condensation to the 11 broad labels.

A collapsed Gibbs sampler fits a K-topic model to document term counts; the
per-token conditional is p(z=k) proportional to
(n_dk + alpha) * (n_kw + beta) / (n_k + V*beta) with the token's current
assignment removed. Raw topics are then condensed to broad labels via an
analyst-editable mapping, with niche categories (crime/harassment/security,
crowding) held out up front and labeled from their CRM category.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage as scipy_linkage
from scipy.spatial.distance import pdist
from scipy.special import gammaln

from ._gibbs import fold_in_sweeps, gibbs_sweep
from .corpus import FeedbackRecord
from .labels import TopicLabel
from .textprep import Vocabulary


class TopicsError(Exception):
    pass


def vocab_hash(vocab: Vocabulary) -> str:
    h = hashlib.sha256("\n".join(vocab.terms).encode("utf-8"))
    return h.hexdigest()


# ---------------------------------------------------------------------------
# screening for the topic-count upper bound

def screen_topic_count(
    category_centroids: np.ndarray,
    method: str = "average",
    distance_threshold: float = 0.5,
) -> int:
    """Agglomerative clustering (cosine distance) of per-category TF-IDF
    centroids; the cluster count at the cut threshold is the recommended
    upper bound on K."""
    centroids = np.asarray(category_centroids, dtype=float)
    n = centroids.shape[0]
    if n < 2:
        return n
    dists = pdist(centroids, metric="cosine")
    dists = np.clip(dists, 0.0, 2.0)  # guard fp noise on identical rows
    tree = scipy_linkage(dists, method=method)
    clusters = fcluster(tree, t=distance_threshold, criterion="distance")
    return int(clusters.max())


# ---------------------------------------------------------------------------
# model state

@dataclass
class LdaModel:
    K: int
    alpha: float
    beta: float
    n_kw: np.ndarray          # K x V topic-word counts
    n_dk: np.ndarray          # D x K document-topic counts
    n_k: np.ndarray           # K, tokens per topic
    assignments: np.ndarray   # one topic id per token (flattened corpus)
    doc_ids: np.ndarray       # token -> document
    word_ids: np.ndarray      # token -> vocabulary column
    vocab: Vocabulary
    seed: int
    log_likelihoods: list[float]

    @property
    def V(self) -> int:
        return self.n_kw.shape[1]

    def topic_word_dists(self) -> np.ndarray:
        """Smoothed topic-word probabilities, rows summing to 1."""
        return ((self.n_kw + self.beta)
                / (self.n_k[:, None] + self.V * self.beta))

    def doc_topic_dists(self) -> np.ndarray:
        lens = self.n_dk.sum(axis=1, keepdims=True)
        return (self.n_dk + self.alpha) / (lens + self.K * self.alpha)

    def check_counts(self) -> None:
        """Count-table consistency against the per-token assignments; raises
        on violation."""
        if not np.array_equal(self.n_kw.sum(axis=1), self.n_k):
            raise TopicsError("n_kw row sums disagree with n_k")
        if (self.n_kw < 0).any() or (self.n_dk < 0).any():
            raise TopicsError("negative counts")
        kw = np.zeros_like(self.n_kw)
        np.add.at(kw, (self.assignments, self.word_ids), 1)
        if not np.array_equal(kw, self.n_kw):
            raise TopicsError("n_kw disagrees with token assignments")
        dk = np.zeros_like(self.n_dk)
        np.add.at(dk, (self.doc_ids, self.assignments), 1)
        if not np.array_equal(dk, self.n_dk):
            raise TopicsError("n_dk disagrees with token assignments")

    def save(self, path: str | Path) -> None:
        doc = {
            "schema_version": 1,
            "K": self.K,
            "alpha": self.alpha,
            "beta": self.beta,
            "seed": self.seed,
            "vocab_hash": vocab_hash(self.vocab),
            "vocab": self.vocab.to_dict(),
            "n_kw": self.n_kw.tolist(),
            "n_dk": self.n_dk.tolist(),
            "assignments": self.assignments.tolist(),
            "doc_ids": self.doc_ids.tolist(),
            "word_ids": self.word_ids.tolist(),
            "log_likelihoods": self.log_likelihoods,
        }
        Path(path).write_text(json.dumps(doc), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LdaModel":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        vocab = Vocabulary.from_dict(doc["vocab"])
        if vocab_hash(vocab) != doc["vocab_hash"]:
            raise TopicsError("vocabulary hash mismatch in checkpoint")
        n_kw = np.array(doc["n_kw"], dtype=np.int64)
        model = cls(
            K=doc["K"], alpha=doc["alpha"], beta=doc["beta"],
            n_kw=n_kw,
            n_dk=np.array(doc["n_dk"], dtype=np.int64),
            n_k=n_kw.sum(axis=1),
            assignments=np.array(doc["assignments"], dtype=np.int64),
            doc_ids=np.array(doc["doc_ids"], dtype=np.int64),
            word_ids=np.array(doc["word_ids"], dtype=np.int64),
            vocab=vocab, seed=doc["seed"],
            log_likelihoods=list(doc["log_likelihoods"]),
        )
        model.check_counts()
        return model


def _flatten_corpus(doc_term_counts: list[dict[int, int]]):
    doc_ids, word_ids = [], []
    for d, counts in enumerate(doc_term_counts):
        for w in sorted(counts):
            doc_ids.extend([d] * counts[w])
            word_ids.extend([w] * counts[w])
    return (np.asarray(doc_ids, dtype=np.int64),
            np.asarray(word_ids, dtype=np.int64))


def _log_likelihood(n_kw, n_dk, n_k, alpha, beta) -> float:
    K, V = n_kw.shape
    doc_lens = n_dk.sum(axis=1)
    ll = K * (gammaln(V * beta) - V * gammaln(beta))
    ll += gammaln(n_kw + beta).sum() - gammaln(n_k + V * beta).sum()
    D = n_dk.shape[0]
    ll += D * (gammaln(K * alpha) - K * gammaln(alpha))
    ll += gammaln(n_dk + alpha).sum() - gammaln(doc_lens + K * alpha).sum()
    return float(ll)


def fit_lda(
    doc_term_counts: list[dict[int, int]],
    vocab: Vocabulary,
    K: int,
    alpha: float | None = None,
    beta: float = 0.01,
    n_iters: int = 1000,
    seed: int = 0,
    early_stop_tol: float = 1e-4,
    early_stop_window: int = 50,
    sweep_callback=None,
) -> LdaModel:
    """Fit by collapsed Gibbs sampling: random initial assignments, then full
    resampling sweeps until ``n_iters`` or a log-likelihood plateau (relative
    change below ``early_stop_tol`` across ``early_stop_window`` sweeps).
    Deterministic per seed. ``sweep_callback(model, sweep)`` runs after each
    sweep when provided (used for invariant checks)."""
    if K < 1:
        raise TopicsError("K must be >= 1")
    if not doc_term_counts or len(vocab) == 0:
        raise TopicsError("empty corpus or vocabulary")
    doc_ids, word_ids = _flatten_corpus(doc_term_counts)
    n_tokens = doc_ids.shape[0]
    if n_tokens == 0:
        raise TopicsError("corpus has no in-vocabulary tokens")
    if K > n_tokens:
        raise TopicsError(f"K={K} exceeds total token count {n_tokens}")
    if alpha is None:
        alpha = 50.0 / K

    rng = np.random.default_rng(seed)
    V = len(vocab)
    z = rng.integers(0, K, size=n_tokens, dtype=np.int64)
    D = len(doc_term_counts)
    n_dk = np.zeros((D, K), dtype=np.int64)
    n_kw = np.zeros((K, V), dtype=np.int64)
    np.add.at(n_dk, (doc_ids, z), 1)
    np.add.at(n_kw, (z, word_ids), 1)
    n_k = np.bincount(z, minlength=K).astype(np.int64)

    model = LdaModel(K=K, alpha=alpha, beta=beta, n_kw=n_kw, n_dk=n_dk,
                     n_k=n_k, assignments=z, doc_ids=doc_ids,
                     word_ids=word_ids, vocab=vocab, seed=seed,
                     log_likelihoods=[])

    for sweep in range(n_iters):
        uniforms = rng.random(n_tokens)
        gibbs_sweep(doc_ids, word_ids, z, n_dk, n_kw, n_k,
                    float(alpha), float(beta), uniforms)
        ll = _log_likelihood(n_kw, n_dk, n_k, alpha, beta)
        if not np.isfinite(ll):
            raise TopicsError(f"non-finite log-likelihood at sweep {sweep}")
        model.log_likelihoods.append(ll)
        if sweep_callback is not None:
            sweep_callback(model, sweep)
        if sweep >= early_stop_window:
            past = model.log_likelihoods[sweep - early_stop_window]
            if abs((ll - past) / abs(past)) < early_stop_tol:
                break
    return model


def infer_doc_topics(
    model: LdaModel,
    doc_term_counts: list[dict[int, int]],
    n_sweeps: int = 50,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Fold-in inference with frozen topic-word counts. Returns (theta,
    empty_flags): theta rows sum to 1; documents with zero in-vocabulary
    tokens get a uniform row and a raised flag."""
    K = model.K
    rng = np.random.default_rng(seed)
    thetas = np.empty((len(doc_term_counts), K))
    flags = np.zeros(len(doc_term_counts), dtype=bool)
    for d, counts in enumerate(doc_term_counts):
        word_ids = np.asarray(
            [w for w in sorted(counts) for _ in range(counts[w])],
            dtype=np.int64)
        n = word_ids.shape[0]
        if n == 0:
            thetas[d] = 1.0 / K
            flags[d] = True
            continue
        z = rng.integers(0, K, size=n, dtype=np.int64)
        local = np.bincount(z, minlength=K).astype(np.int64)
        uniforms = rng.random(n_sweeps * n)
        fold_in_sweeps(word_ids, z, local, model.n_kw, model.n_k,
                       float(model.alpha), float(model.beta),
                       n_sweeps, uniforms)
        thetas[d] = (local + model.alpha) / (n + K * model.alpha)
    return thetas, flags


def top_words(model: LdaModel, k: int, n: int) -> list[tuple[str, float]]:
    """The n highest-probability terms of topic k (smoothed), descending,
    ties broken lexicographically."""
    if not 0 <= k < model.K:
        raise TopicsError(f"topic index {k} out of range")
    if n <= 0:
        return []
    probs = (model.n_kw[k] + model.beta) / (model.n_k[k] + model.V * model.beta)
    order = sorted(range(model.V), key=lambda w: (-probs[w], model.vocab.terms[w]))
    return [(model.vocab.terms[w], float(probs[w])) for w in order[:n]]


def greedy_topic_match(phi_est: np.ndarray, phi_true: np.ndarray) -> dict[int, int]:
    """Greedy assignment of estimated topics to planted ones by minimum total
    variation distance (LDA topic indices are arbitrary)."""
    K_est, K_true = phi_est.shape[0], phi_true.shape[0]
    tv = np.array([[0.5 * np.abs(phi_est[i] - phi_true[j]).sum()
                    for j in range(K_true)] for i in range(K_est)])
    mapping: dict[int, int] = {}
    used: set[int] = set()
    for _ in range(min(K_est, K_true)):
        best = None
        for i in range(K_est):
            if i in mapping:
                continue
            for j in range(K_true):
                if j in used:
                    continue
                if best is None or tv[i, j] < tv[best]:
                    best = (i, j)
        mapping[best[0]] = best[1]
        used.add(best[1])
    return mapping


# ---------------------------------------------------------------------------
# condensation and labeling

class LabelSource(Enum):
    LDA = "LDA"
    MANUAL_HOLDOUT = "ManualHoldout"
    MODEL = "Model"


@dataclass(frozen=True)
class LabeledRecord:
    record: FeedbackRecord
    label: TopicLabel
    label_source: LabelSource
    primary_score: float

    def to_dict(self) -> dict:
        d = self.record.to_dict()
        d["label"] = self.label.title
        d["label_source"] = self.label_source.value
        d["primary_score"] = self.primary_score
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LabeledRecord":
        rec_fields = {k: v for k, v in d.items()
                      if k not in ("label", "label_source", "primary_score")}
        return cls(
            record=FeedbackRecord.from_dict(rec_fields),
            label=TopicLabel.from_title(d["label"]),
            label_source=LabelSource(d["label_source"]),
            primary_score=float(d["primary_score"]),
        )


def labeled_to_jsonl(records: list[LabeledRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")


def labeled_from_jsonl(path: str | Path) -> list[LabeledRecord]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(LabeledRecord.from_dict(json.loads(line)))
    return out


@dataclass
class TopicCondensation:
    """Analyst-curated map from raw topic ids to broad labels, plus the
    manual-holdout category map."""

    mapping: dict[int, TopicLabel]
    manual_holdouts: dict[str, TopicLabel]

    @classmethod
    def load(cls, path: str | Path, K: int | None = None) -> "TopicCondensation":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        mapping = {int(k): TopicLabel.from_title(v)
                   for k, v in doc["mapping"].items()}
        holdouts = {k: TopicLabel.from_title(v)
                    for k, v in doc.get("holdouts", {}).items()}
        if K is not None:
            missing = sorted(set(range(K)) - set(mapping))
            if missing:
                raise TopicsError(f"condensation missing topic ids: {missing}")
        return cls(mapping, holdouts)

    def save(self, path: str | Path) -> None:
        doc = {
            "schema_version": 1,
            "mapping": {str(k): v.title for k, v in self.mapping.items()},
            "holdouts": {k: v.title for k, v in self.manual_holdouts.items()},
        }
        Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")


DEFAULT_HOLDOUTS: dict[str, TopicLabel] = {
    "Crime": TopicLabel.CRIME_HARASSMENT_SECURITY,
    "Harassment": TopicLabel.CRIME_HARASSMENT_SECURITY,
    "Security": TopicLabel.CRIME_HARASSMENT_SECURITY,
    "Crowding": TopicLabel.CROWDING,
}


def condense_topics(
    assignments: list[int],
    condensation: TopicCondensation,
) -> list[TopicLabel]:
    """Relabel each document's raw topic id with its broad label."""
    out = []
    for topic_id in assignments:
        if topic_id not in condensation.mapping:
            raise TopicsError(f"unmapped topic id {topic_id}")
        out.append(condensation.mapping[topic_id])
    return out


def assign_primary_topic(
    theta: np.ndarray,
    threshold: float = 0.5,
    condensation: TopicCondensation | None = None,
) -> tuple[TopicLabel, float]:
    """Argmax label when the primary topic score clears the threshold, else
    Unassigned. Ties break to the lowest topic index. With a condensation the
    argmax raw topic is mapped to its broad label; without one, theta is taken
    to be indexed by broad-label codes directly."""
    theta = np.asarray(theta, dtype=float)
    k = int(np.argmax(theta))  # argmax returns the first (lowest) index
    score = float(theta[k])
    if score < threshold:
        return TopicLabel.UNASSIGNED, score
    if condensation is not None:
        if k not in condensation.mapping:
            raise TopicsError(f"unmapped topic id {k}")
        return condensation.mapping[k], score
    return TopicLabel.from_code(k), score


def holdout_manual_topics(
    records: list[FeedbackRecord],
    holdout_map: dict[str, TopicLabel] | None = None,
) -> tuple[list[LabeledRecord], list[FeedbackRecord]]:
    """Split off records whose CRM problem category belongs to a manual
    topic; they are labeled from the category and never enter the LDA fit."""
    hmap = DEFAULT_HOLDOUTS if holdout_map is None else holdout_map
    held, remaining = [], []
    for rec in records:
        if rec.problem_category in hmap:
            held.append(LabeledRecord(
                record=rec, label=hmap[rec.problem_category],
                label_source=LabelSource.MANUAL_HOLDOUT, primary_score=1.0))
        else:
            remaining.append(rec)
    return held, remaining


def topic_category_ratios(
    labeled: list[LabeledRecord],
) -> dict[TopicLabel, dict[str, float]]:
    """Per topic, the share each CRM problem category contributes. Only
    records carrying both a label and a category count; topics with zero
    such records are omitted."""
    counts: dict[TopicLabel, dict[str, int]] = {}
    for lr in labeled:
        if lr.record.problem_category is None or lr.label is TopicLabel.UNASSIGNED:
            continue
        per = counts.setdefault(lr.label, {})
        per[lr.record.problem_category] = per.get(lr.record.problem_category, 0) + 1
    ratios: dict[TopicLabel, dict[str, float]] = {}
    for topic, per in counts.items():
        total = sum(per.values())
        ratios[topic] = {cat: c / total for cat, c in per.items()}
    return ratios
