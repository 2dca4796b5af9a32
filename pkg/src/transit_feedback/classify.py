"""Topic classifiers over TF-IDF features.

Linear models (multinomial logistic, linear SVM via one-vs-rest hinge, and
one-vs-rest squared loss) are trained with mini-batch SGD under a
class-weighted loss plus L2, matching label imbalance with inverse class
weights. A multinomial naive Bayes baseline consumes the same feature matrix.
All models expose one prediction contract through ClassifierHandle, so
evaluation and the external bridge classifier are interchangeable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import sparse

from .evaluation import MetricReport, confusion, metrics
from .labels import LABEL_TITLES, TopicLabel


class ClassifyError(Exception):
    pass


def class_weights(label_counts: np.ndarray) -> np.ndarray:
    """Inverse class weights w_c = N / (C * n_c): rare classes weigh more
    than 1, balanced data gives all ones."""
    counts = np.asarray(label_counts, dtype=float)
    if (counts < 1).any():
        empty = np.nonzero(counts < 1)[0].tolist()
        raise ClassifyError(f"zero-count class(es): {empty}")
    return counts.sum() / (len(counts) * counts)


class LossKind(Enum):
    CROSS_ENTROPY = "CrossEntropy"
    HINGE = "Hinge"
    SQUARED = "Squared"


@dataclass
class SgdHyperparams:
    epochs: int = 100
    batch_size: int = 64
    lr: float = 0.1            # step t uses lr / sqrt(t)
    l2: float = 1e-4
    seed: int = 0


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(
    W: np.ndarray,
    b: np.ndarray,
    X,
    y: np.ndarray,
    loss_kind: LossKind,
    weights: np.ndarray,
    l2: float = 0.0,
):
    """Batch objective mean_i w_{y_i} * loss_i + (l2/2)||W||^2 and its
    gradients w.r.t. W and b. X may be dense or CSR."""
    B = X.shape[0]
    C = W.shape[0]
    scores = X @ W.T + b
    scores = np.asarray(scores)
    wy = weights[y]
    onehot = np.zeros((B, C))
    onehot[np.arange(B), y] = 1.0

    if loss_kind is LossKind.CROSS_ENTROPY:
        p = _softmax(scores)
        logp = scores - scores.max(axis=1, keepdims=True)
        logp = logp - np.log(np.exp(logp).sum(axis=1, keepdims=True))
        losses = -logp[np.arange(B), y]
        dscores = wy[:, None] * (p - onehot) / B
    elif loss_kind is LossKind.HINGE:
        t = 2.0 * onehot - 1.0
        margins = 1.0 - t * scores
        losses = np.maximum(margins, 0.0).sum(axis=1)
        dscores = wy[:, None] * (-t) * (margins > 0) / B
    elif loss_kind is LossKind.SQUARED:
        diff = scores - onehot
        losses = (diff ** 2).sum(axis=1)
        dscores = wy[:, None] * 2.0 * diff / B
    else:
        raise ClassifyError(f"unknown loss kind {loss_kind}")

    loss = float((wy * losses).mean() + 0.5 * l2 * (W ** 2).sum())
    gW = dscores.T @ X
    gW = np.asarray(gW) + l2 * W
    gb = dscores.sum(axis=0)
    return loss, gW, gb


@dataclass
class LinearClassifier:
    W: np.ndarray              # C x V
    b: np.ndarray              # C
    loss_kind: LossKind
    class_weights: np.ndarray
    label_names: list[str]
    train_meta: dict = field(default_factory=dict)
    vocab_hash: str | None = None
    loss_trajectory: list[float] = field(default_factory=list)

    def scores(self, X) -> np.ndarray:
        return np.asarray(X @ self.W.T + self.b)

    def save(self, path: str | Path) -> None:
        doc = {
            "schema_version": 1,
            "kind": "Linear",
            "loss_kind": self.loss_kind.value,
            "W": self.W.tolist(),
            "b": self.b.tolist(),
            "class_weights": self.class_weights.tolist(),
            "label_names": self.label_names,
            "train_meta": self.train_meta,
            "vocab_hash": self.vocab_hash,
            "loss_trajectory": self.loss_trajectory,
        }
        Path(path).write_text(json.dumps(doc), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LinearClassifier":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if doc.get("kind") != "Linear":
            raise ClassifyError("not a linear classifier checkpoint")
        return cls(
            W=np.array(doc["W"]), b=np.array(doc["b"]),
            loss_kind=LossKind(doc["loss_kind"]),
            class_weights=np.array(doc["class_weights"]),
            label_names=list(doc["label_names"]),
            train_meta=doc["train_meta"], vocab_hash=doc["vocab_hash"],
            loss_trajectory=list(doc["loss_trajectory"]),
        )


def train_sgd(
    X,
    y: np.ndarray,
    loss_kind: LossKind = LossKind.CROSS_ENTROPY,
    weights: np.ndarray | None = None,
    hp: SgdHyperparams | None = None,
    label_names: list[str] | None = None,
    vocab_hash: str | None = None,
) -> LinearClassifier:
    """Mini-batch SGD with a 1/sqrt(t) step decay and fixed seeded shuffle
    order; deterministic per seed. Aborts on a NaN loss."""
    hp = hp or SgdHyperparams()
    y = np.asarray(y, dtype=np.int64)
    C = int(y.max()) + 1
    if C < 2:
        raise ClassifyError("need at least 2 classes")
    if weights is None:
        weights = class_weights(np.bincount(y, minlength=C))
    if label_names is None:
        label_names = [str(c) for c in range(C)]

    n, V = X.shape
    rng = np.random.default_rng(hp.seed)
    W = np.zeros((C, V))
    b = np.zeros(C)
    trajectory: list[float] = []
    t = 0
    for epoch in range(hp.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, hp.batch_size):
            idx = order[start:start + hp.batch_size]
            t += 1
            loss, gW, gb = loss_and_grad(
                W, b, X[idx], y[idx], loss_kind, weights, hp.l2)
            if not np.isfinite(loss):
                raise ClassifyError(
                    f"non-finite loss at epoch {epoch}, "
                    f"batch {start // hp.batch_size}")
            lr_t = hp.lr / np.sqrt(t)
            W -= lr_t * gW
            b -= lr_t * gb
            epoch_losses.append(loss)
        trajectory.append(float(np.mean(epoch_losses)))

    return LinearClassifier(
        W=W, b=b, loss_kind=loss_kind, class_weights=np.asarray(weights),
        label_names=label_names,
        train_meta={"epochs": hp.epochs, "batch_size": hp.batch_size,
                    "lr": hp.lr, "l2": hp.l2, "seed": hp.seed,
                    "schedule": "lr/sqrt(t)"},
        vocab_hash=vocab_hash, loss_trajectory=trajectory)


# ---------------------------------------------------------------------------
# naive Bayes

@dataclass
class NaiveBayesModel:
    log_priors: np.ndarray       # C
    log_likelihoods: np.ndarray  # C x V, rows exp-sum to 1
    smoothing: float
    label_names: list[str]
    vocab_hash: str | None = None

    def scores(self, X) -> np.ndarray:
        """Log-posterior (up to the evidence constant) per class."""
        return np.asarray(X @ self.log_likelihoods.T) + self.log_priors

    def save(self, path: str | Path) -> None:
        doc = {
            "schema_version": 1,
            "kind": "NaiveBayes",
            "log_priors": self.log_priors.tolist(),
            "log_likelihoods": self.log_likelihoods.tolist(),
            "smoothing": self.smoothing,
            "label_names": self.label_names,
            "vocab_hash": self.vocab_hash,
        }
        Path(path).write_text(json.dumps(doc), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NaiveBayesModel":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if doc.get("kind") != "NaiveBayes":
            raise ClassifyError("not a naive Bayes checkpoint")
        return cls(
            log_priors=np.array(doc["log_priors"]),
            log_likelihoods=np.array(doc["log_likelihoods"]),
            smoothing=doc["smoothing"],
            label_names=list(doc["label_names"]),
            vocab_hash=doc["vocab_hash"],
        )


def train_naive_bayes(
    X,
    y: np.ndarray,
    smoothing: float = 1.0,
    label_names: list[str] | None = None,
    vocab_hash: str | None = None,
) -> NaiveBayesModel:
    """Multinomial NB on TF-IDF weights treated as fractional counts, with
    Laplace smoothing."""
    if smoothing <= 0:
        raise ClassifyError("smoothing must be > 0")
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise ClassifyError("features and labels are misaligned")
    C = int(y.max()) + 1
    V = X.shape[1]
    class_counts = np.bincount(y, minlength=C).astype(float)
    if (class_counts < 1).any():
        raise ClassifyError("every class needs at least one example")
    log_priors = np.log(class_counts / class_counts.sum())
    loglik = np.zeros((C, V))
    for c in range(C):
        Xc = X[y == c]
        totals = np.asarray(Xc.sum(axis=0)).ravel() + smoothing
        loglik[c] = np.log(totals / totals.sum())
    if label_names is None:
        label_names = [str(c) for c in range(C)]
    return NaiveBayesModel(log_priors, loglik, smoothing, label_names,
                           vocab_hash)


# ---------------------------------------------------------------------------
# unified prediction

class HandleKind(Enum):
    LINEAR = "Linear"
    NAIVE_BAYES = "NaiveBayes"
    BRIDGE = "Bridge"


@dataclass
class ClassifierHandle:
    """Uniform prediction contract: feature vectors in (Linear/NB) or raw
    text (Bridge), argmax label and a C-long score vector out."""

    kind: HandleKind
    model: object
    label_names: list[str]

    @classmethod
    def linear(cls, model: LinearClassifier) -> "ClassifierHandle":
        return cls(HandleKind.LINEAR, model, model.label_names)

    @classmethod
    def naive_bayes(cls, model: NaiveBayesModel) -> "ClassifierHandle":
        return cls(HandleKind.NAIVE_BAYES, model, model.label_names)


def features_hash(vocab_terms: list[str]) -> str:
    return hashlib.sha256("\n".join(vocab_terms).encode("utf-8")).hexdigest()


def predict(
    handle: ClassifierHandle,
    X,
    vectorizer_hash: str | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Predict labels for a feature matrix. Returns (label codes, score
    matrix). Scores are raw margins (Linear) or log-posteriors (NB). Exact
    score ties break to the lowest class index."""
    if handle.kind is HandleKind.BRIDGE:
        raise ClassifyError("bridge handles consume text; use bridge_classify")
    model = handle.model
    model_hash = getattr(model, "vocab_hash", None)
    if (vectorizer_hash is not None and model_hash is not None
            and vectorizer_hash != model_hash):
        raise ClassifyError("vectorizer/vocabulary hash mismatch")
    scores = model.scores(X)
    labels = np.argmax(scores, axis=1)  # argmax takes the first maximum
    return labels, scores


def predict_one(handle: ClassifierHandle, fv: dict[int, float],
                n_features: int) -> tuple[int, np.ndarray]:
    row = sparse.csr_matrix(
        (list(fv.values()), ([0] * len(fv), list(fv.keys()))),
        shape=(1, n_features))
    labels, scores = predict(handle, row)
    return int(labels[0]), scores[0]


# ---------------------------------------------------------------------------
# cross-validation

def stratified_kfold(y: np.ndarray, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """k validation folds preserving per-class proportions (within one
    record). Folds partition the dataset."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for c in np.unique(y):
        idx = np.nonzero(y == c)[0]
        if len(idx) < k:
            raise ClassifyError(
                f"class {c} has {len(idx)} members; needs >= k={k}")
        idx = idx[rng.permutation(len(idx))]
        for i, j in enumerate(idx):
            folds[i % k].append(int(j))
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


@dataclass
class CvResult:
    fold_reports: list[MetricReport]
    fold_indices: list[np.ndarray]
    accuracies: list[float]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))


def kfold_cv(
    X,
    y: np.ndarray,
    label_names: list[str],
    train_fn,
    k: int = 5,
    seed: int = 0,
) -> CvResult:
    """Stratified k-fold cross-validation (k=5 gives the 80/20 split per
    fold). ``train_fn(X_train, y_train) -> ClassifierHandle``. Emits the
    per-fold accuracy distribution for box-plot style comparison."""
    folds = stratified_kfold(y, k, seed)
    reports, accs = [], []
    all_idx = np.arange(X.shape[0])
    for fold in folds:
        mask = np.ones(len(all_idx), dtype=bool)
        mask[fold] = False
        handle = train_fn(X[mask], y[mask])
        pred, _ = predict(handle, X[fold])
        rep = metrics(confusion(list(y[fold]), list(pred), label_names))
        reports.append(rep)
        accs.append(rep.accuracy)
    return CvResult(reports, folds, accs)


def topic_label_names() -> list[str]:
    return list(LABEL_TITLES)


def code_to_label(code: int) -> TopicLabel:
    return TopicLabel.from_code(code)


def bridge_classify(texts: list[str], client) -> list[tuple[TopicLabel, np.ndarray | None]]:
    """Classify raw texts through an external bridge endpoint (see
    bridge.BridgeClient). Failed requests come back as (UNASSIGNED, None)."""
    out: list[tuple[TopicLabel, np.ndarray | None]] = []
    for res in client.classify(texts):
        if res.failed:
            out.append((TopicLabel.UNASSIGNED, None))
        else:
            scores = None if res.scores is None else np.asarray(res.scores)
            out.append((TopicLabel.from_title(res.label), scores))
    return out
