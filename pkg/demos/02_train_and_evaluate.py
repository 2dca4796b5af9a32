"""Train and cross-validate TF-IDF linear classifiers.

Builds TF-IDF features over a synthetic labeled corpus, trains the three
loss variants plus Naive Bayes, and prints a side-by-side metric table. Run:

    python3 demos/02_train_and_evaluate.py
"""

import numpy as np

from transit_feedback.classify import (ClassifierHandle, LossKind,
                                       SgdHyperparams, kfold_cv,
                                       train_naive_bayes, train_sgd)
from transit_feedback.corpus import generate_synthetic_corpus
from transit_feedback.evaluation import report_table
from transit_feedback.features import TfidfVectorizer
from transit_feedback.textprep import build_vocabulary, count_terms

sc = generate_synthetic_corpus(n_docs=600, K_true=4, vocab_per_topic=25,
                               doc_len=30, seed=3)
streams = [r.text.split() for r in sc.records]
vocab = build_vocabulary(streams, min_count=2, orders={1})
counts = [count_terms(s, vocab, orders={1}) for s in streams]

vec = TfidfVectorizer.fit(vocab)
X = vec.matrix(counts)
y = np.asarray(sc.doc_labels)
names = [f"topic-{k}" for k in range(4)]
print(f"features: {X.shape[0]} docs x {X.shape[1]} terms")

reports, model_names = [], []
for kind in LossKind:
    hp = SgdHyperparams(epochs=25, lr=0.05 if kind is LossKind.SQUARED else 0.5,
                        seed=1)
    cv = kfold_cv(X, y, names,
                  lambda Xt, yt: ClassifierHandle.linear(
                      train_sgd(Xt, yt, kind, hp=hp, label_names=names)),
                  k=5, seed=1)
    print(f"{kind.value:14s} fold accuracies: "
          f"{', '.join(f'{a:.3f}' for a in cv.accuracies)}")
    reports.append(cv.fold_reports[0])
    model_names.append(kind.value)

cv_nb = kfold_cv(X, y, names,
                 lambda Xt, yt: ClassifierHandle.naive_bayes(
                     train_naive_bayes(Xt, yt, label_names=names)),
                 k=5, seed=1)
print(f"{'naive-bayes':14s} fold accuracies: "
      f"{', '.join(f'{a:.3f}' for a in cv_nb.accuracies)}")
reports.append(cv_nb.fold_reports[0])
model_names.append("naive-bayes")

print()
_, text_table = report_table(dict(zip(model_names, reports)))
print(text_table)
