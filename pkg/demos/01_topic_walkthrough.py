"""Topic modeling walkthrough on a synthetic corpus.

Generates documents from a known topic-mixture process, fits the collapsed
Gibbs sampler, and checks how well the planted topics are recovered. Run:

    python3 demos/01_topic_walkthrough.py
"""

import numpy as np

from transit_feedback.corpus import generate_synthetic_corpus
from transit_feedback.textprep import build_vocabulary, count_terms
from transit_feedback.topics import fit_lda, greedy_topic_match, top_words

K_TRUE = 5
SEED = 7

sc = generate_synthetic_corpus(n_docs=800, K_true=K_TRUE, vocab_per_topic=20,
                               doc_len=35, seed=SEED)
print(f"generated {len(sc.records)} docs over {len(sc.vocab_words)} words "
      f"({K_TRUE} planted topics, disjoint vocabularies)")

streams = [r.text.split() for r in sc.records]
vocab = build_vocabulary(streams, min_count=1, orders={1})
counts = [count_terms(s, vocab, orders={1}) for s in streams]

model = fit_lda(counts, vocab, K=K_TRUE, n_iters=400, seed=SEED)
print(f"fit stopped after {len(model.log_likelihoods)} sweeps, "
      f"final log-likelihood {model.log_likelihoods[-1]:.1f}")

for k in range(model.K):
    terms = ", ".join(t for t, _ in top_words(model, k, 6))
    print(f"  topic {k}: {terms}")

# How close are the fitted topic-word distributions to the planted ones?
col = [sc.vocab_words.index(t) for t in vocab.terms]
phi_true = sc.topic_word_dists[:, col]
mapping = greedy_topic_match(model.topic_word_dists(), phi_true)
tvs = [0.5 * np.abs(model.topic_word_dists()[i] - phi_true[j]).sum()
       for i, j in mapping.items()]
print(f"mean total variation to planted topics: {np.mean(tvs):.4f}")

theta = model.doc_topic_dists()
remapped = np.array([mapping[k] for k in np.argmax(theta, axis=1)])
acc = np.mean(remapped == np.asarray(sc.doc_labels))
print(f"documents whose argmax topic matches the planted label: {acc:.1%}")
