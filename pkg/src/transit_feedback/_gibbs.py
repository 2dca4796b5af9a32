"""Numba kernels for the collapsed Gibbs sampler.

The sweep is sequential over tokens (determinism requires it); the per-token
conditional uses the current count tables with the token's own assignment
removed. Randomness comes in as a pre-drawn uniform array so the RNG stays a
single seeded generator owned by the caller.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def gibbs_sweep(doc_ids, word_ids, z, n_dk, n_kw, n_k, alpha, beta, uniforms):
    """One full sweep, resampling every token's topic in place."""
    K = n_kw.shape[0]
    V = n_kw.shape[1]
    vbeta = V * beta
    probs = np.empty(K, dtype=np.float64)
    for i in range(doc_ids.shape[0]):
        d = doc_ids[i]
        w = word_ids[i]
        k_old = z[i]
        n_dk[d, k_old] -= 1
        n_kw[k_old, w] -= 1
        n_k[k_old] -= 1

        total = 0.0
        for k in range(K):
            p = (n_dk[d, k] + alpha) * (n_kw[k, w] + beta) / (n_k[k] + vbeta)
            total += p
            probs[k] = total

        u = uniforms[i] * total
        k_new = 0
        while k_new < K - 1 and probs[k_new] <= u:
            k_new += 1

        z[i] = k_new
        n_dk[d, k_new] += 1
        n_kw[k_new, w] += 1
        n_k[k_new] += 1


@njit(cache=True)
def fold_in_sweeps(word_ids, z, n_dk_local, n_kw, n_k, alpha, beta,
                   n_sweeps, uniforms):
    """Fold-in inference for one document with frozen topic-word counts."""
    K = n_kw.shape[0]
    V = n_kw.shape[1]
    vbeta = V * beta
    n = word_ids.shape[0]
    probs = np.empty(K, dtype=np.float64)
    for s in range(n_sweeps):
        for i in range(n):
            w = word_ids[i]
            k_old = z[i]
            n_dk_local[k_old] -= 1
            total = 0.0
            for k in range(K):
                p = ((n_dk_local[k] + alpha)
                     * (n_kw[k, w] + beta) / (n_k[k] + vbeta))
                total += p
                probs[k] = total
            u = uniforms[s * n + i] * total
            k_new = 0
            while k_new < K - 1 and probs[k_new] <= u:
                k_new += 1
            z[i] = k_new
            n_dk_local[k_new] += 1
