"""Token-resampling hot loop, compiled with numba when available.

The compiled and pure-Python paths are the same function, so they execute the
identical arithmetic in the identical order; set MUTO_DISABLE_NUMBA=1 to force
the interpreted path.
"""

import os

import numpy as np


def _sweep_impl(
    token_doc,
    token_term,
    z,
    doc_topic,
    term_topic,
    pair_topic,
    matched_total,
    pair_of_term,
    uniforms,
    alpha_k,
    lam,
    lam_pair,
    n_topics,
):
    # Sequential collapsed Gibbs: decrement, score, inverse-CDF sample, increment.
    # Matched tokens use the document factor times the pair-topic factor; unmatched
    # tokens use the document factor alone. Probabilities stay unnormalized and the
    # uniform is scaled by the total, which keeps the compiled and interpreted
    # paths bit-identical.
    probs = np.empty(n_topics)
    for n in range(token_doc.shape[0]):
        d = token_doc[n]
        w = token_term[n]
        old = z[n]
        p = pair_of_term[w]
        doc_topic[d, old] -= 1
        term_topic[w, old] -= 1
        if p >= 0:
            pair_topic[p, old] -= 1
            matched_total[old] -= 1
            total = 0.0
            for k in range(n_topics):
                v = (
                    (doc_topic[d, k] + alpha_k)
                    * (pair_topic[p, k] + lam_pair)
                    / (matched_total[k] + lam)
                )
                probs[k] = v
                total += v
        else:
            total = 0.0
            for k in range(n_topics):
                v = doc_topic[d, k] + alpha_k
                probs[k] = v
                total += v
        u = uniforms[n] * total
        new = n_topics - 1
        acc = 0.0
        for k in range(n_topics):
            acc += probs[k]
            if u < acc:
                new = k
                break
        z[n] = new
        doc_topic[d, new] += 1
        term_topic[w, new] += 1
        if p >= 0:
            pair_topic[p, new] += 1
            matched_total[new] += 1


sweep_python = _sweep_impl

if os.environ.get("MUTO_DISABLE_NUMBA"):
    sweep_tokens = _sweep_impl
else:
    try:
        from numba import njit

        sweep_tokens = njit(cache=True)(_sweep_impl)
    except ImportError:  # pragma: no cover
        sweep_tokens = _sweep_impl
