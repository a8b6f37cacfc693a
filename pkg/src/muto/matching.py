"""Vocabulary matchings, edge weights, and the maximum-weight matching step.

The M-step scores every candidate pair (i, j) by the log-likelihood gain of
moving both terms' tokens from the language background distributions into the
shared topics, plus the log prior weight:

    mu(i,j) = sum_k C_k(i,j) * log beta_k(i,j)
              - freq_S(i) * log rho_S(i) - freq_T(j) * log rho_T(j)
              + log pi(i,j)

where C_k(i,j) adds the two terms' topic-k token counts and beta, rho are
smoothed point estimates taken from the sampler snapshot. A pair is worth
including only when mu > 0: leaving both terms in the background contributes
zero by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import MutoError

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, types only
    from .corpus import Vocabulary
    from .priors import PriorMatrix
    from .sampler import SamplerSnapshot


class Matching:
    """Injective partial pairing of source and target term ids."""

    __slots__ = ("pairs", "_s2t", "_t2s")

    def __init__(self, pairs: Iterable[tuple[int, int]] = ()):
        norm = tuple(sorted((int(i), int(j)) for i, j in pairs))
        s2t: dict[int, int] = {}
        t2s: dict[int, int] = {}
        for i, j in norm:
            if i in s2t:
                raise MutoError(f"source id {i} appears in more than one pair")
            if j in t2s:
                raise MutoError(f"target id {j} appears in more than one pair")
            s2t[i] = j
            t2s[j] = i
        self.pairs = norm
        self._s2t = s2t
        self._t2s = t2s

    @property
    def source_to_target(self) -> dict[int, int]:
        return self._s2t

    @property
    def target_to_source(self) -> dict[int, int]:
        return self._t2s

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __contains__(self, pair) -> bool:
        i, j = pair
        return self._s2t.get(i) == j

    def __eq__(self, other) -> bool:
        return isinstance(other, Matching) and self.pairs == other.pairs

    def __hash__(self) -> int:
        return hash(self.pairs)

    def __repr__(self) -> str:
        return f"Matching({len(self.pairs)} pairs)"


@dataclass(frozen=True)
class SizeSchedule:
    """Per-M-step fractions of the size cap the matching may grow to."""

    fractions: tuple[float, ...]
    cap: int

    def __post_init__(self):
        if not self.fractions:
            raise MutoError("schedule needs at least one fraction")
        if any(not (0 < f <= 1) for f in self.fractions):
            raise MutoError("schedule fractions must lie in (0, 1]")
        if any(b < a for a, b in zip(self.fractions, self.fractions[1:])):
            raise MutoError("schedule fractions must be nondecreasing")
        if abs(self.fractions[-1] - 1.0) > 1e-9:
            raise MutoError("final schedule fraction must be 1")
        if self.cap < 1:
            raise MutoError("schedule cap must be >= 1")

    @classmethod
    def linear(cls, n_steps: int, cap: int) -> "SizeSchedule":
        return cls(tuple((s + 1) / n_steps for s in range(n_steps)), cap)


def schedule_size(schedule: SizeSchedule, m_step_index: int) -> int:
    if not (0 <= m_step_index < len(schedule.fractions)):
        raise MutoError(f"m-step index {m_step_index} outside schedule of length {len(schedule.fractions)}")
    return math.ceil(schedule.fractions[m_step_index] * schedule.cap)


def initial_matching(vocab_s: "Vocabulary", vocab_t: "Vocabulary", min_length: int = 6) -> Matching:
    """Pair terms spelled identically in both languages, length >= min_length.

    For related orthographies this is a high-precision seed matching; the
    default of six characters skips short function-like words.
    """
    if min_length < 1:
        raise MutoError("min_length must be >= 1")
    pairs = [
        (i, vocab_t.index[term])
        for term, i in vocab_s.index.items()
        if len(term) >= min_length and term in vocab_t.index
    ]
    return Matching(pairs)


class WeightMatrix:
    """Sparse candidate-edge weights, stored lexicographically by (i, j)."""

    def __init__(self, source_ids, target_ids, weights):
        i = np.asarray(source_ids, dtype=np.int64)
        j = np.asarray(target_ids, dtype=np.int64)
        w = np.asarray(weights, dtype=np.float64)
        if not (i.shape == j.shape == w.shape):
            raise MutoError("weight matrix arrays must have equal length")
        if w.size and not np.all(np.isfinite(w)):
            raise MutoError("weight matrix entries must be finite")
        order = np.lexsort((j, i))
        self.source_ids = i[order]
        self.target_ids = j[order]
        self.weights = w[order]
        self._lookup: dict[tuple[int, int], float] | None = None

    @classmethod
    def from_entries(cls, entries: dict[tuple[int, int], float]) -> "WeightMatrix":
        items = sorted(entries.items())
        return cls(
            [e[0][0] for e in items], [e[0][1] for e in items], [e[1] for e in items]
        )

    def __len__(self) -> int:
        return len(self.weights)

    def entries(self):
        return zip(self.source_ids.tolist(), self.target_ids.tolist(), self.weights.tolist())

    def weight(self, i: int, j: int) -> float:
        if self._lookup is None:
            self._lookup = {
                (int(a), int(b)): float(w)
                for a, b, w in zip(self.source_ids, self.target_ids, self.weights)
            }
        return self._lookup[(i, j)]

    def total(self, matching: Matching) -> float:
        return float(sum(self.weight(i, j) for i, j in matching.pairs))


def candidate_edges(
    prior: "PriorMatrix",
    n_source_terms: int,
    n_target_terms: int,
    per_source_cap: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Edges with positive prior weight, optionally capped per source term.

    With default_weight 0 the candidates are exactly the stored support; a
    positive default admits every pair, which for dense priors can be bounded
    by keeping only the top per_source_cap edges per source term by prior
    weight (ties broken toward smaller target ids).
    """
    if prior.default_weight == 0.0:
        i_arr, j_arr, w_arr = prior.support_arrays()
        i_arr, j_arr, w_arr = i_arr.copy(), j_arr.copy(), w_arr.copy()
    else:
        i_arr = np.repeat(np.arange(n_source_terms, dtype=np.int64), n_target_terms)
        j_arr = np.tile(np.arange(n_target_terms, dtype=np.int64), n_source_terms)
        if len(prior.entries) == 0:
            w_arr = np.full(i_arr.size, prior.default_weight)
        else:
            w_arr = prior.weights_for(i_arr, j_arr)
    if per_source_cap is not None and per_source_cap >= 1:
        keep = []
        # within each source block, order by weight desc then target id asc
        order = np.lexsort((j_arr, -w_arr, i_arr))
        i_sorted = i_arr[order]
        start = 0
        while start < i_sorted.size:
            end = start
            while end < i_sorted.size and i_sorted[end] == i_sorted[start]:
                end += 1
            keep.append(order[start : start + min(per_source_cap, end - start)])
            start = end
        if keep:
            sel = np.concatenate(keep)
            i_arr, j_arr = i_arr[sel], j_arr[sel]
        else:
            i_arr = j_arr = np.empty(0, dtype=np.int64)
    order = np.lexsort((j_arr, i_arr))
    return i_arr[order], j_arr[order]


def _smoothed_estimates(snapshot: "SamplerSnapshot"):
    lam = snapshot.lam
    gamma = snapshot.gamma
    m_eff = max(snapshot.m_size, 1)  # empty-matching guard for the lam/|m| mass
    return lam, gamma, m_eff


def edge_weight(i: int, j: int, snapshot: "SamplerSnapshot", prior: "PriorMatrix") -> float:
    """Score one candidate pair from a sampler snapshot (see module docstring).

    The background estimate for a currently matched term adds that term's
    tokens to the background denominator, since the score evaluates the
    alternative where the term is unmatched. Requires pi(i,j) > 0.
    """
    pi = prior.weight(i, j)
    if pi <= 0:
        raise MutoError(f"edge ({i},{j}) has prior weight 0 and is not a candidate")
    lam, gamma, m_eff = _smoothed_estimates(snapshot)

    c = snapshot.term_topic_s[i] + snapshot.term_topic_t[j]
    beta = (c + lam / m_eff) / (snapshot.matched_topic_totals + lam)
    topic_term = float(np.dot(c, np.log(beta)))

    f_i = snapshot.term_freq_s[i]
    f_j = snapshot.term_freq_t[j]
    rho_i = (f_i + gamma / snapshot.n_source_terms) / (
        snapshot.bg_tokens_s + (f_i if snapshot.matched_s[i] else 0) + gamma
    )
    rho_j = (f_j + gamma / snapshot.n_target_terms) / (
        snapshot.bg_tokens_t + (f_j if snapshot.matched_t[j] else 0) + gamma
    )
    return topic_term - f_i * math.log(rho_i) - f_j * math.log(rho_j) + math.log(pi)


def compute_weights(
    snapshot: "SamplerSnapshot",
    prior: "PriorMatrix",
    candidates: tuple[np.ndarray, np.ndarray],
    chunk: int = 262144,
) -> WeightMatrix:
    """Vectorized edge_weight over the candidate set (deterministic given the snapshot)."""
    i_all = np.asarray(candidates[0], dtype=np.int64)
    j_all = np.asarray(candidates[1], dtype=np.int64)
    if i_all.size == 0:
        return WeightMatrix([], [], [])
    lam, gamma, m_eff = _smoothed_estimates(snapshot)
    denom = snapshot.matched_topic_totals + lam

    out = np.empty(i_all.size, dtype=np.float64)
    for lo in range(0, i_all.size, chunk):
        hi = min(lo + chunk, i_all.size)
        i = i_all[lo:hi]
        j = j_all[lo:hi]
        pi = prior.weights_for(i, j)
        if np.any(pi <= 0):
            raise MutoError("candidate set contains an edge with prior weight 0")
        c = snapshot.term_topic_s[i] + snapshot.term_topic_t[j]
        topic_term = np.sum(c * np.log((c + lam / m_eff) / denom), axis=1)
        f_i = snapshot.term_freq_s[i]
        f_j = snapshot.term_freq_t[j]
        rho_i = (f_i + gamma / snapshot.n_source_terms) / (
            snapshot.bg_tokens_s + f_i * snapshot.matched_s[i] + gamma
        )
        rho_j = (f_j + gamma / snapshot.n_target_terms) / (
            snapshot.bg_tokens_t + f_j * snapshot.matched_t[j] + gamma
        )
        out[lo:hi] = topic_term - f_i * np.log(rho_i) - f_j * np.log(rho_j) + np.log(pi)
    return WeightMatrix(i_all, j_all, out)


def prior_only_weights(
    prior: "PriorMatrix", candidates: tuple[np.ndarray, np.ndarray]
) -> WeightMatrix:
    """Weights for the prior-only ablation: log prior, shifted positive.

    Shifting every candidate by 1 - min(log pi) makes all weights positive, so
    the solver fills the allowed size with the highest-prior matching instead of
    rejecting edges whose prior happens to be below 1. Ranking is unchanged.
    """
    i_arr = np.asarray(candidates[0], dtype=np.int64)
    j_arr = np.asarray(candidates[1], dtype=np.int64)
    if i_arr.size == 0:
        return WeightMatrix([], [], [])
    pi = prior.weights_for(i_arr, j_arr)
    if np.any(pi <= 0):
        raise MutoError("candidate set contains an edge with prior weight 0")
    logpi = np.log(pi)
    return WeightMatrix(i_arr, j_arr, logpi + (1.0 - logpi.min()))


def max_weight_matching(weights: WeightMatrix, max_size: int) -> Matching:
    """Maximum-weight bipartite matching over positive-weight candidate edges.

    Solves the assignment relaxation exactly (zero-padded, so leaving a vertex
    unmatched costs nothing), drops non-positive edges, and if more than
    max_size edges remain keeps the top max_size by weight. Deterministic:
    candidates are canonically ordered and truncation breaks ties on (i, j).
    """
    if max_size < 1:
        raise MutoError("max_size must be >= 1")
    pos = weights.weights > 0
    if not np.any(pos):
        return Matching()
    i_arr = weights.source_ids[pos]
    j_arr = weights.target_ids[pos]
    w_arr = weights.weights[pos]

    src_vertices, i_idx = np.unique(i_arr, return_inverse=True)
    tgt_vertices, j_idx = np.unique(j_arr, return_inverse=True)
    dense = np.zeros((src_vertices.size, tgt_vertices.size))
    # later duplicates would overwrite, but (i, j) pairs are unique by construction
    dense[i_idx, j_idx] = w_arr
    rows, cols = linear_sum_assignment(dense, maximize=True)
    chosen = dense[rows, cols] > 0
    picked = [
        (int(src_vertices[r]), int(tgt_vertices[c]), float(dense[r, c]))
        for r, c in zip(rows[chosen], cols[chosen])
    ]
    if len(picked) > max_size:
        picked.sort(key=lambda e: (-e[2], e[0], e[1]))
        picked = picked[:max_size]
    return Matching((i, j) for i, j, _ in picked)


def brute_force_matching(weights: WeightMatrix, max_size: int) -> Matching:
    """Exhaustive matching oracle for small instances (<= 8 vertices per side).

    Enumerates every matching of size <= max_size over the candidate edges,
    keeping only positive-weight edges, and returns the one with the largest
    total; exact ties resolve to the lexicographically smallest pair set.
    """
    src_vertices = sorted(set(weights.source_ids.tolist()))
    tgt_vertices = sorted(set(weights.target_ids.tolist()))
    if len(src_vertices) > 8 or len(tgt_vertices) > 8:
        raise MutoError("oracle too large")
    edges_by_src: dict[int, list[tuple[int, float]]] = {s: [] for s in src_vertices}
    for i, j, w in weights.entries():
        if w > 0:
            edges_by_src[i].append((j, w))
    for lst in edges_by_src.values():
        lst.sort()

    best = {"total": 0.0, "pairs": ()}

    def visit(pos: int, used: set[int], total: float, pairs: list[tuple[int, int]]):
        if pos == len(src_vertices):
            key = tuple(sorted(pairs))
            if total > best["total"] or (total == best["total"] and key < best["pairs"]):
                best["total"] = total
                best["pairs"] = key
            return
        visit(pos + 1, used, total, pairs)
        if len(pairs) < max_size:
            s = src_vertices[pos]
            for j, w in edges_by_src[s]:
                if j not in used:
                    used.add(j)
                    pairs.append((s, j))
                    visit(pos + 1, used, total + w, pairs)
                    pairs.pop()
                    used.remove(j)

    visit(0, set(), 0.0, [])
    return Matching(best["pairs"])


def save_matching(
    matching: Matching,
    weights: WeightMatrix | None,
    path: str | Path,
    vocab_s: "Vocabulary",
    vocab_t: "Vocabulary",
) -> None:
    """Write 'source_term<TAB>target_term<TAB>mu_weight' rows."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, j in matching.pairs:
            mu = weights.weight(i, j) if weights is not None else float("nan")
            fh.write(f"{vocab_s.terms[i]}\t{vocab_t.terms[j]}\t{mu!r}\n")
