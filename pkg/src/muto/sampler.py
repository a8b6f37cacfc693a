"""Collapsed Gibbs sampling under a fixed matching, and the stochastic EM driver.

The sampler state is fully determined by the per-token topic assignments z:
every count matrix (document-topic, term-topic, pair-topic, background) can be
rebuilt from z and the current matching, which is what makes swapping the
matching between M-steps safe. Matched tokens are resampled from the product
of the document factor and the pair-topic factor; unmatched tokens from the
document factor alone, since their emission probability does not depend on the
topic.

Documents are processed in a canonical order (sorted by document id), so
training is invariant to the storage order of the corpus.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._kernels import sweep_python, sweep_tokens
from .corpus import Corpus, Language
from .errors import ConfigError, MutoError
from .matching import (
    Matching,
    SizeSchedule,
    candidate_edges,
    compute_weights,
    initial_matching,
    max_weight_matching,
    prior_only_weights,
    save_matching,
    schedule_size,
)

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)


def _mix64(x):
    """splitmix64 finalizer, elementwise on uint64 arrays (wraparound intended)."""
    with np.errstate(over="ignore"):
        x = (x + _GOLDEN).astype(np.uint64, copy=False)
        x = (x ^ (x >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> _U64(27))) * _U64(0x94D049BB133111EB)
        return x ^ (x >> _U64(31))


def _doc_hash(doc_id: str) -> int:
    return int.from_bytes(hashlib.blake2b(doc_id.encode("utf-8"), digest_size=8).digest(), "big")


@dataclass(frozen=True)
class Hyperparams:
    """Total Dirichlet concentrations: alpha over topics, lam over matched
    pairs, gamma over each language's unmatched terms."""

    k: int
    alpha: float = 50.0
    lam: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise MutoError("topic count k must be >= 1")
        if min(self.alpha, self.lam, self.gamma) <= 0:
            raise MutoError("hyperparameters must be positive")

    def echo(self) -> dict:
        return {"k": self.k, "alpha": self.alpha, "lambda": self.lam, "gamma": self.gamma}


@dataclass
class EMConfig:
    """Knobs of the stochastic EM loop; the seed is mandatory."""

    seed: int
    m_steps: int = 3
    gibbs_iters: int = 250
    schedule_fractions: tuple[float, ...] | None = None
    cap: int | None = None
    prior_only: bool = False
    init_min_length: int = 6
    per_source_cap: int | None = None
    audit: bool = False
    average_final_estimates: bool = False
    rng_per_token: bool = False

    def validate(self) -> None:
        if self.m_steps < 1:
            raise ConfigError("m_steps must be >= 1")
        if self.gibbs_iters < 0:
            raise ConfigError("gibbs_iters must be >= 0")
        if self.cap is not None and self.cap < 1:
            raise ConfigError("cap must be >= 1")
        if self.per_source_cap is not None and self.per_source_cap < 1:
            raise ConfigError("per_source_cap must be >= 1")
        if self.init_min_length < 1:
            raise ConfigError("init_min_length must be >= 1")
        if self.schedule_fractions is not None and len(self.schedule_fractions) != self.m_steps:
            raise ConfigError("schedule_fractions must supply one fraction per m_step")

    def echo(self) -> dict:
        return {
            "seed": self.seed,
            "m_steps": self.m_steps,
            "gibbs_iters": self.gibbs_iters,
            "schedule_fractions": list(self.schedule_fractions) if self.schedule_fractions else None,
            "cap": self.cap,
            "prior_only": self.prior_only,
            "init_min_length": self.init_min_length,
            "per_source_cap": self.per_source_cap,
            "average_final_estimates": self.average_final_estimates,
            "rng_per_token": self.rng_per_token,
        }


@dataclass(frozen=True)
class SamplerSnapshot:
    """Immutable view of the sufficient statistics needed to score candidate edges."""

    k: int
    lam: float
    gamma: float
    m_size: int
    matching: Matching
    term_topic_s: np.ndarray
    term_topic_t: np.ndarray
    term_freq_s: np.ndarray
    term_freq_t: np.ndarray
    matched_s: np.ndarray
    matched_t: np.ndarray
    bg_tokens_s: int
    bg_tokens_t: int
    matched_topic_totals: np.ndarray
    n_source_terms: int
    n_target_terms: int


class SamplerState:
    """Mutable Gibbs state over one corpus; confined to a single thread."""

    def __init__(
        self,
        corpus: Corpus,
        matching: Matching,
        hyper: Hyperparams,
        seed: int,
        rng_per_token: bool = False,
    ):
        corpus.validate()
        self.corpus = corpus
        self.hyper = hyper
        self.seed = seed
        self.rng_per_token = rng_per_token
        self.sweep_count = 0

        docs = sorted(corpus.documents, key=lambda d: d.id)
        self.doc_ids = [d.id for d in docs]
        self.doc_langs = [d.language for d in docs]
        self.n_source_terms = len(corpus.vocab_s)
        self.n_target_terms = len(corpus.vocab_t)
        n_global = self.n_source_terms + self.n_target_terms

        token_doc, token_term = [], []
        offsets = [0]
        for di, d in enumerate(docs):
            base = 0 if d.language is Language.SOURCE else self.n_source_terms
            token_doc.extend([di] * len(d.tokens))
            token_term.extend(base + t for t in d.tokens)
            offsets.append(offsets[-1] + len(d.tokens))
        self.token_doc = np.array(token_doc, dtype=np.int64)
        self.token_term = np.array(token_term, dtype=np.int64)
        self.doc_offsets = np.array(offsets, dtype=np.int64)
        self.doc_len = np.diff(self.doc_offsets)
        self.n_tokens = int(self.token_doc.size)
        self.term_freq = np.bincount(self.token_term, minlength=n_global).astype(np.int64)

        self.rng = np.random.default_rng(seed)
        if rng_per_token:
            doc_hashes = np.array([_doc_hash(i) for i in self.doc_ids], dtype=np.uint64)
            positions = np.concatenate(
                [np.arange(n, dtype=np.uint64) for n in self.doc_len]
            ) if self.n_tokens else np.empty(0, dtype=np.uint64)
            self._token_hash = _mix64(doc_hashes[self.token_doc] ^ _mix64(positions))
            self.z = np.minimum(
                (self._token_uniforms(0) * hyper.k).astype(np.int64), hyper.k - 1
            )
        else:
            self._token_hash = None
            self.z = self.rng.integers(0, hyper.k, self.n_tokens, dtype=np.int64)

        self._set_matching(matching)
        self._rebuild_base_counts()
        self._refresh_pair_counts()

    # -- randomness ---------------------------------------------------------

    def _token_uniforms(self, counter: int) -> np.ndarray:
        with np.errstate(over="ignore"):
            salt = _mix64(
                _U64(counter) * _U64(0xD6E8FEB86659FD93)
                + _U64(self.seed & 0xFFFFFFFFFFFFFFFF)
            )
        mixed = _mix64(self._token_hash ^ salt)
        return (mixed >> _U64(11)) * 2.0**-53

    def _sweep_uniforms(self) -> np.ndarray:
        if self.rng_per_token:
            return self._token_uniforms(self.sweep_count + 1)
        return self.rng.random(self.n_tokens)

    # -- counts -------------------------------------------------------------

    def _set_matching(self, matching: Matching) -> None:
        for i, j in matching.pairs:
            if not (0 <= i < self.n_source_terms and 0 <= j < self.n_target_terms):
                raise MutoError("matching references ids outside the vocabularies")
        self.matching = matching
        n_global = self.n_source_terms + self.n_target_terms
        self.pair_of_term = np.full(n_global, -1, dtype=np.int64)
        self.pair_src_global = np.array([i for i, _ in matching.pairs], dtype=np.int64)
        self.pair_tgt_global = np.array(
            [self.n_source_terms + j for _, j in matching.pairs], dtype=np.int64
        )
        for p, (g_i, g_j) in enumerate(zip(self.pair_src_global, self.pair_tgt_global)):
            self.pair_of_term[g_i] = p
            self.pair_of_term[g_j] = p
        self.lam_pair = self.hyper.lam / max(len(matching), 1)

    def _rebuild_base_counts(self) -> None:
        k = self.hyper.k
        n_docs = len(self.doc_ids)
        n_global = self.n_source_terms + self.n_target_terms
        self.doc_topic = np.bincount(
            self.token_doc * k + self.z, minlength=n_docs * k
        ).reshape(n_docs, k).astype(np.int64)
        self.term_topic = np.bincount(
            self.token_term * k + self.z, minlength=n_global * k
        ).reshape(n_global, k).astype(np.int64)

    def _refresh_pair_counts(self) -> None:
        k = self.hyper.k
        if len(self.matching):
            self.pair_topic = (
                self.term_topic[self.pair_src_global] + self.term_topic[self.pair_tgt_global]
            )
        else:
            self.pair_topic = np.zeros((0, k), dtype=np.int64)
        self.matched_total = self.pair_topic.sum(axis=0).astype(np.int64)

    def audit(self) -> None:
        """Verify every count matrix against a from-scratch rebuild from z."""
        k = self.hyper.k
        n_docs = len(self.doc_ids)
        n_global = self.n_source_terms + self.n_target_terms
        doc_topic = np.bincount(self.token_doc * k + self.z, minlength=n_docs * k).reshape(n_docs, k)
        if not np.array_equal(doc_topic, self.doc_topic):
            raise MutoError("audit failed: document-topic counts diverged from assignments")
        term_topic = np.bincount(self.token_term * k + self.z, minlength=n_global * k).reshape(n_global, k)
        if not np.array_equal(term_topic, self.term_topic):
            raise MutoError("audit failed: term-topic counts diverged from assignments")
        if len(self.matching):
            pair_topic = term_topic[self.pair_src_global] + term_topic[self.pair_tgt_global]
        else:
            pair_topic = np.zeros((0, k), dtype=np.int64)
        if not np.array_equal(pair_topic, self.pair_topic):
            raise MutoError("audit failed: pair-topic counts diverged from assignments")
        if not np.array_equal(pair_topic.sum(axis=0), self.matched_total):
            raise MutoError("audit failed: matched-token totals diverged from assignments")

    # -- token-level access (used by tests and the conditional contract) -----

    def flat_index(self, d: int, n: int) -> int:
        if not (0 <= d < len(self.doc_ids)):
            raise MutoError(f"document index {d} out of range")
        if not (0 <= n < self.doc_len[d]):
            raise MutoError(f"token index {n} out of range for document {self.doc_ids[d]!r}")
        return int(self.doc_offsets[d] + n)

    def decrement_token(self, d: int, n: int) -> int:
        """Remove token (d, n)'s assignment from all counts; returns the old topic."""
        idx = self.flat_index(d, n)
        w = self.token_term[idx]
        old = int(self.z[idx])
        self.doc_topic[d, old] -= 1
        self.term_topic[w, old] -= 1
        p = self.pair_of_term[w]
        if p >= 0:
            self.pair_topic[p, old] -= 1
            self.matched_total[old] -= 1
        return old

    def increment_token(self, d: int, n: int, topic: int) -> None:
        idx = self.flat_index(d, n)
        w = self.token_term[idx]
        self.z[idx] = topic
        self.doc_topic[d, topic] += 1
        self.term_topic[w, topic] += 1
        p = self.pair_of_term[w]
        if p >= 0:
            self.pair_topic[p, topic] += 1
            self.matched_total[topic] += 1

    def unnormalized_conditional(self, d: int, n: int) -> np.ndarray:
        """Token (d, n)'s resampling weights; its own counts must be decremented."""
        idx = self.flat_index(d, n)
        alpha_k = self.hyper.alpha / self.hyper.k
        doc_part = self.doc_topic[d] + alpha_k
        p = self.pair_of_term[self.token_term[idx]]
        if p < 0:
            return doc_part.astype(np.float64)
        return doc_part * (self.pair_topic[p] + self.lam_pair) / (
            self.matched_total + self.hyper.lam
        )

    def token_matched_flags(self) -> np.ndarray:
        """Per-token c_n: whether the token's term is in the current matching."""
        return self.pair_of_term[self.token_term] >= 0

    # -- sweeps -------------------------------------------------------------

    def sweep(self, use_kernel: bool = True) -> None:
        uniforms = self._sweep_uniforms()
        fn = sweep_tokens if use_kernel else sweep_python
        fn(
            self.token_doc,
            self.token_term,
            self.z,
            self.doc_topic,
            self.term_topic,
            self.pair_topic,
            self.matched_total,
            self.pair_of_term,
            uniforms,
            self.hyper.alpha / self.hyper.k,
            self.hyper.lam,
            self.lam_pair,
            self.hyper.k,
        )
        self.sweep_count += 1

    def rematch(self, new_matching: Matching) -> None:
        """Install a new matching, keeping z and rebuilding the derived counts."""
        self._set_matching(new_matching)
        self._refresh_pair_counts()

    def set_assignments(self, z: np.ndarray) -> None:
        z = np.asarray(z, dtype=np.int64)
        if z.shape != self.z.shape:
            raise MutoError("assignment vector has the wrong length")
        if z.size and (z.min() < 0 or z.max() >= self.hyper.k):
            raise MutoError("assignment vector contains out-of-range topics")
        self.z = z.copy()
        self._rebuild_base_counts()
        self._refresh_pair_counts()

    # -- derived quantities ---------------------------------------------------

    def _background_totals(self) -> tuple[int, int]:
        unmatched = self.pair_of_term < 0
        s = int(self.term_freq[: self.n_source_terms][unmatched[: self.n_source_terms]].sum())
        t = int(self.term_freq[self.n_source_terms:][unmatched[self.n_source_terms:]].sum())
        return s, t

    def snapshot(self) -> SamplerSnapshot:
        bg_s, bg_t = self._background_totals()
        unmatched = self.pair_of_term < 0
        return SamplerSnapshot(
            k=self.hyper.k,
            lam=self.hyper.lam,
            gamma=self.hyper.gamma,
            m_size=len(self.matching),
            matching=self.matching,
            term_topic_s=self.term_topic[: self.n_source_terms].copy(),
            term_topic_t=self.term_topic[self.n_source_terms:].copy(),
            term_freq_s=self.term_freq[: self.n_source_terms].copy(),
            term_freq_t=self.term_freq[self.n_source_terms:].copy(),
            matched_s=~unmatched[: self.n_source_terms],
            matched_t=~unmatched[self.n_source_terms:],
            bg_tokens_s=bg_s,
            bg_tokens_t=bg_t,
            matched_topic_totals=self.matched_total.copy(),
            n_source_terms=self.n_source_terms,
            n_target_terms=self.n_target_terms,
        )


# ---------------------------------------------------------------------------
# Spec-level operations


def init_state(
    corpus: Corpus,
    matching: Matching,
    hyper: Hyperparams,
    seed: int,
    rng_per_token: bool = False,
) -> SamplerState:
    """Fresh state with uniformly random topic assignments; deterministic under seed."""
    return SamplerState(corpus, matching, hyper, seed, rng_per_token=rng_per_token)


def conditional_distribution(state: SamplerState, d: int, n: int) -> np.ndarray:
    """Resampling distribution for token n of document d (canonical doc order).

    The token's own assignment must already have been removed from the counts
    (see SamplerState.decrement_token).
    """
    probs = state.unnormalized_conditional(d, n)
    return probs / probs.sum()


def gibbs_sweep(state: SamplerState) -> SamplerState:
    """Resample every token once, in document order then token order."""
    state.sweep()
    return state


def rematch(state: SamplerState, new_matching: Matching) -> SamplerState:
    state.rematch(new_matching)
    return state


def estimate_theta(state: SamplerState) -> np.ndarray:
    """Per-document topic proportions, rows aligned with state.doc_ids."""
    alpha = state.hyper.alpha
    k = state.hyper.k
    return (state.doc_topic + alpha / k) / (state.doc_len[:, None] + alpha)


def estimate_beta(state: SamplerState) -> np.ndarray:
    """Per-topic distributions over matched pairs, columns in matching order."""
    m = len(state.matching)
    if m == 0:
        return np.zeros((state.hyper.k, 0))
    lam = state.hyper.lam
    return (state.pair_topic.T + lam / m) / (state.matched_total[:, None] + lam)


def estimate_rho(state: SamplerState) -> dict[str, np.ndarray]:
    """Per-language background distributions over unmatched terms.

    Returned as full-vocabulary arrays with zeros at matched ids, so each
    array sums to 1 whenever the language has unmatched terms.
    """
    out = {}
    unmatched = state.pair_of_term < 0
    for tag, lo, hi in (
        ("s", 0, state.n_source_terms),
        ("t", state.n_source_terms, state.n_source_terms + state.n_target_terms),
    ):
        mask = unmatched[lo:hi]
        freq = state.term_freq[lo:hi]
        rho = np.zeros(hi - lo)
        u = int(mask.sum())
        if u > 0:
            total = freq[mask].sum()
            rho[mask] = (freq[mask] + state.hyper.gamma / u) / (total + state.hyper.gamma)
        out[tag] = rho
    return out


# ---------------------------------------------------------------------------
# Trained models


@dataclass
class TrainedModel:
    """Point estimates plus the final matching and the EM trace."""

    kind: str  # "muto", "lda_union", or "lda_intersection"
    doc_ids: list[str]
    doc_langs: list[str]
    theta: np.ndarray
    pair_terms: list[tuple[str, str]]
    beta: np.ndarray
    final_matching: Matching | None
    em_trace: list[dict]
    config: dict
    rho_s: np.ndarray | None = None
    rho_t: np.ndarray | None = None
    vocab_s_terms: list[str] | None = None
    vocab_t_terms: list[str] | None = None
    topic_language_counts: np.ndarray | None = None

    def theta_by_id(self) -> dict[str, np.ndarray]:
        return {i: self.theta[n] for n, i in enumerate(self.doc_ids)}

    def lang_by_id(self) -> dict[str, str]:
        return dict(zip(self.doc_ids, self.doc_langs))

    def matched_term_pairs(self) -> list[tuple[str, str]]:
        return list(self.pair_terms) if self.kind == "muto" else []

    def validate(self) -> None:
        if not np.allclose(self.theta.sum(axis=1), 1.0, atol=1e-9):
            raise MutoError("theta rows must sum to 1")
        if self.beta.shape[1] > 0 and not np.allclose(self.beta.sum(axis=1), 1.0, atol=1e-9):
            raise MutoError("beta rows must sum to 1")
        for rho in (self.rho_s, self.rho_t):
            if rho is not None and rho.sum() > 0 and not math.isclose(rho.sum(), 1.0, abs_tol=1e-9):
                raise MutoError("rho must sum to 1")


def model_to_json_dict(model: TrainedModel) -> dict:
    background = None
    if model.rho_s is not None:
        background = {
            "s": {"terms": model.vocab_s_terms, "rho": [float(x) for x in model.rho_s]},
            "t": {"terms": model.vocab_t_terms, "rho": [float(x) for x in model.rho_t]},
        }
    return {
        "kind": model.kind,
        "config": model.config,
        "docs": [
            {"id": i, "lang": l, "theta": [float(x) for x in row]}
            for i, l, row in zip(model.doc_ids, model.doc_langs, model.theta)
        ],
        "topics": {
            "pairs": [list(p) for p in model.pair_terms],
            "beta": [[float(x) for x in row] for row in model.beta],
        },
        "matching": [list(p) for p in model.pair_terms] if model.kind == "muto" else None,
        "background": background,
        "em_trace": model.em_trace,
        "topic_language_counts": (
            [[int(c) for c in row] for row in model.topic_language_counts]
            if model.topic_language_counts is not None
            else None
        ),
    }


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(model_to_json_dict(model), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def load_model(path: str | Path) -> TrainedModel:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    docs = obj["docs"]
    pair_terms = [tuple(p) for p in obj["topics"]["pairs"]]
    beta = np.array(obj["topics"]["beta"], dtype=np.float64)
    if beta.size == 0:
        beta = beta.reshape(len(obj["topics"]["beta"]), 0)
    rho_s = rho_t = None
    vocab_s_terms = vocab_t_terms = None
    if obj.get("background"):
        bg = obj["background"]
        vocab_s_terms = bg["s"]["terms"]
        vocab_t_terms = bg["t"]["terms"]
        rho_s = np.array(bg["s"]["rho"], dtype=np.float64)
        rho_t = np.array(bg["t"]["rho"], dtype=np.float64)
    final_matching = None
    if obj["kind"] == "muto" and vocab_s_terms is not None:
        s_index = {t: i for i, t in enumerate(vocab_s_terms)}
        t_index = {t: i for i, t in enumerate(vocab_t_terms)}
        final_matching = Matching((s_index[a], t_index[b]) for a, b in pair_terms)
    tlc = obj.get("topic_language_counts")
    return TrainedModel(
        kind=obj["kind"],
        doc_ids=[d["id"] for d in docs],
        doc_langs=[d["lang"] for d in docs],
        theta=np.array([d["theta"] for d in docs], dtype=np.float64),
        pair_terms=pair_terms,
        beta=beta,
        final_matching=final_matching,
        em_trace=obj["em_trace"],
        config=obj["config"],
        rho_s=rho_s,
        rho_t=rho_t,
        vocab_s_terms=vocab_s_terms,
        vocab_t_terms=vocab_t_terms,
        topic_language_counts=np.array(tlc, dtype=np.int64) if tlc is not None else None,
    )


# ---------------------------------------------------------------------------
# Checkpoints


def save_checkpoint(state: SamplerState, path: str | Path, m_step: int) -> None:
    """Persist z, the matching, and the generator state (enough to resume)."""
    obj = {
        "m_step": m_step,
        "seed": state.seed,
        "sweep_count": state.sweep_count,
        "rng_per_token": state.rng_per_token,
        "z": state.z.tolist(),
        "matching": [list(p) for p in state.matching.pairs],
        "rng_state": state.rng.bit_generator.state,
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True) + "\n", encoding="utf-8")


def restore_state(corpus: Corpus, hyper: Hyperparams, path: str | Path) -> SamplerState:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    state = SamplerState(
        corpus,
        Matching(tuple(p) for p in obj["matching"]),
        hyper,
        obj["seed"],
        rng_per_token=obj["rng_per_token"],
    )
    state.set_assignments(np.array(obj["z"], dtype=np.int64))
    state.rng.bit_generator.state = obj["rng_state"]
    state.sweep_count = obj["sweep_count"]
    return state


# ---------------------------------------------------------------------------
# Training drivers


def _final_estimates(state: SamplerState, config: EMConfig):
    if config.average_final_estimates and config.gibbs_iters > 0:
        theta = beta = None
        rho = None
        for _ in range(config.gibbs_iters):
            state.sweep()
            if config.audit:
                state.audit()
            th, be, rh = estimate_theta(state), estimate_beta(state), estimate_rho(state)
            if theta is None:
                theta, beta, rho = th, be, rh
            else:
                theta += th
                beta += be
                for tag in rho:
                    rho[tag] += rh[tag]
        theta /= config.gibbs_iters
        beta /= config.gibbs_iters
        for tag in rho:
            rho[tag] /= config.gibbs_iters
        return theta, beta, rho
    for _ in range(config.gibbs_iters):
        state.sweep()
        if config.audit:
            state.audit()
    return estimate_theta(state), estimate_beta(state), estimate_rho(state)


def run_muto(
    corpus: Corpus,
    prior,
    hyper: Hyperparams,
    config: EMConfig,
    artifacts_dir: str | Path | None = None,
) -> TrainedModel:
    """Stochastic EM: alternate Gibbs sampling with re-solving the matching.

    Each M-step snapshots the chain, scores the prior's candidate edges, and
    installs the maximum-weight matching at the scheduled size (the allowed
    size grows across steps to limit overfitting); a final E-step follows the
    last M-step so the reported estimates reflect the final matching. With
    prior_only=True the edge scores are the log prior weights alone.
    """
    config.validate()
    corpus.validate()
    vocab_s, vocab_t = corpus.vocab_s, corpus.vocab_t

    matching = initial_matching(vocab_s, vocab_t, config.init_min_length)
    cands = candidate_edges(prior, len(vocab_s), len(vocab_t), config.per_source_cap)
    cap = config.cap if config.cap is not None else max(int(cands[0].size), 1)
    fractions = (
        tuple(config.schedule_fractions)
        if config.schedule_fractions is not None
        else tuple((s + 1) / config.m_steps for s in range(config.m_steps))
    )
    schedule = SizeSchedule(fractions, cap)

    artifacts = Path(artifacts_dir) if artifacts_dir is not None else None
    if artifacts is not None:
        artifacts.mkdir(parents=True, exist_ok=True)

    state = init_state(corpus, matching, hyper, config.seed, config.rng_per_token)
    if config.audit:
        state.audit()

    trace = []
    for step in range(config.m_steps):
        for _ in range(config.gibbs_iters):
            state.sweep()
            if config.audit:
                state.audit()
        if config.prior_only:
            weights = prior_only_weights(prior, cands)
        else:
            weights = compute_weights(state.snapshot(), prior, cands)
        target = schedule_size(schedule, step)
        matching = max_weight_matching(weights, target) if len(weights) else Matching()
        trace.append(
            {
                "m_step": step,
                "target_size": target,
                "matching_size": len(matching),
                "objective": weights.total(matching) if len(weights) else 0.0,
            }
        )
        rematch(state, matching)
        if config.audit:
            state.audit()
        if artifacts is not None:
            save_matching(matching, weights, artifacts / f"matching_step{step}.tsv", vocab_s, vocab_t)
            save_checkpoint(state, artifacts / f"state_step{step}.json", step)

    theta, beta, rho = _final_estimates(state, config)
    pair_terms = [(vocab_s.terms[i], vocab_t.terms[j]) for i, j in matching.pairs]
    return TrainedModel(
        kind="muto",
        doc_ids=list(state.doc_ids),
        doc_langs=[l.value for l in state.doc_langs],
        theta=theta,
        pair_terms=pair_terms,
        beta=beta,
        final_matching=matching,
        em_trace=trace,
        config={"em": config.echo(), "hyper": hyper.echo()},
        rho_s=rho["s"],
        rho_t=rho["t"],
        vocab_s_terms=list(vocab_s.terms),
        vocab_t_terms=list(vocab_t.terms),
    )


def _lda_vocabulary(corpus: Corpus, vocab_mode: str):
    """Union or intersection term list plus per-language id -> merged id maps."""
    vs, vt = corpus.vocab_s, corpus.vocab_t
    if vocab_mode == "union":
        terms = list(vs.terms)
        index = dict(vs.index)
        for t in vt.terms:
            if t not in index:
                index[t] = len(terms)
                terms.append(t)
        map_s = [index[t] for t in vs.terms]
        map_t = [index[t] for t in vt.terms]
    elif vocab_mode == "intersection":
        terms = [t for t in vs.terms if t in vt.index]
        if not terms:
            raise MutoError("empty intersection vocabulary")
        index = {t: i for i, t in enumerate(terms)}
        map_s = [index.get(t) for t in vs.terms]
        map_t = [index.get(t) for t in vt.terms]
    else:
        raise ConfigError(f"unknown vocab_mode {vocab_mode!r} (expected 'union' or 'intersection')")
    return terms, map_s, map_t


def run_lda(corpus: Corpus, vocab_mode: str, hyper: Hyperparams, config: EMConfig) -> TrainedModel:
    """Monolingual-style LDA baseline over a merged vocabulary, language ignored.

    Uses the same collapsed Gibbs kernel with every merged term acting as its
    own "pair", which reduces the matched-token factor to the standard
    term-topic factor with lam/V smoothing. Runs (m_steps + 1) * gibbs_iters
    sweeps to mirror the full model's sampling budget.
    """
    config.validate()
    corpus.validate()
    terms, map_s, map_t = _lda_vocabulary(corpus, vocab_mode)
    n_terms = len(terms)
    k = hyper.k

    docs = sorted(corpus.documents, key=lambda d: d.id)
    token_doc, token_term, token_lang = [], [], []
    for di, d in enumerate(docs):
        mapping = map_s if d.language is Language.SOURCE else map_t
        for t in d.tokens:
            merged = mapping[t]
            if merged is None:
                continue
            token_doc.append(di)
            token_term.append(merged)
            token_lang.append(0 if d.language is Language.SOURCE else 1)
    token_doc = np.array(token_doc, dtype=np.int64)
    token_term = np.array(token_term, dtype=np.int64)
    token_lang = np.array(token_lang, dtype=np.int64)
    doc_len = np.bincount(token_doc, minlength=len(docs)).astype(np.int64)

    rng = np.random.default_rng(config.seed)
    z = rng.integers(0, k, token_doc.size, dtype=np.int64)
    doc_topic = np.bincount(token_doc * k + z, minlength=len(docs) * k).reshape(len(docs), k).astype(np.int64)
    term_topic = np.bincount(token_term * k + z, minlength=n_terms * k).reshape(n_terms, k).astype(np.int64)
    topic_total = term_topic.sum(axis=0).astype(np.int64)
    # identity "pairs": the kernel's pair factor becomes the LDA term factor
    pair_of_term = np.arange(n_terms, dtype=np.int64)
    scratch_term_topic = term_topic.copy()

    n_sweeps = (config.m_steps + 1) * config.gibbs_iters
    for _ in range(n_sweeps):
        sweep_tokens(
            token_doc,
            token_term,
            z,
            doc_topic,
            scratch_term_topic,
            term_topic,
            topic_total,
            pair_of_term,
            rng.random(token_doc.size),
            hyper.alpha / k,
            hyper.lam,
            hyper.lam / max(n_terms, 1),
            k,
        )

    theta = (doc_topic + hyper.alpha / k) / (doc_len[:, None] + hyper.alpha)
    beta = (term_topic.T + hyper.lam / n_terms) / (topic_total[:, None] + hyper.lam)
    tlc = np.zeros((k, 2), dtype=np.int64)
    if z.size:
        tlc = np.bincount(z * 2 + token_lang, minlength=k * 2).reshape(k, 2).astype(np.int64)
    return TrainedModel(
        kind=f"lda_{vocab_mode}",
        doc_ids=[d.id for d in docs],
        doc_langs=[d.language.value for d in docs],
        theta=theta,
        pair_terms=[(t, t) for t in terms],
        beta=beta,
        final_matching=None,
        em_trace=[],
        config={"em": config.echo(), "hyper": hyper.echo(), "vocab_mode": vocab_mode},
        topic_language_counts=tlc,
    )
