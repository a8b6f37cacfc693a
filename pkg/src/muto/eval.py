"""Model scoring: translation accuracy, cross-language document retrieval, topic export."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MutoError
from .priors import Lexicon
from .sampler import TrainedModel


def hellinger(p, q) -> float:
    """Hellinger distance between two probability vectors, in [0, 1]."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise MutoError(f"length mismatch: {p.shape} vs {q.shape}")
    for v in (p, q):
        if abs(v.sum() - 1.0) > 1e-6 or (v < 0).any():
            raise MutoError("inputs must be probability vectors summing to 1")
    d = np.sqrt(p) - np.sqrt(q)
    return float(np.sqrt(0.5 * np.dot(d, d)))


@dataclass
class TranslationAccuracy:
    accuracy_all: float
    accuracy_covered: float
    n_pairs: int
    n_covered: int
    n_correct: int
    empty_matching: bool = False


def translation_accuracy(pair_terms: list[tuple[str, str]], lexicon: Lexicon) -> TranslationAccuracy:
    """Fraction of matched pairs consistent with the lexicon.

    accuracy_all divides by all pairs; accuracy_covered only by pairs whose
    source term has any lexicon entry (the headline number, since it discounts
    the lexicon's coverage gaps). An empty matching reports 0/0 with a flag.
    """
    if not pair_terms:
        return TranslationAccuracy(0.0, 0.0, 0, 0, 0, empty_matching=True)
    n_correct = sum(1 for s, t in pair_terms if t in lexicon.get(s))
    n_covered = sum(1 for s, _ in pair_terms if s in lexicon)
    return TranslationAccuracy(
        accuracy_all=n_correct / len(pair_terms),
        accuracy_covered=n_correct / n_covered if n_covered else 0.0,
        n_pairs=len(pair_terms),
        n_covered=n_covered,
        n_correct=n_correct,
    )


def _retrieval_proportions(theta_by_id, lang_by_id, gold_pairs):
    """One ranking per direction per gold pair; ties count half.

    For query d with designated match d*, the score is the share of the other
    opposite-language documents that are further from d than d* is. Queries
    whose opposite side holds only the designated match are skipped (nothing
    to rank against).
    """
    ids_by_lang = {"s": [], "t": []}
    for doc_id, lang in lang_by_id.items():
        ids_by_lang[lang].append(doc_id)
    sqrt_theta = {i: np.sqrt(theta_by_id[i]) for i in theta_by_id}

    proportions: dict[str, float] = {}
    for sid, tid in gold_pairs:
        for query, match in ((sid, tid), (tid, sid)):
            others = [d for d in ids_by_lang[lang_by_id[match]] if d != match]
            if not others:
                continue
            q = sqrt_theta[query]
            # squared Hellinger distances; the monotone map keeps the ranking
            d_match = float(0.5 * np.sum((q - sqrt_theta[match]) ** 2))
            worse = ties = 0
            for other in others:
                d_other = float(0.5 * np.sum((q - sqrt_theta[other]) ** 2))
                if d_other > d_match:
                    worse += 1
                elif d_other == d_match:
                    ties += 1
            proportions[query] = (worse + 0.5 * ties) / len(others)
    return proportions


def document_match_score(model: TrainedModel, corpus) -> tuple[float, dict[str, float]]:
    """Mean and per-document retrieval proportions against corpus.gold_pairs."""
    if not corpus.gold_pairs:
        raise MutoError("document_match_score requires gold document pairs")
    return document_match_from_gold(model, corpus.gold_pairs)


def document_match_from_gold(
    model: TrainedModel, gold_pairs: list[tuple[str, str]]
) -> tuple[float, dict[str, float]]:
    theta_by_id = model.theta_by_id()
    lang_by_id = model.lang_by_id()
    for sid, tid in gold_pairs:
        for doc_id in (sid, tid):
            if doc_id not in theta_by_id:
                raise MutoError(f"gold pair references unknown document {doc_id!r}")
    proportions = _retrieval_proportions(theta_by_id, lang_by_id, gold_pairs)
    if not proportions:
        raise MutoError("no rankable gold pairs (each opposite side needs >= 2 documents)")
    mean = float(np.mean(list(proportions.values())))
    return mean, proportions


def language_purity(model: TrainedModel, corpus=None) -> np.ndarray:
    """Per-topic majority-language token share for an LDA baseline model.

    Topics with no assigned tokens come back as NaN; aggregate with nanmean.
    """
    if model.topic_language_counts is None:
        raise MutoError("model carries no per-language assignment counts (train with run_lda)")
    counts = model.topic_language_counts.astype(np.float64)
    totals = counts.sum(axis=1)
    purity = np.full(counts.shape[0], np.nan)
    nonzero = totals > 0
    purity[nonzero] = counts[nonzero].max(axis=1) / totals[nonzero]
    return purity


@dataclass
class TopicTable:
    """Topic summary plus per-language background term lists."""

    rows: list[list[tuple[str, float]]]  # one list of (label, probability) per topic
    background: dict[str, list[tuple[str, float]]]

    def to_tsv(self) -> str:
        lines = ["topic\trank\tpair\tprobability"]
        for k, row in enumerate(self.rows):
            for rank, (label, prob) in enumerate(row):
                lines.append(f"{k}\t{rank}\t{label}\t{prob!r}")
        for tag, terms in sorted(self.background.items()):
            for rank, (term, prob) in enumerate(terms):
                lines.append(f"background_{tag}\t{rank}\t{term}\t{prob!r}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        blocks = []
        for k, row in enumerate(self.rows):
            lines = [f"Topic {k}"] + [f"  {label}  {prob:.4f}" for label, prob in row]
            blocks.append("\n".join(lines))
        for tag, terms in sorted(self.background.items()):
            lines = [f"Background ({tag})"] + [f"  {term}  {prob:.4f}" for term, prob in terms]
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"


def export_topics(model: TrainedModel, top_n: int = 10) -> TopicTable:
    """Top pairs per topic by probability, labelled "source:target".

    LDA baseline topics are over single merged terms and are labelled by the
    term alone. Background rows list each language's most probable unmatched
    terms.
    """
    if top_n < 1:
        raise MutoError("top_n must be >= 1")
    single_terms = model.kind != "muto"
    rows = []
    for k in range(model.beta.shape[0]):
        weights = model.beta[k]
        order = sorted(range(len(weights)), key=lambda t: (-weights[t], model.pair_terms[t]))
        row = []
        for t in order[:top_n]:
            s, tt = model.pair_terms[t]
            label = s if single_terms else f"{s}:{tt}"
            row.append((label, float(weights[t])))
        rows.append(row)

    background = {}
    for tag, rho, terms in (("s", model.rho_s, model.vocab_s_terms), ("t", model.rho_t, model.vocab_t_terms)):
        if rho is None or terms is None:
            continue
        order = sorted(range(len(terms)), key=lambda i: (-rho[i], terms[i]))
        background[tag] = [(terms[i], float(rho[i])) for i in order[:top_n] if rho[i] > 0]
    return TopicTable(rows, background)


@dataclass
class EvalReport:
    translation_accuracy_all: float | None = None
    translation_accuracy_covered: float | None = None
    translation_detail: dict | None = None
    doc_match_mean: float | None = None
    doc_match_per_doc: dict[str, float] | None = None
    config: dict | None = None

    def validate(self) -> None:
        for v in (
            self.translation_accuracy_all,
            self.translation_accuracy_covered,
            self.doc_match_mean,
        ):
            if v is not None and not (0.0 <= v <= 1.0):
                raise MutoError("report fractions must lie in [0, 1]")

    def to_json_dict(self) -> dict:
        return {
            "translation_accuracy_all": self.translation_accuracy_all,
            "translation_accuracy_covered": self.translation_accuracy_covered,
            "translation_detail": self.translation_detail,
            "doc_match_mean": self.doc_match_mean,
            "doc_match_per_doc": self.doc_match_per_doc,
            "config": self.config,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )


def evaluate(
    model: TrainedModel,
    lexicon: Lexicon | None = None,
    gold_pairs: list[tuple[str, str]] | None = None,
    config: dict | None = None,
) -> EvalReport:
    """Run whichever evaluations the provided resources allow."""
    if lexicon is None and gold_pairs is None:
        raise MutoError("evaluate needs a lexicon and/or gold document pairs")
    report = EvalReport(config=config)
    if lexicon is not None:
        acc = translation_accuracy(model.matched_term_pairs(), lexicon)
        report.translation_accuracy_all = acc.accuracy_all
        report.translation_accuracy_covered = acc.accuracy_covered
        report.translation_detail = {
            "n_pairs": acc.n_pairs,
            "n_covered": acc.n_covered,
            "n_correct": acc.n_correct,
            "empty_matching": acc.empty_matching,
        }
    if gold_pairs is not None:
        mean, per_doc = document_match_from_gold(model, gold_pairs)
        report.doc_match_mean = mean
        report.doc_match_per_doc = per_doc
    report.validate()
    return report
