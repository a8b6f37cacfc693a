"""Bilingual corpora: vocabularies, encoded documents, loading, and synthetic generation.

A corpus holds documents in exactly two languages (source "s" and target "t"),
each encoded against its own vocabulary. The synthetic generator draws a corpus
from the full generative story (topics over matched term pairs plus per-language
background distributions) so that recovery of a planted matching can be measured.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import FormatError, MutoError
from .matching import Matching


class Language(str, Enum):
    SOURCE = "s"
    TARGET = "t"

    @property
    def other(self) -> "Language":
        return Language.TARGET if self is Language.SOURCE else Language.SOURCE


def parse_language(tag: str, line: int | None = None) -> Language:
    try:
        return Language(tag)
    except ValueError:
        where = f"line {line}: " if line is not None else ""
        raise FormatError(f"{where}unknown language tag {tag!r} (expected 's' or 't')") from None


@dataclass
class Vocabulary:
    """Dense term inventory for one language; ids run 0..len-1 in list order."""

    language: Language
    terms: list[str]
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {t: i for i, t in enumerate(self.terms)}
        if len(self.index) != len(self.terms):
            raise MutoError("duplicate terms in vocabulary")

    def __len__(self) -> int:
        return len(self.terms)

    def encode(self, tokens: list[str]) -> list[int]:
        """Map token strings to ids, dropping out-of-vocabulary tokens."""
        idx = self.index
        return [idx[t] for t in tokens if t in idx]


def build_vocabulary(
    tokenized_docs: list[list[str]],
    language: Language,
    max_terms: int,
    stopwords: set[str] | None = None,
) -> Vocabulary:
    """Keep the max_terms most frequent non-stopword types.

    Frequencies are raw token counts over all documents; ties are broken
    lexicographically so the result is reproducible.
    """
    if max_terms < 1:
        raise MutoError("max_terms must be >= 1")
    counts = Counter()
    for toks in tokenized_docs:
        counts.update(toks)
    if stopwords:
        for w in stopwords:
            counts.pop(w, None)
    if not counts:
        raise MutoError("empty vocabulary")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    terms = [t for t, _ in ranked[:max_terms]]
    return Vocabulary(language, terms)


@dataclass
class Document:
    id: str
    language: Language
    tokens: list[int]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class Corpus:
    documents: list[Document]
    vocab_s: Vocabulary
    vocab_t: Vocabulary
    gold_pairs: list[tuple[str, str]] | None = None

    def vocabulary(self, language: Language) -> Vocabulary:
        return self.vocab_s if language is Language.SOURCE else self.vocab_t

    def document_ids(self) -> list[str]:
        return [d.id for d in self.documents]

    def validate(self) -> None:
        """Check referential integrity: token ids in range, gold ids resolvable."""
        ids = set()
        for d in self.documents:
            if d.id in ids:
                raise MutoError(f"duplicate document id {d.id!r}")
            ids.add(d.id)
            size = len(self.vocabulary(d.language))
            for t in d.tokens:
                if not (0 <= t < size):
                    raise MutoError(f"document {d.id!r}: token id {t} outside vocabulary of size {size}")
        if self.gold_pairs is not None:
            by_id = {d.id: d for d in self.documents}
            seen_s, seen_t = set(), set()
            for sid, tid in self.gold_pairs:
                for side, doc_id, lang in (
                    (seen_s, sid, Language.SOURCE),
                    (seen_t, tid, Language.TARGET),
                ):
                    if doc_id not in by_id:
                        raise MutoError(f"gold pair references unknown document {doc_id!r}")
                    if by_id[doc_id].language is not lang:
                        raise MutoError(f"gold pair document {doc_id!r} has the wrong language")
                    if doc_id in side:
                        raise MutoError(f"document {doc_id!r} appears twice in gold pairs")
                    side.add(doc_id)


def _parse_jsonl(lines):
    for lineno, raw in lines:
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as e:
            raise FormatError(f"line {lineno}: invalid JSON ({e.msg})") from None
        if not isinstance(obj, dict) or not {"id", "lang", "tokens"} <= obj.keys():
            raise FormatError(f"line {lineno}: record must carry 'id', 'lang', 'tokens'")
        tokens = obj["tokens"]
        if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
            raise FormatError(f"line {lineno}: 'tokens' must be an array of strings")
        yield lineno, str(obj["id"]), str(obj["lang"]), tokens


def _parse_tsv(lines):
    for lineno, raw in lines:
        parts = raw.split("\t")
        if len(parts) != 3:
            raise FormatError(f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
        doc_id, lang, text = parts
        yield lineno, doc_id, lang, text.split()


def load_corpus(
    path: str | Path,
    fmt: str | None = None,
    max_terms: int = 2500,
    stopwords: set[str] | None = None,
) -> Corpus:
    """Load a corpus file and build per-language vocabularies.

    fmt is "jsonl" or "tsv"; when None it is inferred from the file suffix.
    Tokens absent from the (frequency-capped) vocabulary are dropped from the
    encoded documents, so a document may come out empty.
    """
    path = Path(path)
    if fmt is None:
        fmt = {".jsonl": "jsonl", ".tsv": "tsv"}.get(path.suffix)
        if fmt is None:
            raise FormatError(f"cannot infer corpus format from suffix {path.suffix!r}")
    if fmt not in ("jsonl", "tsv"):
        raise FormatError(f"unknown corpus format {fmt!r}")

    lines = [
        (i, line)
        for i, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1)
        if line.strip()
    ]
    parser = _parse_jsonl if fmt == "jsonl" else _parse_tsv
    records = []
    for lineno, doc_id, lang_tag, tokens in parser(lines):
        records.append((lineno, doc_id, parse_language(lang_tag, lineno), tokens))

    raw_by_lang = {Language.SOURCE: [], Language.TARGET: []}
    for _, _, lang, tokens in records:
        raw_by_lang[lang].append(tokens)
    vocabs = {}
    for lang in (Language.SOURCE, Language.TARGET):
        try:
            vocabs[lang] = build_vocabulary(raw_by_lang[lang], lang, max_terms, stopwords)
        except MutoError:
            raise MutoError(f"empty vocabulary for language {lang.value!r}") from None

    documents = [
        Document(doc_id, lang, vocabs[lang].encode(tokens))
        for _, doc_id, lang, tokens in records
    ]
    corpus = Corpus(documents, vocabs[Language.SOURCE], vocabs[Language.TARGET])
    corpus.validate()
    return corpus


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back to jsonl, decoding token ids to strings."""
    with open(path, "w", encoding="utf-8") as fh:
        for d in corpus.documents:
            terms = corpus.vocabulary(d.language).terms
            rec = {"id": d.id, "lang": d.language.value, "tokens": [terms[t] for t in d.tokens]}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_gold_pairs(path: str | Path) -> list[tuple[str, str]]:
    pairs = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected 'source_id<TAB>target_id'")
        pairs.append((parts[0], parts[1]))
    return pairs


def save_gold_pairs(pairs: list[tuple[str, str]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sid, tid in pairs:
            fh.write(f"{sid}\t{tid}\n")


# ---------------------------------------------------------------------------
# Synthetic corpora


@dataclass
class GroundTruth:
    """Planted parameters behind a synthetic corpus, for recovery tests."""

    true_matching: Matching
    true_beta: np.ndarray  # [k, n_pairs], rows sum to 1
    true_theta: dict[str, np.ndarray]  # doc id -> topic proportions
    true_rho: dict[str, np.ndarray]  # language tag -> full-vocab array, 0 at matched ids
    matched_flags: dict[str, list[bool]]  # doc id -> per-token "drawn from a topic pair"

    def matching_term_pairs(self, corpus: Corpus) -> list[tuple[str, str]]:
        vs, vt = corpus.vocab_s.terms, corpus.vocab_t.terms
        return [(vs[i], vt[j]) for i, j in self.true_matching.pairs]

    def to_json_dict(self, corpus: Corpus) -> dict:
        return {
            "matching": [list(p) for p in self.matching_term_pairs(corpus)],
            "beta": [[float(x) for x in row] for row in self.true_beta],
            "theta": {d: [float(x) for x in v] for d, v in self.true_theta.items()},
            "rho": {
                lang: {corpus.vocabulary(Language(lang)).terms[i]: float(p)
                       for i, p in enumerate(vec) if p > 0}
                for lang, vec in self.true_rho.items()
            },
            "matched_flags": {d: [int(b) for b in v] for d, v in self.matched_flags.items()},
        }

    def save(self, path: str | Path, corpus: Corpus) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(corpus), sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )


def planted_matching(n_pairs: int) -> Matching:
    """Matching pairing source id p with target id p for p < n_pairs."""
    return Matching((p, p) for p in range(n_pairs))


def _synthetic_vocabularies(
    vocab_sizes: tuple[int, int], true_matching: Matching, n_identical_terms: int
):
    """Name synthetic terms so the first n_identical_terms pairs share a string.

    Identical strings are at least six characters long, so they are picked up
    by the default identical-string initial matching; everything else is
    language-prefixed and never matches across languages by string.
    """
    n_s, n_t = vocab_sizes
    src = [f"sbg{i:05d}" for i in range(n_s)]
    tgt = [f"tbg{j:05d}" for j in range(n_t)]
    for p, (i, j) in enumerate(true_matching.pairs):
        if p < n_identical_terms:
            src[i] = tgt[j] = f"common{p:05d}"
        else:
            src[i] = f"src{p:05d}"
            tgt[j] = f"tgt{p:05d}"
    return Vocabulary(Language.SOURCE, src), Vocabulary(Language.TARGET, tgt)


def generate_synthetic_corpus(
    k: int,
    true_matching: Matching,
    vocab_sizes: tuple[int, int],
    n_docs_per_lang: int,
    doc_len: int,
    hyper,
    seed: int,
    n_identical_terms: int = 0,
) -> tuple[Corpus, GroundTruth]:
    """Draw a bilingual corpus from the generative story.

    Background distributions (one per language) are drawn over the unmatched
    terms, topics over the matched pairs, and each document pair shares one
    theta, is emitted in both languages, and is recorded in gold_pairs. Every
    token flips a fair coin between the matched branch (topic -> pair -> the
    member in the document's language) and the unmatched branch (background
    unigram). With an empty matching the coin is ignored and all tokens come
    from the background. Deterministic given the seed.
    """
    if doc_len < 1:
        raise MutoError("doc_len must be >= 1")
    n_s, n_t = vocab_sizes
    for i, j in true_matching.pairs:
        if not (0 <= i < n_s and 0 <= j < n_t):
            raise MutoError("true_matching references ids outside the vocabularies")
    vocab_s, vocab_t = _synthetic_vocabularies(vocab_sizes, true_matching, n_identical_terms)

    rng = np.random.default_rng(seed)
    n_pairs = len(true_matching)
    pair_src = np.array([i for i, _ in true_matching.pairs], dtype=np.int64)
    pair_tgt = np.array([j for _, j in true_matching.pairs], dtype=np.int64)
    unmatched = {
        Language.SOURCE: np.array(sorted(set(range(n_s)) - set(pair_src.tolist())), dtype=np.int64),
        Language.TARGET: np.array(sorted(set(range(n_t)) - set(pair_tgt.tolist())), dtype=np.int64),
    }
    for lang, ids in unmatched.items():
        if ids.size == 0:
            raise MutoError(f"no unmatched terms left in language {lang.value!r}")

    rho = {
        lang: rng.dirichlet(np.full(ids.size, hyper.gamma / ids.size))
        for lang, ids in unmatched.items()
    }
    beta = (
        np.vstack([rng.dirichlet(np.full(n_pairs, hyper.lam / n_pairs)) for _ in range(k)])
        if n_pairs > 0
        else np.zeros((k, 0))
    )

    width = max(4, len(str(n_docs_per_lang - 1)))
    documents: list[Document] = []
    gold: list[tuple[str, str]] = []
    true_theta: dict[str, np.ndarray] = {}
    matched_flags: dict[str, list[bool]] = {}
    pair_member = {Language.SOURCE: pair_src, Language.TARGET: pair_tgt}

    for p in range(n_docs_per_lang):
        theta = rng.dirichlet(np.full(k, hyper.alpha / k))
        sid, tid = f"s{p:0{width}d}", f"t{p:0{width}d}"
        for doc_id, lang in ((sid, Language.SOURCE), (tid, Language.TARGET)):
            z = rng.choice(k, size=doc_len, p=theta)
            coin = rng.random(doc_len) < 0.5 if n_pairs > 0 else np.zeros(doc_len, dtype=bool)
            tokens = np.empty(doc_len, dtype=np.int64)
            for topic in range(k):
                sel = np.flatnonzero((z == topic) & coin)
                if sel.size:
                    pairs = rng.choice(n_pairs, size=sel.size, p=beta[topic])
                    tokens[sel] = pair_member[lang][pairs]
            bg = np.flatnonzero(~coin)
            if bg.size:
                draws = rng.choice(unmatched[lang].size, size=bg.size, p=rho[lang])
                tokens[bg] = unmatched[lang][draws]
            documents.append(Document(doc_id, lang, tokens.tolist()))
            true_theta[doc_id] = theta
            matched_flags[doc_id] = coin.tolist()
        gold.append((sid, tid))

    corpus = Corpus(documents, vocab_s, vocab_t, gold_pairs=gold)
    corpus.validate()

    rho_full = {}
    for lang, size in ((Language.SOURCE, n_s), (Language.TARGET, n_t)):
        full = np.zeros(size)
        full[unmatched[lang]] = rho[lang]
        rho_full[lang.value] = full
    truth = GroundTruth(true_matching, beta, true_theta, rho_full, matched_flags)
    return corpus, truth
