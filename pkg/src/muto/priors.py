"""Matching-prior construction: edit distance, reference lexicon, PMI, uniform.

A prior assigns every candidate source/target term pair a nonnegative weight.
Weights enter the matching objective through their logarithm, so weight 0 means
"edge disallowed" and weight 1 is neutral.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .corpus import Vocabulary
from .errors import FormatError, MutoError

log = logging.getLogger(__name__)


class PriorMatrix:
    """Sparse nonnegative edge preferences with a default for absent entries."""

    def __init__(self, entries: dict[tuple[int, int], float], default_weight: float = 0.0):
        if default_weight < 0:
            raise MutoError("default_weight must be nonnegative")
        for (i, j), w in entries.items():
            if not w > 0:
                raise MutoError(f"stored prior weight for edge ({i},{j}) must be positive")
        self.entries = dict(entries)
        self.default_weight = float(default_weight)
        self._arrays = None

    def __len__(self) -> int:
        return len(self.entries)

    def weight(self, i: int, j: int) -> float:
        return self.entries.get((i, j), self.default_weight)

    def weights_for(self, source_ids: np.ndarray, target_ids: np.ndarray) -> np.ndarray:
        get = self.entries.get
        d = self.default_weight
        return np.fromiter(
            (get((int(i), int(j)), d) for i, j in zip(source_ids, target_ids)),
            dtype=np.float64,
            count=len(source_ids),
        )

    def support_arrays(self):
        """Stored edges as (source_ids, target_ids, weights), lexicographically sorted."""
        if self._arrays is None:
            items = sorted(self.entries.items())
            i = np.array([e[0][0] for e in items], dtype=np.int64)
            j = np.array([e[0][1] for e in items], dtype=np.int64)
            w = np.array([e[1] for e in items], dtype=np.float64)
            self._arrays = (i, j, w)
        return self._arrays


def uniform_prior() -> PriorMatrix:
    """The no-prior condition: every edge allowed at weight 1 (log weight 0)."""
    return PriorMatrix({}, default_weight=1.0)


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance (insert/delete/substitute each cost 1)."""
    if len(a) > len(b):
        a, b = b, a
    if not a:
        return len(b)
    prev = list(range(len(a) + 1))
    for i, cb in enumerate(b, start=1):
        cur = [i] + [0] * len(a)
        for j, ca in enumerate(a, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb))
        prev = cur
    return prev[len(a)]


def edit_distance_prior(
    vocab_s: Vocabulary, vocab_t: Vocabulary, max_distance: int | None = None
) -> PriorMatrix:
    """Orthographic prior: weight = 1 / (0.1 + edit distance).

    With max_distance set, pairs further apart are not stored and fall back to
    a pessimistic default of 1/(0.1 + max_distance + 1); the cutoff bounds the
    V*V sweep without hard-disallowing any edge. The sweep is independent per
    source term and safe to partition.
    """
    if len(vocab_s) == 0 or len(vocab_t) == 0:
        raise MutoError("edit_distance_prior requires nonempty vocabularies")
    entries = {}
    for i, a in enumerate(vocab_s.terms):
        for j, b in enumerate(vocab_t.terms):
            if max_distance is not None and abs(len(a) - len(b)) > max_distance:
                continue
            d = levenshtein(a, b)
            if max_distance is not None and d > max_distance:
                continue
            entries[(i, j)] = 1.0 / (0.1 + d)
    default = 0.0 if max_distance is None else 1.0 / (0.1 + max_distance + 1)
    return PriorMatrix(entries, default_weight=default)


class Lexicon:
    """Reference translation lexicon: source term -> set of target terms."""

    def __init__(self, translations: dict[str, set[str]]):
        for term, targets in translations.items():
            if not targets:
                raise MutoError(f"lexicon entry {term!r} has no translations")
        self.translations = {t: set(v) for t, v in translations.items()}

    def __len__(self) -> int:
        return len(self.translations)

    def __contains__(self, term: str) -> bool:
        return term in self.translations

    def get(self, term: str) -> set[str]:
        return self.translations.get(term, set())


def load_lexicon(path: str | Path) -> Lexicon:
    translations: dict[str, set[str]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected 'source_term<TAB>target_term'")
        translations.setdefault(parts[0], set()).add(parts[1])
    if not translations:
        raise MutoError("empty lexicon")
    return Lexicon(translations)


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for term in sorted(lexicon.translations):
            for target in sorted(lexicon.translations[term]):
                fh.write(f"{term}\t{target}\n")


def dictionary_prior(lexicon: Lexicon, vocab_s: Vocabulary, vocab_t: Vocabulary) -> PriorMatrix:
    """Weight 1/N per listed translation, edges the lexicon omits disallowed.

    N counts only translations that survived vocabulary filtering, so an
    unambiguous in-vocabulary translation always gets weight 1 regardless of
    how many out-of-vocabulary alternatives the lexicon lists.
    """
    entries = {}
    for term, i in vocab_s.index.items():
        targets = [vocab_t.index[t] for t in lexicon.get(term) if t in vocab_t.index]
        if not targets:
            continue
        w = 1.0 / len(targets)
        for j in targets:
            entries[(i, j)] = w
    return PriorMatrix(entries, default_weight=0.0)


def pmi_prior(
    aligned_pairs: list[tuple[list[str], list[str]]],
    vocab_s: Vocabulary,
    vocab_t: Vocabulary,
    epsilon: float = 1e-4,
    transform: str = "ratio",
) -> PriorMatrix:
    """Prior from pointwise mutual information over aligned sentence pairs.

    Occurrence is per-sentence-pair set membership, so duplicating the corpus
    leaves weights unchanged. With transform="ratio" (the default) the weight
    is the probability ratio p(i,j)/(p(i)p(j)) floored at epsilon, i.e. its log
    is exactly the PMI score; "positive" stores max(PMI, 0) + epsilon instead.
    Pairs that never co-occur are absent and fall back to epsilon.
    """
    if not aligned_pairs:
        raise MutoError("pmi_prior requires at least one aligned sentence pair")
    if not epsilon > 0:
        raise MutoError("epsilon must be positive")
    if transform not in ("ratio", "positive"):
        raise MutoError(f"unknown pmi transform {transform!r}")

    n = len(aligned_pairs)
    count_s: dict[int, int] = {}
    count_t: dict[int, int] = {}
    joint: dict[tuple[int, int], int] = {}
    for src_tokens, tgt_tokens in aligned_pairs:
        s_ids = {vocab_s.index[t] for t in src_tokens if t in vocab_s.index}
        t_ids = {vocab_t.index[t] for t in tgt_tokens if t in vocab_t.index}
        for i in s_ids:
            count_s[i] = count_s.get(i, 0) + 1
        for j in t_ids:
            count_t[j] = count_t.get(j, 0) + 1
        for i in s_ids:
            for j in t_ids:
                joint[(i, j)] = joint.get((i, j), 0) + 1

    entries = {}
    for (i, j), c_ij in joint.items():
        ratio = (c_ij * n) / (count_s[i] * count_t[j])
        if transform == "ratio":
            entries[(i, j)] = max(ratio, epsilon)
        else:
            entries[(i, j)] = max(np.log(ratio), 0.0) + epsilon
    return PriorMatrix(entries, default_weight=epsilon)


def load_aligned_pairs(path: str | Path) -> list[tuple[list[str], list[str]]]:
    """Aligned sentence file: one pair per line, 'src tokens<TAB>tgt tokens'."""
    pairs = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected two tab-separated token lists")
        pairs.append((parts[0].split(), parts[1].split()))
    if not pairs:
        raise MutoError("no aligned sentence pairs in file")
    return pairs


def save_prior(
    prior: PriorMatrix, path: str | Path, vocab_s: Vocabulary, vocab_t: Vocabulary
) -> None:
    """Write the TSV prior format: a '#default_weight=' header, then term pairs."""
    i_arr, j_arr, w_arr = prior.support_arrays()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#default_weight={prior.default_weight!r}\n")
        for i, j, w in zip(i_arr, j_arr, w_arr):
            fh.write(f"{vocab_s.terms[i]}\t{vocab_t.terms[j]}\t{float(w)!r}\n")


def load_prior(path: str | Path, vocab_s: Vocabulary, vocab_t: Vocabulary) -> PriorMatrix:
    """Read the TSV prior format; entries naming out-of-vocabulary terms are skipped.

    This is also the injection point for externally computed weights (for
    example from a latent-space bilingual matching model).
    """
    default = None
    entries: dict[tuple[int, int], float] = {}
    skipped = 0
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            if line.startswith("#default_weight="):
                try:
                    default = float(line.split("=", 1)[1])
                except ValueError:
                    raise FormatError(f"line {lineno}: bad default_weight") from None
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"line {lineno}: expected 'source<TAB>target<TAB>weight'")
        s_term, t_term, w_text = parts
        try:
            w = float(w_text)
        except ValueError:
            raise FormatError(f"line {lineno}: bad weight {w_text!r}") from None
        if w <= 0:
            raise FormatError(f"line {lineno}: stored weights must be positive")
        if s_term not in vocab_s.index or t_term not in vocab_t.index:
            skipped += 1
            continue
        entries[(vocab_s.index[s_term], vocab_t.index[t_term])] = w
    if default is None:
        raise FormatError("prior file is missing the '#default_weight=' header")
    if skipped:
        log.info("load_prior: skipped %d entries naming out-of-vocabulary terms", skipped)
    return PriorMatrix(entries, default_weight=default)
