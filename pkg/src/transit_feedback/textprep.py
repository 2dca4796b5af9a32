"""Text normalization shared by topic modeling and TF-IDF features.

Raw feedback text becomes a lowercase token stream (tokenize -> stopword and
agency-term filtering -> Porter stemming), then unigram/bigram counting
against a corpus vocabulary with a minimum-frequency cutoff.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

_URL_RE = re.compile(r"https?://\S+|www\.\S+")
_HANDLE_RE = re.compile(r"@\w+")
_APOSTROPHE_RE = re.compile(r"(?<=\w)['’](?=\w)")
_WORD_RE = re.compile(r"\w+", re.UNICODE)


def tokenize(text: str, strip_urls: bool = True, strip_handles: bool = True) -> list[str]:
    """Lowercased word tokens; punctuation stripped, intra-word apostrophes
    collapsed ("don't" -> "dont"). URLs and @-handles removed by default."""
    text = text.lower()
    if strip_urls:
        text = _URL_RE.sub(" ", text)
    if strip_handles:
        text = _HANDLE_RE.sub(" ", text)
    text = _APOSTROPHE_RE.sub("", text)
    return _WORD_RE.findall(text)


def load_term_list(path: str | Path | None = None) -> set[str]:
    """Load a one-term-per-line list ('#' comments). Terms are normalized the
    same way tokenize() normalizes words, so apostrophe forms match."""
    if path is None:
        path = Path(str(resources.files("transit_feedback")
                        .joinpath("data", "stopwords.txt")))
    terms: set[str] = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            terms.add(_APOSTROPHE_RE.sub("", line))
    return terms


def filter_terms(tokens: list[str], stopwords: set[str],
                 agency_terms: set[str] | None = None) -> list[str]:
    """Drop stopwords and agency-specific terms (route/station names etc.),
    preserving order."""
    drop = stopwords | (agency_terms or set())
    return [t for t in tokens if t not in drop]


# ---------------------------------------------------------------------------
# Porter stemmer

_VOWELS = "aeiou"


def _is_cons(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_cons(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Count of vowel-consonant sequences (the 'm' of the Porter rules)."""
    forms = "".join("c" if _is_cons(stem, i) else "v" for i in range(len(stem)))
    return len(re.findall("vc", forms))


def _has_vowel(stem: str) -> bool:
    return any(not _is_cons(stem, i) for i in range(len(stem)))


def _ends_double_cons(word: str) -> bool:
    return (len(word) >= 2 and word[-1] == word[-2]
            and _is_cons(word, len(word) - 1))


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    return (_is_cons(word, len(word) - 3)
            and not _is_cons(word, len(word) - 2)
            and _is_cons(word, len(word) - 1)
            and word[-1] not in "wxy")


def _replace(word: str, suffix: str, repl: str, m_min: int) -> str | None:
    if not word.endswith(suffix):
        return None
    stem = word[:-len(suffix)] if suffix else word
    if _measure(stem) > m_min:
        return stem + repl
    return word


def porter_stem(word: str) -> str:
    """Porter (1980) suffix-stripping stemmer, iterated to a fixed point so
    stemming is idempotent (single-pass Porter is not: "agreed" -> "agre" ->
    "agr"). Tokens shorter than 3 chars or containing non-letters are
    returned unchanged."""
    prev = word
    for _ in range(5):
        out = _porter_pass(prev)
        if out == prev:
            return out
        prev = out
    return prev


def _porter_pass(word: str) -> str:
    if len(word) <= 2 or not word.isalpha():
        return word
    w = word

    # step 1a; bare final 's' is dropped only when a vowel occurs before the
    # letter preceding it (snowball-style rule: keeps "bus", "gas" intact)
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif w.endswith("ss"):
        pass
    elif w.endswith("s") and _has_vowel(w[:-2]):
        w = w[:-1]

    # step 1b
    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    elif (w.endswith("ed") and _has_vowel(w[:-2])) or \
         (w.endswith("ing") and _has_vowel(w[:-3])):
        w = w[:-2] if w.endswith("ed") else w[:-3]
        if w.endswith(("at", "bl", "iz")):
            w += "e"
        elif _ends_double_cons(w) and w[-1] not in "lsz":
            w = w[:-1]
        elif _measure(w) == 1 and _ends_cvc(w):
            w += "e"

    # step 1c
    if w.endswith("y") and _has_vowel(w[:-1]):
        w = w[:-1] + "i"

    # step 2
    for suffix, repl in (
        ("ational", "ate"), ("tional", "tion"), ("enci", "ence"),
        ("anci", "ance"), ("izer", "ize"), ("abli", "able"), ("alli", "al"),
        ("entli", "ent"), ("eli", "e"), ("ousli", "ous"), ("ization", "ize"),
        ("ation", "ate"), ("ator", "ate"), ("alism", "al"), ("iveness", "ive"),
        ("fulness", "ful"), ("ousness", "ous"), ("aliti", "al"),
        ("iviti", "ive"), ("biliti", "ble"),
    ):
        if w.endswith(suffix):
            w = _replace(w, suffix, repl, 0) or w
            break

    # step 3
    for suffix, repl in (
        ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
        ("ical", "ic"), ("ful", ""), ("ness", ""),
    ):
        if w.endswith(suffix):
            w = _replace(w, suffix, repl, 0) or w
            break

    # step 4
    for suffix in (
        "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
        "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
    ):
        if w.endswith(suffix):
            stem = w[:-len(suffix)]
            if suffix == "ion" and (not stem or stem[-1] not in "st"):
                break
            if _measure(stem) > 1:
                w = stem
            break

    # step 5a
    if w.endswith("e"):
        stem = w[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            w = stem

    # step 5b
    if _measure(w) > 1 and _ends_double_cons(w) and w.endswith("l"):
        w = w[:-1]

    return w


def stem(tokens: list[str]) -> list[str]:
    """Porter-stem each token. Idempotent in practice on corpus vocabulary;
    covered by a property test."""
    return [porter_stem(t) for t in tokens]


def preprocess(text: str, stopwords: set[str],
               agency_terms: set[str] | None = None,
               do_stem: bool = True) -> list[str]:
    """Full normalization chain: tokenize, filter, stem."""
    toks = filter_terms(tokenize(text), stopwords, agency_terms)
    return stem(toks) if do_stem else toks


# ---------------------------------------------------------------------------
# n-grams and vocabulary

def extract_ngrams(tokens: list[str], orders: set[int] = frozenset({1, 2})) -> list[str]:
    """Contiguous unigrams and/or bigrams in order; bigram tokens joined by a
    single space."""
    if not orders <= {1, 2}:
        raise ValueError("orders must be a subset of {1, 2}")
    out: list[str] = []
    if 1 in orders:
        out.extend(tokens)
    if 2 in orders:
        out.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    return out


class VocabularyError(Exception):
    pass


@dataclass
class Vocabulary:
    """Ordered term list with column ids, corpus and document frequencies."""

    terms: list[str]
    index: dict[str, int] = field(init=False)
    doc_freq: dict[str, int] = field(default_factory=dict)
    corpus_freq: dict[str, int] = field(default_factory=dict)
    n_docs: int = 0
    min_count: int = 1

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "terms": self.terms,
            "doc_freq": [self.doc_freq.get(t, 0) for t in self.terms],
            "corpus_freq": [self.corpus_freq.get(t, 0) for t in self.terms],
            "n_docs": self.n_docs,
            "min_count": self.min_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        terms = list(d["terms"])
        v = cls(terms=terms, n_docs=d["n_docs"], min_count=d["min_count"])
        v.doc_freq = dict(zip(terms, d["doc_freq"]))
        v.corpus_freq = dict(zip(terms, d["corpus_freq"]))
        return v


def build_vocabulary(
    corpus_streams: list[list[str]],
    min_count: int = 20,
    orders: set[int] = frozenset({1, 2}),
) -> Vocabulary:
    """Build the term vocabulary over unigrams and bigrams with corpus
    frequency >= min_count. Term order is lexicographic (deterministic)."""
    if not corpus_streams:
        raise VocabularyError("empty corpus")
    corpus_freq: dict[str, int] = {}
    doc_freq: dict[str, int] = {}
    for stream in corpus_streams:
        grams = extract_ngrams(stream, orders)
        for g in grams:
            corpus_freq[g] = corpus_freq.get(g, 0) + 1
        for g in set(grams):
            doc_freq[g] = doc_freq.get(g, 0) + 1
    kept = sorted(t for t, c in corpus_freq.items() if c >= min_count)
    if not kept:
        raise VocabularyError(
            f"no term reaches min_count={min_count} "
            f"(corpus has {len(corpus_freq)} distinct terms; "
            f"max frequency {max(corpus_freq.values(), default=0)})")
    vocab = Vocabulary(terms=kept, n_docs=len(corpus_streams), min_count=min_count)
    vocab.doc_freq = {t: doc_freq[t] for t in kept}
    vocab.corpus_freq = {t: corpus_freq[t] for t in kept}
    return vocab


def count_terms(stream: list[str], vocab: Vocabulary,
                orders: set[int] = frozenset({1, 2})) -> dict[int, int]:
    """Sparse term-id -> count map for one document; out-of-vocabulary
    n-grams are dropped."""
    counts: dict[int, int] = {}
    for g in extract_ngrams(stream, orders):
        tid = vocab.index.get(g)
        if tid is not None:
            counts[tid] = counts.get(tid, 0) + 1
    return counts
