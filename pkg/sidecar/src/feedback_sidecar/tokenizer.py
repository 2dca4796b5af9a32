"""Byte-pair-encoding subword tokenizer learned from the training corpus.

The neural path consumes raw text through its own subword vocabulary rather
than the engine's stemming pipeline; an optional normalization pass
(lowercase, URL/@-handle stripping) approximates the engine's cleanup for
callers who want matched preprocessing.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from pathlib import Path

PAD, UNK, CLS, MASK = "[PAD]", "[UNK]", "[CLS]", "[MASK]"
SPECIALS = [PAD, UNK, CLS, MASK]
END = "</w>"  # marks the final symbol of a word

_URL_RE = re.compile(r"https?://\S+|www\.\S+")
_HANDLE_RE = re.compile(r"@\w+")
_WORD_RE = re.compile(r"[a-z0-9']+")


def normalize(text: str, strip_noise: bool = True) -> list[str]:
    text = text.lower()
    if strip_noise:
        text = _URL_RE.sub(" ", text)
        text = _HANDLE_RE.sub(" ", text)
    return _WORD_RE.findall(text)


def _word_symbols(word: str) -> tuple[str, ...]:
    return tuple(word[:-1]) + (word[-1] + END,)


class BpeTokenizer:
    """Greedy merge-order BPE over word-internal character pairs."""

    def __init__(self, merges: list[tuple[str, str]], vocab: list[str],
                 normalize_text: bool = True):
        self.merges = merges
        self.merge_rank = {pair: r for r, pair in enumerate(merges)}
        self.vocab = vocab
        self.index = {s: i for i, s in enumerate(vocab)}
        self.normalize_text = normalize_text
        self._cache: dict[str, tuple[str, ...]] = {}

    # -- training ----------------------------------------------------------

    @classmethod
    def train(cls, texts: list[str], n_merges: int = 300,
              normalize_text: bool = True) -> "BpeTokenizer":
        word_freq = Counter()
        for text in texts:
            word_freq.update(normalize(text, normalize_text))
        if not word_freq:
            raise ValueError("cannot train a tokenizer on an empty corpus")

        words = {w: list(_word_symbols(w)) for w in word_freq}
        merges: list[tuple[str, str]] = []
        for _ in range(n_merges):
            pairs = Counter()
            for w, syms in words.items():
                f = word_freq[w]
                for a, b in zip(syms, syms[1:]):
                    pairs[(a, b)] += f
            if not pairs:
                break
            # highest count, ties broken lexicographically for determinism
            best = min(pairs, key=lambda p: (-pairs[p], p))
            if pairs[best] < 2:
                break
            merges.append(best)
            merged = best[0] + best[1]
            for w, syms in words.items():
                i, out = 0, []
                while i < len(syms):
                    if (i + 1 < len(syms)
                            and (syms[i], syms[i + 1]) == best):
                        out.append(merged)
                        i += 2
                    else:
                        out.append(syms[i])
                        i += 1
                words[w] = out

        symbols = sorted({s for syms in words.values() for s in syms})
        return cls(merges, SPECIALS + symbols, normalize_text)

    # -- encoding ----------------------------------------------------------

    def _encode_word(self, word: str) -> tuple[str, ...]:
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        syms = list(_word_symbols(word))
        while len(syms) > 1:
            ranked = [(self.merge_rank.get((a, b)), i)
                      for i, (a, b) in enumerate(zip(syms, syms[1:]))
                      if (a, b) in self.merge_rank]
            if not ranked:
                break
            _, i = min(ranked)
            syms[i:i + 2] = [syms[i] + syms[i + 1]]
        out = tuple(syms)
        self._cache[word] = out
        return out

    def encode(self, text: str, max_len: int) -> list[int]:
        """Token ids, CLS-prefixed, truncated/padded to max_len."""
        ids = [self.index[CLS]]
        unk = self.index[UNK]
        for word in normalize(text, self.normalize_text):
            for sym in self._encode_word(word):
                ids.append(self.index.get(sym, unk))
                if len(ids) >= max_len:
                    break
            if len(ids) >= max_len:
                break
        ids += [self.index[PAD]] * (max_len - len(ids))
        return ids

    # -- persistence -------------------------------------------------------

    def save(self, path: str | Path) -> None:
        doc = {
            "schema_version": 1,
            "merges": [list(p) for p in self.merges],
            "vocab": self.vocab,
            "normalize_text": self.normalize_text,
        }
        Path(path).write_text(json.dumps(doc), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "BpeTokenizer":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls([tuple(p) for p in doc["merges"]], doc["vocab"],
                   doc["normalize_text"])

    def __len__(self) -> int:
        return len(self.vocab)
