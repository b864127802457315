"""Greedy BPE subword tokenizer with [CLS]/[SEP]/[PAD]/[UNK] specials."""

from __future__ import annotations

import heapq
import os
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

PAD, UNK, CLS, SEP = 0, 1, 2, 3
SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]")
END_OF_WORD = "</w>"
_MAGIC = "BPEV1"
_MERGES_SENTINEL = "#MERGES"
_LAST = "\U0010ffff"


class TokenizerError(ValueError):
    pass


@dataclass(frozen=True)
class TokenSequence:
    ids: np.ndarray
    mask: np.ndarray

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def length(self) -> int:
        return int(self.mask.sum())


@dataclass
class SubwordVocab:
    tokens: list[str]
    merges: list[tuple[str, str]]
    _index: dict[str, int] = field(init=False, repr=False)
    _ranks: dict[tuple[str, str], int] = field(init=False, repr=False)
    _cache: dict[str, list[int]] = field(init=False, repr=False)

    def __post_init__(self):
        if tuple(self.tokens[:4]) != SPECIALS:
            raise TokenizerError("vocabulary must start with [PAD], [UNK], [CLS], [SEP]")
        self._index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self._index) != len(self.tokens):
            raise TokenizerError("duplicate vocabulary tokens")
        self._ranks = {}
        for rank, (left, right) in enumerate(self.merges):
            if left + right not in self._index:
                raise TokenizerError(f"merge {left!r}+{right!r} produces an unknown token")
            self._ranks.setdefault((left, right), rank)
        self._cache = {}

    def __len__(self) -> int:
        return len(self.tokens)

    def token_id(self, token: str) -> int:
        return self._index.get(token, UNK)

    def segment_word(self, word: str) -> list[str]:
        """Apply the merges to one whitespace-free word (end marker included)."""
        symbols = [ch if ch in self._index else SPECIALS[UNK] for ch in word]
        symbols.append(END_OF_WORD)
        ranks = self._ranks
        while len(symbols) > 1:
            best = None
            best_rank = None
            for pair in zip(symbols, symbols[1:]):
                rank = ranks.get(pair)
                if rank is not None and (best_rank is None or rank < best_rank):
                    best, best_rank = pair, rank
            if best is None:
                break
            symbols = _merge_symbols(symbols, best)
        return symbols

    def word_ids(self, word: str) -> list[int]:
        ids = self._cache.get(word)
        if ids is None:
            ids = [self._index.get(s, UNK) for s in self.segment_word(word)]
            self._cache[word] = ids
        return ids


def _merge_symbols(symbols: list[str], pair: tuple[str, str]) -> list[str]:
    left, right = pair
    out: list[str] = []
    i = 0
    n = len(symbols)
    while i < n:
        if i + 1 < n and symbols[i] == left and symbols[i + 1] == right:
            out.append(left + right)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def _tie_key(pair: tuple[str, str]) -> tuple[str, str]:
    # the end marker ranks after every character when counts tie
    return (pair[0].replace(END_OF_WORD, _LAST), pair[1].replace(END_OF_WORD, _LAST))


def _pair_counts(word: tuple[str, ...]) -> Counter:
    return Counter(zip(word, word[1:]))


def train_bpe(corpus: Sequence[str], target_vocab_size: int) -> SubwordVocab:
    """Learn merges by repeatedly fusing the most frequent adjacent pair.

    Ties go to the lexicographically smallest pair, with the end-of-word
    marker ordered after every character. Training stops at
    ``target_vocab_size`` tokens or when no pair occurs at least twice.
    """
    words = Counter(w for text in corpus for w in text.split())
    if not corpus or not words:
        raise TokenizerError("cannot train a tokenizer on an empty corpus")
    chars = sorted({ch for w in words for ch in w})
    base = list(SPECIALS) + [END_OF_WORD] + chars
    if target_vocab_size < len(base):
        raise TokenizerError(
            f"target_vocab_size {target_vocab_size} is below the base size {len(base)} "
            f"({len(chars)} characters + end marker + 4 specials)"
        )

    tokens = list(base)
    known = set(tokens)
    merges: list[tuple[str, str]] = []

    segs = [tuple(w) + (END_OF_WORD,) for w in words]
    freqs = list(words.values())
    counts: Counter = Counter()
    where: dict[tuple[str, str], set[int]] = defaultdict(set)
    for wi, seg in enumerate(segs):
        for pair, n in _pair_counts(seg).items():
            counts[pair] += n * freqs[wi]
            where[pair].add(wi)
    heap = [(-n, _tie_key(pair), pair) for pair, n in counts.items()]
    heapq.heapify(heap)

    while len(tokens) < target_vocab_size and heap:
        neg, _, pair = heapq.heappop(heap)
        if counts.get(pair, 0) != -neg:
            continue  # stale entry
        if -neg < 2:
            break
        merges.append(pair)
        new = pair[0] + pair[1]
        if new not in known:
            known.add(new)
            tokens.append(new)
        touched: set[tuple[str, str]] = set()
        for wi in list(where.pop(pair, ())):
            old = segs[wi]
            updated = tuple(_merge_symbols(list(old), pair))
            freq = freqs[wi]
            for p, n in _pair_counts(old).items():
                counts[p] -= n * freq
                if counts[p] == 0:
                    del counts[p]
                if p in where:
                    where[p].discard(wi)
                touched.add(p)
            for p, n in _pair_counts(updated).items():
                counts[p] += n * freq
                where[p].add(wi)
                touched.add(p)
            segs[wi] = updated
        for p in touched:
            if p in counts:
                heapq.heappush(heap, (-counts[p], _tie_key(p), p))
    return SubwordVocab(tokens, merges)


def encode(vocab: SubwordVocab, text: str, max_len: int) -> TokenSequence:
    if max_len < 2:
        raise TokenizerError("max_len must be at least 2")
    stream: list[int] = []
    budget = max_len - 2
    for word in text.split():
        if len(stream) >= budget:
            break
        stream.extend(vocab.word_ids(word))
    stream = stream[:budget]
    ids = np.full(max_len, PAD, dtype=np.int64)
    ids[0] = CLS
    ids[1 : 1 + len(stream)] = stream
    ids[1 + len(stream)] = SEP
    mask = np.zeros(max_len, dtype=np.int64)
    mask[: len(stream) + 2] = 1
    return TokenSequence(ids, mask)


def encode_batch(vocab: SubwordVocab, texts: Iterable[str], max_len: int) -> tuple[np.ndarray, np.ndarray]:
    """Encode many texts into stacked ``(ids, mask)`` arrays of shape [N, max_len]."""
    seqs = [encode(vocab, t, max_len) for t in texts]
    if not seqs:
        empty = np.zeros((0, max_len), dtype=np.int64)
        return empty, empty.copy()
    return np.stack([s.ids for s in seqs]), np.stack([s.mask for s in seqs])


def decode(vocab: SubwordVocab, ids: Iterable[int]) -> str:
    parts = []
    size = len(vocab)
    for i in ids:
        i = int(i)
        if not 0 <= i < size:
            raise TokenizerError(f"token id {i} out of range for vocabulary of size {size}")
        if i < len(SPECIALS):
            continue
        parts.append(vocab.tokens[i])
    return "".join(parts).replace(END_OF_WORD, " ").rstrip(" ")


def save_vocab(vocab: SubwordVocab, path: str | os.PathLike) -> None:
    if _MERGES_SENTINEL in vocab.tokens:
        raise TokenizerError(f"token {_MERGES_SENTINEL!r} collides with the file sentinel")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_MAGIC + "\n")
        for tok in vocab.tokens:
            fh.write(tok + "\n")
        fh.write(_MERGES_SENTINEL + "\n")
        for left, right in vocab.merges:
            fh.write(f"{left} {right}\n")


def load_vocab(path: str | os.PathLike) -> SubwordVocab:
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    if not lines or lines[0] != _MAGIC:
        raise TokenizerError(f"{os.fspath(path)}: not a {_MAGIC} vocabulary file")
    if lines[-1] == "":
        lines.pop()
    try:
        cut = lines.index(_MERGES_SENTINEL)
    except ValueError:
        raise TokenizerError(f"{os.fspath(path)}: missing {_MERGES_SENTINEL} section") from None
    merges = []
    for line in lines[cut + 1 :]:
        left, sep, right = line.partition(" ")
        if not sep or not left or not right:
            raise TokenizerError(f"{os.fspath(path)}: malformed merge line {line!r}")
        merges.append((left, right))
    return SubwordVocab(lines[1:cut], merges)
