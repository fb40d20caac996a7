"""Corpus ingestion: text cleanup, vocabulary building, integer encoding.

The cleanup rule is deliberately blunt: lowercase everything, delete every
character whose Unicode category is punctuation (``P*``, which includes all
bracket classes) or decimal digit (``Nd``), then split on whitespace runs.
Tokens that become empty are dropped. Diacritics and non-decimal numerals
are preserved.

Corpora are line-oriented (one sentence per line) and are always streamed,
never loaded whole. Gzip-compressed files are detected by magic bytes.
"""

from __future__ import annotations

import gzip
import io
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import DuplicateEntryError, EmptyVocabularyError, FormatError

_GZIP_MAGIC = b"\x1f\x8b"


class _DeleteTable(dict):
    """str.translate table that lazily classifies code points.

    Maps punctuation/digit code points to None (delete) and caches every
    decision, so repeated corpus passes stay at C speed.
    """

    def __missing__(self, code: int) -> int | None:
        cat = unicodedata.category(chr(code))
        keep = None if (cat.startswith("P") or cat == "Nd") else code
        self[code] = keep
        return keep


_DELETE_TABLE = _DeleteTable()


def preprocess(line: str) -> list[str]:
    """Clean one line of text into a list of tokens.

    Lowercases, strips punctuation/bracket/digit characters, splits on
    whitespace, and drops tokens that end up empty.
    """
    return line.lower().translate(_DELETE_TABLE).split()


class RawCorpus:
    """A streamable line-oriented UTF-8 text corpus, possibly gzipped.

    Wraps one or more file paths (or an in-memory string for tests) and can
    be iterated multiple times. Decoding is strict: invalid UTF-8 raises
    ``UnicodeDecodeError``, which carries the offending byte offset.
    """

    def __init__(self, *paths: str | Path):
        self.paths = tuple(Path(p) for p in paths)
        self._text: str | None = None

    @classmethod
    def from_text(cls, text: str) -> "RawCorpus":
        corpus = cls()
        corpus._text = text
        return corpus

    def lines(self) -> Iterator[str]:
        if self._text is not None:
            yield from io.StringIO(self._text)
            return
        for path in self.paths:
            with open(path, "rb") as raw:
                if raw.peek(2)[:2] == _GZIP_MAGIC:
                    stream: io.BufferedIOBase = gzip.open(raw)  # type: ignore[assignment]
                else:
                    stream = raw
                for line in io.TextIOWrapper(stream, encoding="utf-8", errors="strict"):
                    yield line

    def sentences(self) -> Iterator[list[str]]:
        """Preprocessed token lists, one per input line."""
        for line in self.lines():
            yield preprocess(line)


@dataclass(frozen=True)
class Vocabulary:
    """Word/id bijection ordered by descending count (ties: first occurrence).

    Id 0 is always the most frequent word. Counts are at least the min_count
    the vocabulary was built with.
    """

    words: tuple[str, ...]
    counts: tuple[int, ...]
    index: dict[str, int] = field(repr=False)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    @classmethod
    def from_counts(cls, items: Iterable[tuple[str, int]]) -> "Vocabulary":
        """Build from (word, count) pairs already in id order."""
        words, counts = [], []
        index: dict[str, int] = {}
        for word, count in items:
            if word in index:
                raise DuplicateEntryError(f"duplicate vocabulary word {word!r}")
            index[word] = len(words)
            words.append(word)
            counts.append(count)
        return cls(tuple(words), tuple(counts), index)


def build_vocabulary(corpus: RawCorpus, min_count: int = 1) -> Vocabulary:
    """Count preprocessed words and keep those occurring >= min_count times.

    Ordering is by descending count; ties break by first occurrence in the
    corpus, which makes builds deterministic.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts: Counter[str] = Counter()
    first_seen: dict[str, int] = {}
    seq = 0
    for tokens in corpus.sentences():
        for token in tokens:
            if token not in first_seen:
                first_seen[token] = seq
            seq += 1
        counts.update(tokens)
    kept = [(w, c) for w, c in counts.items() if c >= min_count]
    if not kept:
        raise EmptyVocabularyError(
            f"no words occur at least {min_count} times after preprocessing"
        )
    kept.sort(key=lambda wc: (-wc[1], first_seen[wc[0]]))
    return Vocabulary.from_counts(kept)


@dataclass(frozen=True)
class TokenStream:
    """Integer-encoded corpus with sentence boundaries.

    ``ids`` is the flat token-id sequence; ``offsets`` delimits sentences:
    sentence i spans ``ids[offsets[i]:offsets[i+1]]``. Empty sentences are
    dropped during encoding.
    """

    ids: np.ndarray  # int32, shape (n_tokens,)
    offsets: np.ndarray  # int64, shape (n_sentences + 1,)

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    @property
    def n_sentences(self) -> int:
        return int(self.offsets.shape[0] - 1)

    def sentences(self) -> Iterator[np.ndarray]:
        for i in range(self.n_sentences):
            yield self.ids[self.offsets[i] : self.offsets[i + 1]]


def encode(corpus: RawCorpus, vocab: Vocabulary) -> TokenStream:
    """Replace in-vocabulary tokens by ids, dropping OOV tokens.

    Sentences that lose all their tokens are omitted entirely.
    """
    ids: list[int] = []
    offsets = [0]
    index = vocab.index
    for tokens in corpus.sentences():
        kept = [index[t] for t in tokens if t in index]
        if kept:
            ids.extend(kept)
            offsets.append(len(ids))
    return TokenStream(
        np.asarray(ids, dtype=np.int32), np.asarray(offsets, dtype=np.int64)
    )


def stats(corpus: RawCorpus) -> tuple[int, int]:
    """(total preprocessed tokens, distinct preprocessed words)."""
    total = 0
    unique: set[str] = set()
    for tokens in corpus.sentences():
        total += len(tokens)
        unique.update(tokens)
    return total, len(unique)


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Write one "word<TAB>count" line per entry, in id order."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for word, count in zip(vocab.words, vocab.counts):
            f.write(f"{word}\t{count}\n")


def load_vocabulary(path: str | Path) -> Vocabulary:
    items: list[tuple[str, int]] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError("vocabulary row must be 'word<TAB>count'", lineno)
            try:
                count = int(parts[1])
            except ValueError:
                raise FormatError(f"non-integer count {parts[1]!r}", lineno) from None
            items.append((parts[0], count))
    if not items:
        raise EmptyVocabularyError(f"empty vocabulary file: {path}")
    return Vocabulary.from_counts(items)
