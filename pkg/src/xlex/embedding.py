"""Embedding containers, training hyperparameters, and the text interchange format.

Both trainers and the aligner exchange matrices through one format: a header
line ``"|V| d"`` followed by one ``"word v1 ... vd"`` line per vocabulary
entry, in id order. Values are printed with 8 significant digits, which
round-trips float32 entries well below the 1e-5 interchange tolerance.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .corpus import Vocabulary
from .errors import DuplicateEntryError, FormatError, UnknownWordError

SKIPGRAM = "skipgram"
SUBWORD_SKIPGRAM = "subword-skipgram"
MODES = (SKIPGRAM, SUBWORD_SKIPGRAM)


@dataclass(frozen=True)
class TrainingConfig:
    """Trainer hyperparameters.

    Defaults mirror the replicated setup (skip-gram, dim 300, window 4,
    min count 1, 100 epochs); the remaining knobs use the customary values
    for this family of models: 5 negatives with a 0.75 noise exponent,
    learning rate decaying linearly 0.025 -> 1e-4, character n-grams of
    length 3..6 hashed into 2M buckets, no frequent-word subsampling.
    """

    mode: str = SKIPGRAM
    dim: int = 300
    window: int = 4
    min_count: int = 1
    epochs: int = 100
    negatives: int = 5
    initial_lr: float = 0.025
    seed: int = 1
    nmin: int = 3
    nmax: int = 6
    buckets: int = 2_000_000
    subsample: float = 0.0  # 0 disables; else the word2vec-style threshold

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("dim", "window", "min_count", "epochs", "negatives", "buckets"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.initial_lr <= 0:
            raise ValueError("initial_lr must be positive")
        if self.nmin > self.nmax:
            raise ValueError(f"nmin {self.nmin} > nmax {self.nmax}")
        if self.nmin < 1:
            raise ValueError("nmin must be positive")

    def with_(self, **kwargs) -> "TrainingConfig":
        return replace(self, **kwargs)

    def as_dict(self) -> dict[str, object]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


# Learning rate floor at the end of the linear decay.
MIN_LR = 1e-4
# Exponent applied to unigram counts in the negative-sampling distribution.
NOISE_ALPHA = 0.75


@dataclass(frozen=True)
class EmbeddingMatrix:
    """A dense |V| x d matrix tied to its vocabulary.

    Rows follow vocabulary id order. Construction validates shape agreement
    and finiteness, the two invariants everything downstream relies on.
    """

    vocab: Vocabulary
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got shape {m.shape}")
        if m.shape[0] != len(self.vocab):
            raise ValueError(
                f"matrix has {m.shape[0]} rows for {len(self.vocab)} words"
            )
        if not np.isfinite(m).all():
            raise ValueError("matrix contains NaN or Inf entries")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def __len__(self) -> int:
        return len(self.vocab)

    def vector(self, word: str) -> np.ndarray:
        idx = self.vocab.index.get(word)
        if idx is None:
            raise UnknownWordError(word)
        return self.matrix[idx]


def nearest_neighbors(
    m: EmbeddingMatrix, word: str, k: int
) -> list[tuple[str, float]]:
    """The k words most cosine-similar to ``word``, excluding the query.

    Ties break toward the smaller word id. Zero-norm rows score 0.
    """
    if k >= len(m.vocab):
        raise ValueError(f"k={k} must be smaller than the vocabulary ({len(m.vocab)})")
    query_id = m.vocab.index.get(word)
    if query_id is None:
        raise UnknownWordError(word)
    mat = np.asarray(m.matrix, dtype=np.float64)
    norms = np.linalg.norm(mat, axis=1)
    qnorm = norms[query_id]
    safe = np.where(norms == 0.0, 1.0, norms)
    if qnorm == 0.0:
        cos = np.zeros(len(m.vocab))
    else:
        cos = (mat @ mat[query_id]) / (safe * qnorm)
        cos[norms == 0.0] = 0.0
    cos[query_id] = -np.inf
    # lexsort: primary key descending cosine, secondary ascending id
    order = np.lexsort((np.arange(len(cos)), -cos))[:k]
    return [(m.vocab.words[i], float(cos[i])) for i in order]


def _format_value(v: float) -> str:
    return f"{v:.8g}"


def save_text(m: EmbeddingMatrix, sink: IO[str] | str | Path) -> None:
    """Write the embedding in the text interchange format."""
    if not np.isfinite(m.matrix).all():
        raise ValueError("refusing to serialize non-finite entries")
    own = isinstance(sink, (str, Path))
    f: IO[str] = open(sink, "w", encoding="utf-8", newline="\n") if own else sink  # type: ignore[assignment]
    try:
        f.write(f"{len(m.vocab)} {m.dim}\n")
        for i, word in enumerate(m.vocab.words):
            values = " ".join(_format_value(v) for v in m.matrix[i])
            f.write(f"{word} {values}\n")
    finally:
        if own:
            f.close()


def load_text(source: IO[str] | str | Path) -> EmbeddingMatrix:
    """Parse the text interchange format back into an EmbeddingMatrix.

    The reconstructed vocabulary carries synthetic descending counts (the
    format does not store counts; id order already encodes the frequency
    ranking).
    """
    own = isinstance(source, (str, Path))
    f: IO[str] = open(source, encoding="utf-8") if own else source  # type: ignore[assignment]
    try:
        header = f.readline()
        parts = header.split()
        if len(parts) != 2:
            raise FormatError(f"header must be '|V| d', got {header!r}", 1)
        try:
            n_words, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError(f"non-integer header fields in {header!r}", 1) from None
        if n_words < 0 or dim < 1:
            raise FormatError(f"invalid header dimensions {n_words} x {dim}", 1)
        words: list[str] = []
        seen: set[str] = set()
        matrix = np.empty((n_words, dim), dtype=np.float32)
        lineno = 1
        for row in range(n_words):
            line = f.readline()
            lineno += 1
            if not line:
                raise FormatError(
                    f"expected {n_words} rows, file ended after {row}", lineno
                )
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise FormatError(
                    f"expected word + {dim} values, got {len(parts)} fields", lineno
                )
            word = parts[0]
            if word in seen:
                raise DuplicateEntryError(f"duplicate word {word!r}", lineno)
            seen.add(word)
            words.append(word)
            try:
                matrix[row] = [float(v) for v in parts[1:]]
            except ValueError:
                raise FormatError("non-numeric vector component", lineno) from None
        if not np.isfinite(matrix).all():
            raise FormatError("non-finite vector component")
        vocab = Vocabulary.from_counts(
            (w, n_words - i) for i, w in enumerate(words)
        )
        return EmbeddingMatrix(vocab, matrix)
    finally:
        if own:
            f.close()


def dumps(m: EmbeddingMatrix) -> str:
    buf = io.StringIO()
    save_text(m, buf)
    return buf.getvalue()


def loads(text: str) -> EmbeddingMatrix:
    return load_text(io.StringIO(text))


def from_rows(rows: Iterable[tuple[str, np.ndarray]]) -> EmbeddingMatrix:
    """Convenience builder used by tests and the aligner."""
    words, vectors = [], []
    for word, vec in rows:
        words.append(word)
        vectors.append(np.asarray(vec, dtype=np.float32))
    vocab = Vocabulary.from_counts((w, len(words) - i) for i, w in enumerate(words))
    return EmbeddingMatrix(vocab, np.vstack(vectors))
