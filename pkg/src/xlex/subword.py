"""Subword skip-gram: words composed from character n-gram vectors.

Each word is wrapped in angle brackets and decomposed into its character
n-grams (lengths nmin..nmax, Unicode scalar values, never bytes); the full
bracketed form is reserved for the whole-word unit. N-gram units share a
fixed pool of hash buckets (stable 32-bit FNV-1a), so related surface forms
share parameters. A word's vector is the mean of its unit vectors, and
training gradients are split equally across the units.
"""

from __future__ import annotations

import numpy as np

from .corpus import TokenStream, Vocabulary
from .embedding import MIN_LR, SUBWORD_SKIPGRAM, EmbeddingMatrix, TrainingConfig
from .errors import RepresentationUnavailableError, XlexError
from .kernels import derive_seed, get_kernels
from .sgns import (
    _keep_table,
    _noise_cdf,
    _resolve_threads,
    _run_pass,
    _uniform_init,
    noise_distribution,
    pair_loss,
)

_FNV_OFFSET = 2166136261
_FNV_PRIME = 16777619
_U32 = 0xFFFFFFFF


def extract_ngrams(word: str, nmin: int, nmax: int) -> list[str]:
    """Character n-grams of the bracketed word, shortest first.

    The word is wrapped as ``<word>``; substrings of each length from nmin
    to nmax are emitted left to right, except the full bracketed form,
    which is the whole-word unit and never an n-gram.
    """
    if not word:
        raise ValueError("cannot extract n-grams from an empty word")
    wrapped = f"<{word}>"
    length = len(wrapped)
    grams = []
    for n in range(nmin, min(nmax, length) + 1):
        if n == length:
            continue  # full bracketed form = whole-word unit
        for i in range(length - n + 1):
            grams.append(wrapped[i : i + n])
    return grams


def hash_ngram(ngram: str, buckets: int) -> int:
    """Stable FNV-1a 32-bit hash of the UTF-8 bytes, reduced mod buckets."""
    if buckets < 1:
        raise ValueError(f"buckets must be >= 1, got {buckets}")
    h = _FNV_OFFSET
    for byte in ngram.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _U32
    return h % buckets


class NgramIndex:
    """Per-word unit ids: the whole-word id first, then hashed n-gram buckets.

    Whole-word units occupy ids [0, |V|); n-gram buckets [|V|, |V|+buckets).
    The flat CSR layout (``unit_ids``/``offsets``) is what the training
    kernels consume.
    """

    def __init__(self, vocab: Vocabulary, nmin: int, nmax: int, buckets: int):
        if nmin > nmax or nmin < 1:
            raise ValueError(f"invalid n-gram bounds {nmin}..{nmax}")
        self.vocab = vocab
        self.nmin = nmin
        self.nmax = nmax
        self.buckets = buckets
        flat: list[int] = []
        offsets = np.empty(len(vocab) + 1, dtype=np.int64)
        offsets[0] = 0
        base = len(vocab)
        for wid, word in enumerate(vocab.words):
            flat.append(wid)
            for gram in extract_ngrams(word, nmin, nmax):
                flat.append(base + hash_ngram(gram, buckets))
            offsets[wid + 1] = len(flat)
        self.unit_ids = np.asarray(flat, dtype=np.int64)
        self.offsets = offsets

    @property
    def n_units(self) -> int:
        return len(self.vocab) + self.buckets

    def units(self, word_id: int) -> np.ndarray:
        return self.unit_ids[self.offsets[word_id] : self.offsets[word_id + 1]]

    def oov_units(self, word: str) -> np.ndarray:
        """Bucket ids for a word outside the vocabulary (n-grams only)."""
        grams = extract_ngrams(word, self.nmin, self.nmax)
        if not grams:
            raise RepresentationUnavailableError(
                f"no n-grams of length {self.nmin}..{self.nmax} for {word!r}"
            )
        base = len(self.vocab)
        return np.asarray(
            [base + hash_ngram(g, self.buckets) for g in grams], dtype=np.int64
        )


def word_vector(word: str, index: NgramIndex, unit_vectors: np.ndarray) -> np.ndarray:
    """Mean of the word's unit vectors (n-gram buckets only when OOV)."""
    if unit_vectors.shape[0] != index.n_units:
        raise ValueError(
            f"unit matrix has {unit_vectors.shape[0]} rows, expected {index.n_units}"
        )
    wid = index.vocab.index.get(word)
    units = index.units(wid) if wid is not None else index.oov_units(word)
    return unit_vectors[units].mean(axis=0)


def composed_pair_loss(
    unit_vectors: np.ndarray,
    context: np.ndarray,
    negatives: np.ndarray | list | tuple = (),
) -> tuple[float, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """pair_loss with the center composed as the mean of unit vectors.

    Returns (loss, (grad_units, grad_context, grad_negatives)); the center
    gradient is distributed equally over the K units (weight 1/K each).
    """
    units = np.asarray(unit_vectors, dtype=np.float64)
    if units.ndim != 2 or units.shape[0] < 1:
        raise ValueError("unit_vectors must be a nonempty K x d matrix")
    center = units.mean(axis=0)
    loss, (g_center, g_context, g_negs) = pair_loss(center, context, negatives)
    g_units = np.tile(g_center / units.shape[0], (units.shape[0], 1))
    return loss, (g_units, g_context, g_negs)


def compose_matrix(index: NgramIndex, unit_vectors: np.ndarray) -> np.ndarray:
    """Per-word composed vectors for the whole vocabulary, |V| x d."""
    n_words = len(index.vocab)
    dim = unit_vectors.shape[1]
    sums = np.zeros((n_words, dim), dtype=np.float64)
    word_of_unit = np.repeat(
        np.arange(n_words, dtype=np.int64), np.diff(index.offsets)
    )
    np.add.at(sums, word_of_unit, unit_vectors[index.unit_ids].astype(np.float64))
    counts = np.diff(index.offsets).astype(np.float64)
    return (sums / counts[:, None]).astype(np.float32)


def train(
    stream: TokenStream,
    vocab: Vocabulary,
    config: TrainingConfig,
    *,
    threads: int = 1,
    backend: str | None = None,
    return_units: bool = False,
):
    """Train the subword model; same loop contract as sgns.train.

    Returns the composed per-word EmbeddingMatrix; with ``return_units``
    also the (NgramIndex, unit matrix) pair for in-process OOV composition
    (unit vectors are never serialized).
    """
    if config.mode != SUBWORD_SKIPGRAM:
        raise ValueError(
            f"subword.train requires mode={SUBWORD_SKIPGRAM!r}, got {config.mode!r}"
        )
    if len(stream) == 0:
        raise XlexError("cannot train on an empty token stream")
    from .kernels import default_backend

    backend_name = backend or default_backend()
    kernels = get_kernels(backend_name)
    threads = _resolve_threads(threads, backend_name)

    index = NgramIndex(vocab, config.nmin, config.nmax, config.buckets)
    cdf = _noise_cdf(noise_distribution(vocab))
    keep_tab = _keep_table(vocab, config.subsample)
    syn_units = _uniform_init(index.n_units, config.dim, config.seed)
    syn1 = np.zeros((len(vocab), config.dim), dtype=np.float32)
    progress = np.zeros(1, dtype=np.int64)
    total = config.epochs * len(stream)

    for epoch in range(config.epochs):
        seeds = [
            np.uint64(derive_seed(config.seed, epoch, shard))
            for shard in range(threads)
        ]
        fixed = (
            stream.ids,
            stream.offsets,
            index.unit_ids,
            index.offsets,
            syn_units,
            syn1,
            cdf,
            keep_tab,
            config.window,
            config.negatives,
            config.initial_lr,
            MIN_LR,
            total,
            progress,
        )
        _run_pass(kernels.subword_pass, fixed, stream.n_sentences, threads, seeds)

    matrix = EmbeddingMatrix(vocab, compose_matrix(index, syn_units))
    if return_units:
        return matrix, (index, syn_units)
    return matrix
