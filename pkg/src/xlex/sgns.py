"""Skip-gram training with negative sampling.

The trainer slides a window over the encoded corpus; for every (center,
context) pair inside a per-position window of random width it applies one
positive logistic update and ``negatives`` noise updates, with noise words
drawn from the unigram distribution raised to a fixed exponent. Input
vectors start uniform in [-0.5/d, +0.5/d], context vectors at zero, and
only the input matrix is published.
"""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass, field

import numpy as np

from .corpus import TokenStream, Vocabulary
from .embedding import (
    MIN_LR,
    NOISE_ALPHA,
    SKIPGRAM,
    EmbeddingMatrix,
    TrainingConfig,
)
from .errors import XlexError
from .kernels import derive_seed, get_kernels


@dataclass(frozen=True)
class SgnsState:
    """Trainer internals: published input vectors, context (output) vectors,
    and the negative-sampling distribution."""

    input_vectors: np.ndarray = field(repr=False)
    output_vectors: np.ndarray = field(repr=False)
    noise_probs: np.ndarray = field(repr=False)


def noise_distribution(vocab: Vocabulary, alpha: float = NOISE_ALPHA) -> np.ndarray:
    """p(w) proportional to count(w)**alpha; alpha=0 gives uniform."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if len(vocab) == 0:
        raise ValueError("empty vocabulary")
    weights = np.asarray(vocab.counts, dtype=np.float64) ** alpha
    return weights / weights.sum()


def _noise_cdf(probs: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0  # close the last bucket exactly
    return cdf


def _sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -30.0, 30.0)))


def pair_loss(
    center: np.ndarray,
    context: np.ndarray,
    negatives: np.ndarray | list | tuple = (),
) -> tuple[float, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Negative-sampling loss for one pair and its exact gradients.

    loss = -log sigmoid(center.context) - sum_k log sigmoid(-center.neg_k),
    with dot products clamped to +-30 before exponentiation. Computed in
    float64. Returns (loss, (grad_center, grad_context, grad_negatives)).
    """
    c = np.asarray(center, dtype=np.float64)
    x = np.asarray(context, dtype=np.float64)
    negs = np.asarray(negatives, dtype=np.float64).reshape(-1, c.shape[0])
    if x.shape != c.shape:
        raise ValueError(f"dimension mismatch {c.shape} vs {x.shape}")
    s_pos = _sigmoid(c @ x)
    s_neg = _sigmoid(negs @ c)  # sigma(c.n_k)
    loss = -np.log(s_pos) - np.sum(np.log1p(-s_neg))  # log(1-sigma(z)) = log sigma(-z)
    g_center = (s_pos - 1.0) * x + s_neg @ negs
    g_context = (s_pos - 1.0) * c
    g_negs = s_neg[:, None] * c[None, :]
    return float(loss), (g_center, g_context, g_negs)


def _uniform_init(rows: int, dim: int, seed: int) -> np.ndarray:
    """Input-vector init, uniform in [-0.5/dim, +0.5/dim], seeded."""
    rng = np.random.default_rng(np.random.PCG64(seed))
    return ((rng.random((rows, dim)) - 0.5) / dim).astype(np.float32)


def _keep_table(vocab: Vocabulary, threshold: float) -> np.ndarray:
    """Per-word keep probability for frequent-word subsampling."""
    if threshold <= 0:
        return np.empty(0, dtype=np.float64)
    counts = np.asarray(vocab.counts, dtype=np.float64)
    freq = counts / counts.sum()
    ratio = freq / threshold
    keep = (np.sqrt(ratio) + 1.0) / ratio
    return np.minimum(keep, 1.0)


def _sentence_shards(n_sentences: int, shards: int) -> list[tuple[int, int]]:
    bounds = np.linspace(0, n_sentences, shards + 1).astype(np.int64)
    return [(int(bounds[i]), int(bounds[i + 1])) for i in range(shards)]


def _run_pass(pass_fn, fixed_args: tuple, n_sentences: int, threads: int, seeds):
    if threads <= 1:
        pass_fn(*fixed_args[:2], 0, n_sentences, *fixed_args[2:], seeds[0])
        return
    workers = []
    for shard, (lo, hi) in enumerate(_sentence_shards(n_sentences, threads)):
        args = (*fixed_args[:2], lo, hi, *fixed_args[2:], seeds[shard])
        workers.append(threading.Thread(target=pass_fn, args=args))
    for w in workers:
        w.start()
    for w in workers:
        w.join()


def _resolve_threads(threads: int, backend_name: str) -> int:
    if threads > 1 and backend_name == "numpy":
        warnings.warn("numpy backend trains single-threaded; ignoring threads>1")
        return 1
    return max(1, threads)


def train(
    stream: TokenStream,
    vocab: Vocabulary,
    config: TrainingConfig,
    *,
    threads: int = 1,
    backend: str | None = None,
    return_state: bool = False,
):
    """Train skip-gram vectors over an encoded corpus.

    Single-threaded runs are bit-deterministic for a fixed seed and backend.
    With threads > 1 (numba backend only) updates race hogwild-style and
    results vary run to run. ``return_state`` additionally yields the
    SgnsState with the context vectors.
    """
    if config.mode != SKIPGRAM:
        raise ValueError(f"sgns.train requires mode={SKIPGRAM!r}, got {config.mode!r}")
    if len(stream) == 0:
        raise XlexError("cannot train on an empty token stream")
    from .kernels import default_backend

    backend_name = backend or default_backend()
    kernels = get_kernels(backend_name)
    threads = _resolve_threads(threads, backend_name)

    probs = noise_distribution(vocab)
    cdf = _noise_cdf(probs)
    keep_tab = _keep_table(vocab, config.subsample)
    syn0 = _uniform_init(len(vocab), config.dim, config.seed)
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
            syn0,
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
        _run_pass(kernels.sgns_pass, fixed, stream.n_sentences, threads, seeds)

    matrix = EmbeddingMatrix(vocab, syn0)
    if return_state:
        return matrix, SgnsState(syn0, syn1, probs)
    return matrix
