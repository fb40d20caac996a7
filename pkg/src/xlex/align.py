"""Unsupervised mapping of two embedding spaces into a common space.

No seed dictionary is required: both spaces are length/center normalized,
an initial dictionary is guessed by matching the rows of each space's
sorted intra-lingual similarity fingerprint, and a self-learning loop then
alternates between solving the optimal orthogonal map (Procrustes, via SVD)
for the current dictionary and re-inducing the dictionary from the mapped
spaces with CSLS scoring. Stochastic dictionary dropout with an annealed
keep probability lets the loop escape poor early matchings; induction is
deterministic by the time convergence is declared.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .embedding import EmbeddingMatrix
from .errors import (
    DegenerateVectorError,
    DimensionMismatchError,
    FormatError,
    ParameterError,
    XlexError,
)

# Row-chunk size for the big similarity products during induction.
_CHUNK = 2048


@dataclass(frozen=True)
class AlignmentConfig:
    """Self-learning parameters.

    ``keep_prob_start`` is the initial dictionary-induction keep
    probability; it doubles whenever the best objective stagnates for
    ``stagnation_interval`` iterations, and convergence can only be
    declared once it has reached 1 (deterministic induction).
    """

    csls_k: int = 10
    vocab_cutoff: int = 20_000
    max_iterations: int = 500
    convergence_tol: float = 1e-6
    keep_prob_start: float = 0.1
    stagnation_interval: int = 50
    orthogonal: bool = True
    advanced: bool = False  # whiten / reweight / de-whiten mapping steps
    seed: int = 1

    def __post_init__(self):
        if not (0.0 < self.keep_prob_start <= 1.0):
            raise ParameterError(
                f"keep_prob_start must be in (0, 1], got {self.keep_prob_start}"
            )
        if self.csls_k < 1:
            raise ParameterError(f"csls_k must be >= 1, got {self.csls_k}")
        if self.vocab_cutoff < 2:
            raise ParameterError(
                f"vocab_cutoff must be >= 2, got {self.vocab_cutoff}"
            )
        if self.max_iterations < 1:
            raise ParameterError("max_iterations must be positive")

    def with_(self, **kwargs) -> "AlignmentConfig":
        return replace(self, **kwargs)

    def as_dict(self) -> dict[str, object]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class AlignmentModel:
    """Result of an alignment run.

    ``w_source``/``w_target`` are d x d maps into the common space;
    ``objective`` is the mean cosine of the induced dictionary pairs under
    the final maps. ``converged`` is False when the loop hit
    max_iterations before stabilizing.
    """

    w_source: np.ndarray = field(repr=False)
    w_target: np.ndarray = field(repr=False)
    induced_dictionary: np.ndarray = field(repr=False)  # (n, 2) id pairs
    objective: float
    converged: bool
    iterations: int
    history: tuple[tuple[int, float, float], ...] = ()  # (iter, objective, keep)


def _unit_rows(m: np.ndarray, names=None) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1)
    bad = np.nonzero(norms == 0.0)[0]
    if bad.size:
        i = int(bad[0])
        raise DegenerateVectorError(names[i] if names is not None else f"row {i}")
    return m / norms[:, None]


def normalize(m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Unit-length rows, mean-center each dimension, unit-length again."""
    out = normalize_array(np.asarray(m.matrix, dtype=np.float64), m.vocab.words)
    return EmbeddingMatrix(m.vocab, out)


def normalize_array(matrix: np.ndarray, names=None) -> np.ndarray:
    out = _unit_rows(np.asarray(matrix, dtype=np.float64), names)
    out = out - out.mean(axis=0)
    return _unit_rows(out, names)


def _topk_mean_rows(scores: np.ndarray, k: int) -> np.ndarray:
    """Mean of the k largest entries per row, summed in descending order."""
    vals = np.partition(scores, scores.shape[1] - k, axis=1)[:, -k:]
    return np.sort(vals, axis=1)[:, ::-1].mean(axis=1)


def _csls_adjust(sim: np.ndarray, k: int) -> np.ndarray:
    r_rows = _topk_mean_rows(sim, k)
    r_cols = _topk_mean_rows(sim.T, k)
    return 2.0 * sim - r_rows[:, None] - r_cols[None, :]


def csls(sim: np.ndarray, k: int) -> np.ndarray:
    """CSLS-adjusted scores: 2*sim - r_rows - r_cols.

    ``r_rows[i]`` is the mean of row i's k largest similarities and
    ``r_cols[j]`` likewise per column; subtracting both penalizes hub
    vectors that are indiscriminately close to everything.
    """
    sim = np.asarray(sim, dtype=np.float64)
    if sim.ndim != 2:
        raise ParameterError("similarity matrix must be 2-D")
    if k < 1 or k > min(sim.shape):
        raise ParameterError(
            f"k={k} outside [1, {min(sim.shape)}] for shape {sim.shape}"
        )
    return _csls_adjust(sim, k)


def _svd_flip(u: np.ndarray, vt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Fix the sign gauge: largest-|.| component of each left vector positive.
    signs = np.sign(u[np.argmax(np.abs(u), axis=0), np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, vt * signs[:, None]


def solve_mapping(
    x: np.ndarray,
    z: np.ndarray,
    dictionary: np.ndarray,
    orthogonal: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Optimal map of x onto z for the given (src, trg) id pairs.

    Orthogonal mode returns ``w_source = U V^T`` from the SVD of the
    cross-covariance of the dictionary rows (and an identity target map);
    this maximizes the summed cosine over the dictionary among all
    orthogonal maps. Unconstrained mode solves the least-squares map.
    """
    pairs = np.asarray(dictionary)
    if pairs.size == 0:
        raise XlexError("cannot solve a mapping from an empty dictionary")
    if x.shape[1] != z.shape[1]:
        raise DimensionMismatchError(x.shape[1], z.shape[1])
    dim = x.shape[1]
    if pairs.shape[0] < dim:
        warnings.warn(
            f"dictionary has {pairs.shape[0]} pairs for dimension {dim}; "
            "the mapping is underdetermined"
        )
    xd = x[pairs[:, 0]]
    zd = z[pairs[:, 1]]
    if orthogonal:
        u, _, vt = np.linalg.svd(xd.T @ zd)
        u, vt = _svd_flip(u, vt)
        return u @ vt, np.eye(dim)
    w, *_ = np.linalg.lstsq(xd, zd, rcond=None)
    return w, np.eye(dim)


def _whitener(m: np.ndarray) -> np.ndarray:
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return vt.T @ np.diag(1.0 / s) @ vt


def solve_advanced_mapping(
    x: np.ndarray,
    z: np.ndarray,
    dictionary: np.ndarray,
    reweight: float = 0.5,
) -> tuple[np.ndarray, np.ndarray]:
    """Whiten both spaces, map orthogonally, re-weight by the singular
    values, then de-whiten each side in its own space.

    Returns the composed (non-orthogonal) d x d transforms.
    """
    pairs = np.asarray(dictionary)
    if pairs.size == 0:
        raise XlexError("cannot solve a mapping from an empty dictionary")
    xd = x[pairs[:, 0]]
    zd = z[pairs[:, 1]]
    w1x = _whitener(xd)
    w1z = _whitener(zd)
    u, s, vt = np.linalg.svd((xd @ w1x).T @ (zd @ w1z))
    u, vt = _svd_flip(u, vt)
    wx2, wz2 = u, vt.T
    scale = np.diag(s**reweight)
    dewhiten_x = wx2.T @ np.linalg.inv(w1x) @ wx2
    dewhiten_z = wz2.T @ np.linalg.inv(w1z) @ wz2
    w_source = w1x @ wx2 @ scale @ dewhiten_x
    w_target = w1z @ wz2 @ scale @ dewhiten_z
    return w_source, w_target


# Dense induction is used while cs*ct stays below this many cells; larger
# problems stream the similarity matrix in row chunks.
_DENSE_CELLS = 1 << 24


def _argmax_dropout(
    scores: np.ndarray, keep_prob: float, rng: np.random.Generator | None
) -> np.ndarray:
    """Row argmax where each cell survives with probability keep_prob.

    Mutates ``scores``. Rows that lose every candidate fall back to their
    undropped argmax.
    """
    if keep_prob >= 1.0:
        return scores.argmax(axis=1)
    assert rng is not None
    threshold = np.uint32(int(keep_prob * (1 << 32)))
    draws = rng.integers(0, 1 << 32, size=scores.shape, dtype=np.uint32)
    dropped = draws >= threshold
    dead = dropped.all(axis=1)
    saved = scores[dead].argmax(axis=1) if dead.any() else None
    scores[dropped] = -np.inf
    arg = scores.argmax(axis=1)
    if saved is not None:
        arg[dead] = saved
    return arg


def _knn_means_chunked(
    a: np.ndarray, b: np.ndarray, k: int, chunk: int = _CHUNK
) -> tuple[np.ndarray, np.ndarray]:
    """Per-row (mean of k nearest, max) similarity of a's rows to b's rows."""
    means = np.empty(a.shape[0])
    maxima = np.empty(a.shape[0])
    for lo in range(0, a.shape[0], chunk):
        hi = min(lo + chunk, a.shape[0])
        sim = a[lo:hi] @ b.T
        means[lo:hi] = _topk_mean_rows(sim, k)
        maxima[lo:hi] = sim.max(axis=1)
    return means, maxima


def _csls_argmax_chunked(
    queries: np.ndarray,
    targets: np.ndarray,
    r_q: np.ndarray,
    r_t: np.ndarray,
    keep_prob: float,
    rng: np.random.Generator | None,
    chunk: int = _CHUNK,
) -> np.ndarray:
    out = np.empty(queries.shape[0], dtype=np.int64)
    for lo in range(0, queries.shape[0], chunk):
        hi = min(lo + chunk, queries.shape[0])
        scores = 2.0 * (queries[lo:hi] @ targets.T)
        scores -= r_q[lo:hi, None]
        scores -= r_t[None, :]
        out[lo:hi] = _argmax_dropout(scores, keep_prob, rng)
    return out


def _induce(
    x: np.ndarray,
    z: np.ndarray,
    k: int,
    keep_prob: float,
    rng: np.random.Generator | None,
) -> tuple[np.ndarray, float]:
    """Bidirectional CSLS-argmax pairs plus the dropout-free objective.

    The returned objective is the mean of the per-row maximum cosines in
    both directions; unlike the induced pairs it does not depend on the
    dropout draws, which makes it a stable convergence signal.
    """
    cs, ct = x.shape[0], z.shape[0]
    if cs * ct <= _DENSE_CELLS:
        sim = x @ z.T
        objective = (
            float(sim.max(axis=1).mean(dtype=np.float64))
            + float(sim.max(axis=0).mean(dtype=np.float64))
        ) / 2.0
        scores = _csls_adjust(sim, k)
        scores_t = np.ascontiguousarray(scores.T)
        fwd = _argmax_dropout(scores, keep_prob, rng)
        bwd = _argmax_dropout(scores_t, keep_prob, rng)
    else:
        r_src, max_fwd = _knn_means_chunked(x, z, k)
        r_trg, max_bwd = _knn_means_chunked(z, x, k)
        objective = (
            float(max_fwd.mean(dtype=np.float64))
            + float(max_bwd.mean(dtype=np.float64))
        ) / 2.0
        fwd = _csls_argmax_chunked(x, z, r_src, r_trg, keep_prob, rng)
        bwd = _csls_argmax_chunked(z, x, r_trg, r_src, keep_prob, rng)
    src = np.concatenate([np.arange(cs, dtype=np.int64), bwd])
    trg = np.concatenate([fwd, np.arange(ct, dtype=np.int64)])
    return np.stack([src, trg], axis=1), objective


def induce_dictionary(
    mapped_x: np.ndarray,
    mapped_z: np.ndarray,
    config: AlignmentConfig,
    *,
    keep_prob: float = 1.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """CSLS-argmax dictionary over the frequency cutoff, both directions.

    Forward pairs (every source word with its best target) come first,
    then backward pairs. With keep_prob < 1, each candidate cell survives
    with that probability (seeded), which is what lets self-learning jump
    out of locally-consistent but wrong matchings.
    """
    cs = min(config.vocab_cutoff, mapped_x.shape[0])
    ct = min(config.vocab_cutoff, mapped_z.shape[0])
    k = min(config.csls_k, cs, ct)
    if keep_prob < 1.0 and rng is None:
        rng = np.random.default_rng(np.random.PCG64(config.seed))
    pairs, _ = _induce(mapped_x[:cs], mapped_z[:ct], k, keep_prob, rng)
    return pairs


def csls_translate(mapped_x: np.ndarray, mapped_z: np.ndarray, k: int = 10) -> np.ndarray:
    """Best CSLS target index for every source row (retrieval helper)."""
    k = min(k, mapped_x.shape[0], mapped_z.shape[0])
    if mapped_x.shape[0] * mapped_z.shape[0] <= _DENSE_CELLS:
        return _csls_adjust(mapped_x @ mapped_z.T, k).argmax(axis=1)
    r_src, _ = _knn_means_chunked(mapped_x, mapped_z, k)
    r_trg, _ = _knn_means_chunked(mapped_z, mapped_x, k)
    return _csls_argmax_chunked(mapped_x, mapped_z, r_src, r_trg, 1.0, None)


def mean_pair_cosine(xw: np.ndarray, zw: np.ndarray, pairs: np.ndarray) -> float:
    return float(
        np.einsum("ij,ij->i", xw[pairs[:, 0]], zw[pairs[:, 1]]).mean()
    )


def _fingerprint(m: np.ndarray) -> np.ndarray:
    """Sorted intra-lingual similarity rows, renormalized.

    The square root of the m m^T similarity matrix (via SVD), each row
    sorted ascending; rows then go through the unit/center/unit chain so
    they can be matched across languages by plain inner products.
    """
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    sim = (u * s) @ u.T
    sim.sort(axis=1)
    return normalize_array(sim)


def _unsupervised_init(x: np.ndarray, z: np.ndarray, config: AlignmentConfig) -> np.ndarray:
    n = min(x.shape[0], z.shape[0])
    fx = _fingerprint(x[:n])
    fz = _fingerprint(z[:n])
    scores = csls(fx @ fz.T, min(config.csls_k, n))
    fwd = scores.argmax(axis=1)
    bwd = scores.argmax(axis=0)
    src = np.concatenate([np.arange(n, dtype=np.int64), bwd])
    trg = np.concatenate([fwd, np.arange(n, dtype=np.int64)])
    return np.stack([src, trg], axis=1)


def align(
    source: EmbeddingMatrix,
    target: EmbeddingMatrix,
    config: AlignmentConfig | None = None,
    *,
    seed_dictionary: list[tuple[str, str]] | None = None,
) -> AlignmentModel:
    """Map two monolingual spaces into a common space with no supervision.

    ``seed_dictionary`` (word pairs) bypasses the unsupervised
    initialization; everything after that is identical.
    """
    config = config or AlignmentConfig()
    if source.dim != target.dim:
        raise DimensionMismatchError(source.dim, target.dim)
    if len(source) < 2 or len(target) < 2:
        raise XlexError("alignment needs at least 2 words in each vocabulary")
    x = normalize_array(np.asarray(source.matrix, np.float64), source.vocab.words)
    z = normalize_array(np.asarray(target.matrix, np.float64), target.vocab.words)
    cs = min(config.vocab_cutoff, x.shape[0])
    ct = min(config.vocab_cutoff, z.shape[0])
    rng = np.random.default_rng(np.random.PCG64(config.seed))

    if seed_dictionary is not None:
        pairs = []
        for sw, tw in seed_dictionary:
            si = source.vocab.index.get(sw)
            ti = target.vocab.index.get(tw)
            if si is not None and ti is not None and si < cs and ti < ct:
                pairs.append((si, ti))
        if not pairs:
            raise XlexError("seed dictionary has no in-vocabulary pairs")
        dictionary = np.asarray(pairs, dtype=np.int64)
    else:
        dictionary = _unsupervised_init(x[:cs], z[:ct], config)

    solver = solve_advanced_mapping if config.advanced else (
        lambda a, b, d: solve_mapping(a, b, d, orthogonal=config.orthogonal)
    )

    k = min(config.csls_k, cs, ct)
    keep = config.keep_prob_start
    best = -np.inf
    last_improvement = 0
    converged = False
    history: list[tuple[int, float, float]] = []
    iteration = 0
    for iteration in range(1, config.max_iterations + 1):
        w_src, w_trg = solver(x, z, dictionary)
        # induction runs in float32: argmax decisions are insensitive to the
        # low bits and the products dominate the loop's cost
        xw = (x[:cs] @ w_src).astype(np.float32)
        zw = (z[:ct] @ w_trg).astype(np.float32)
        pairs, objective = _induce(xw, zw, k, keep, rng)
        history.append((iteration, objective, keep))
        improved = best == -np.inf or (
            objective - best >= config.convergence_tol * max(1.0, abs(best))
        )
        if improved:
            best = objective
            last_improvement = iteration
        if keep >= 1.0 and np.array_equal(pairs, dictionary):
            # deterministic induction reproduced its own input: fixed point
            converged = True
            break
        dictionary = pairs
        if iteration - last_improvement >= config.stagnation_interval:
            if keep >= 1.0:
                converged = True
                break
            keep = min(1.0, keep * 2.0)
            last_improvement = iteration

    w_src, w_trg = solver(x, z, dictionary)
    objective = mean_pair_cosine(x[:cs] @ w_src, z[:ct] @ w_trg, dictionary)
    return AlignmentModel(
        w_source=w_src,
        w_target=w_trg,
        induced_dictionary=dictionary,
        objective=objective,
        converged=converged,
        iterations=iteration,
        history=tuple(history),
    )


def project(m: EmbeddingMatrix, w: np.ndarray) -> EmbeddingMatrix:
    """Apply a learned transform to every row; vocabulary unchanged."""
    w = np.asarray(w)
    if w.shape != (m.dim, m.dim):
        raise DimensionMismatchError(m.dim, w.shape[0])
    return EmbeddingMatrix(m.vocab, np.asarray(m.matrix) @ w)


def save_transform(w: np.ndarray, path) -> None:
    """Text format: header "d d", then d whitespace-separated rows."""
    w = np.asarray(w, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{w.shape[0]} {w.shape[1]}\n")
        for row in w:
            f.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_transform(path) -> np.ndarray:
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise FormatError("transform header must be 'rows cols'", 1)
        rows, cols = int(header[0]), int(header[1])
        out = np.empty((rows, cols), dtype=np.float64)
        for i in range(rows):
            parts = f.readline().split()
            if len(parts) != cols:
                raise FormatError(
                    f"expected {cols} values, got {len(parts)}", i + 2
                )
            out[i] = [float(v) for v in parts]
    return out


def save_dictionary(
    pairs: np.ndarray, source_vocab, target_vocab, path
) -> None:
    """One "source_word<TAB>target_word" line per induced pair."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for si, ti in np.asarray(pairs):
            f.write(f"{source_vocab.words[si]}\t{target_vocab.words[ti]}\n")
