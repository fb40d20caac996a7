"""Intrinsic evaluation against human word-similarity datasets.

A dataset is a three-column file (word1, word2, human score; tab- or
comma-separated, optional header). For each pair present in the embedding
vocabulary the model score is the cosine of the stored vectors, and the
quality metric is the Spearman rank correlation between model and human
scores, reported as a percentage alongside pair coverage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .corpus import preprocess
from .embedding import EmbeddingMatrix
from .errors import FormatError, UndefinedCorrelationError


@dataclass(frozen=True)
class SimilarityDataset:
    """Human-scored word pairs, deduplicated on unordered pairs.

    ``rejected`` counts input rows dropped because a word did not survive
    preprocessing as a single token or the pair was a duplicate.
    """

    name: str
    pairs: tuple[tuple[str, str, float], ...]
    rejected: int = 0

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class EvalReport:
    """Coverage and Spearman for one (model, dataset) combination.

    Percentages follow the usual reporting convention (0..100 coverage,
    -100..100 correlation). ``spearman_rho_percent`` is None when the
    correlation is undefined, with the reason in ``error``.
    """

    model_id: str
    dataset: str
    coverage_percent: float
    spearman_rho_percent: float | None
    pairs_total: int
    pairs_covered: int
    word_coverage_percent: float = 0.0  # unique in-vocabulary words
    pairs_rejected: int = 0
    error: str | None = None


def _detect_delimiter(line: str) -> str:
    return "\t" if "\t" in line else ","


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_dataset(source: IO[str] | str | Path, name: str | None = None) -> SimilarityDataset:
    """Parse a three-column similarity file.

    A first line whose third field is not numeric is treated as a header.
    Words go through corpus preprocessing and must come out as exactly one
    token; rows that fail (or repeat an unordered pair) are counted as
    rejected rather than fatal.
    """
    own = isinstance(source, (str, Path))
    if name is None:
        name = Path(source).stem if own else "dataset"
    f: IO[str] = open(source, encoding="utf-8") if own else source  # type: ignore[assignment]
    try:
        pairs: list[tuple[str, str, float]] = []
        seen: set[frozenset[str]] = set()
        rejected = 0
        delimiter = None
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            if delimiter is None:
                delimiter = _detect_delimiter(line)
            fields = [part.strip() for part in line.split(delimiter)]
            if len(fields) != 3:
                raise FormatError(
                    f"expected 3 fields, got {len(fields)}", lineno
                )
            if not _is_number(fields[2]):
                if lineno == 1 and not pairs:
                    continue  # header row
                raise FormatError(f"non-numeric score {fields[2]!r}", lineno)
            score = float(fields[2])
            if not math.isfinite(score):
                raise FormatError(f"non-finite score {fields[2]!r}", lineno)
            tokens1 = preprocess(fields[0])
            tokens2 = preprocess(fields[1])
            if len(tokens1) != 1 or len(tokens2) != 1:
                rejected += 1
                continue
            key = frozenset((tokens1[0], tokens2[0]))
            if key in seen:
                rejected += 1
                continue
            seen.add(key)
            pairs.append((tokens1[0], tokens2[0], score))
        return SimilarityDataset(name, tuple(pairs), rejected)
    finally:
        if own:
            f.close()


def save_dataset(dataset: SimilarityDataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for w1, w2, score in dataset.pairs:
            f.write(f"{w1}\t{w2}\t{score:g}\n")


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def pair_scores(
    m: EmbeddingMatrix, d: SimilarityDataset
) -> list[tuple[tuple[str, str], float, float]]:
    """(pair, model cosine, human score) for every covered pair."""
    return cross_pair_scores(m, m, d)


def cross_pair_scores(
    source: EmbeddingMatrix, target: EmbeddingMatrix, d: SimilarityDataset
) -> list[tuple[tuple[str, str], float, float]]:
    """Like pair_scores but word1 resolves in ``source``, word2 in ``target``."""
    out = []
    for w1, w2, human in d.pairs:
        i = source.vocab.index.get(w1)
        j = target.vocab.index.get(w2)
        if i is None or j is None:
            continue
        cos = _cosine(
            np.asarray(source.matrix[i], np.float64),
            np.asarray(target.matrix[j], np.float64),
        )
        out.append(((w1, w2), cos, human))
    return out


def _fractional_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(xs, ys) -> float:
    """Spearman rank correlation with fractional (average) ranks for ties."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be equal-length 1-D sequences")
    if len(x) < 2:
        raise UndefinedCorrelationError(
            f"need at least 2 points, got {len(x)}"
        )
    rx = _fractional_ranks(x)
    ry = _fractional_ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = math.sqrt(np.dot(dx, dx) * np.dot(dy, dy))
    if denom == 0.0:
        raise UndefinedCorrelationError("zero rank variance")
    return float(np.dot(dx, dy) / denom)


def _word_coverage(lookups: Iterable[tuple[str, bool]]) -> float:
    seen: dict[str, bool] = {}
    for word, covered in lookups:
        seen[word] = seen.get(word, False) or covered
    if not seen:
        return 0.0
    return 100.0 * sum(seen.values()) / len(seen)


def _build_report(
    model_id: str,
    d: SimilarityDataset,
    scored: list[tuple[tuple[str, str], float, float]],
    word_cov: float,
) -> EvalReport:
    covered = len(scored)
    total = len(d)
    coverage = 100.0 * covered / total if total else 0.0
    rho: float | None = None
    error: str | None = None
    try:
        rho = 100.0 * spearman(
            [s for _, s, _ in scored], [h for _, _, h in scored]
        )
    except UndefinedCorrelationError as exc:
        error = str(exc)
    return EvalReport(
        model_id=model_id,
        dataset=d.name,
        coverage_percent=coverage,
        spearman_rho_percent=rho,
        pairs_total=total,
        pairs_covered=covered,
        word_coverage_percent=word_cov,
        pairs_rejected=d.rejected,
        error=error,
    )


def evaluate(m: EmbeddingMatrix, d: SimilarityDataset, model_id: str = "model") -> EvalReport:
    """Coverage + Spearman of one embedding against one dataset."""
    scored = pair_scores(m, d)
    word_cov = _word_coverage(
        (w, w in m.vocab) for pair in d.pairs for w in pair[:2]
    )
    return _build_report(model_id, d, scored, word_cov)


def evaluate_cross(
    source: EmbeddingMatrix,
    target: EmbeddingMatrix,
    d: SimilarityDataset,
    model_id: str = "cross",
) -> EvalReport:
    """Cross-lingual variant: word1 in the source space, word2 in the target.

    Both matrices must already live in the common space (aligner output).
    """
    scored = cross_pair_scores(source, target, d)
    lookups = []
    for w1, w2, _ in d.pairs:
        lookups.append((f"src:{w1}", w1 in source.vocab))
        lookups.append((f"trg:{w2}", w2 in target.vocab))
    return _build_report(model_id, d, scored, _word_coverage(lookups))


def format_report_table(reports: list[EvalReport]) -> str:
    """Aligned plain-text table: model(dataset), coverage, Spearman.

    Datasets that had rows rejected during parsing get a footnote with the
    count.
    """
    rows = [("Model", "Coverage", "Spearman")]
    notes = []
    for r in reports:
        label = f"{r.model_id}({r.dataset})"
        if r.error is not None:
            rows.append((label, f"{r.coverage_percent:.2f}", f"error: {r.error}"))
        else:
            rows.append(
                (label, f"{r.coverage_percent:.2f}", f"{r.spearman_rho_percent:.2f}")
            )
        if r.pairs_rejected:
            notes.append(
                f"note: {label}: {r.pairs_rejected} row(s) rejected during parsing"
            )
    width0 = max(len(row[0]) for row in rows) + 2
    width1 = max(len(row[1]) for row in rows) + 2
    table = "\n".join(
        f"{row[0]:<{width0}}{row[1]:<{width1}}{row[2]}" for row in rows
    )
    if notes:
        table += "\n" + "\n".join(notes)
    return table


def format_report_lines(reports: list[EvalReport]) -> str:
    """Machine-readable "model<TAB>dataset<TAB>coverage<TAB>spearman" lines."""
    lines = []
    for r in reports:
        rho = "nan" if r.spearman_rho_percent is None else f"{r.spearman_rho_percent:.2f}"
        lines.append(f"{r.model_id}\t{r.dataset}\t{r.coverage_percent:.2f}\t{rho}")
    return "\n".join(lines)
