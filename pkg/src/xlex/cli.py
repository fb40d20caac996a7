"""Command-line pipeline: stats -> train -> align -> eval.

Every run can be driven by a flat ``key = value`` config file
(``--config``); explicit flags override file values. Each stage writes a
manifest with the fully resolved configuration next to its outputs, and
rerunning a stage from its manifest in deterministic mode reproduces the
outputs byte for byte.

Exit codes: 0 success, 2 I/O (missing/unreadable files), 3 format errors,
4 dimension mismatch, 1 any other operation error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import embedding as embedding_mod
from . import evaluation as eval_mod
from . import sgns as sgns_mod
from . import subword as subword_mod
from .align import (
    AlignmentConfig,
    AlignmentModel,
    align as run_alignment,
    csls_translate,
    normalize as normalize_embedding,
    normalize_array,
    save_dictionary,
    save_transform,
)
from .errors import DimensionMismatchError, FormatError, XlexError
from .kernels import ENV_BACKEND, default_backend

ENV_THREADS = "XLEX_THREADS"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_IO = 2
EXIT_FORMAT = 3
EXIT_DIMENSION = 4


def _read_config(path: str | Path) -> dict[str, str]:
    cfg: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"expected 'key = value', got {raw!r}", lineno)
            key, value = line.split("=", 1)
            cfg[key.strip()] = value.strip()
    return cfg


def _write_config(path: Path, values: dict[str, object]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for key in sorted(values):
            value = values[key]
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, (list, tuple)):
                value = "\t".join(str(v) for v in value)
            f.write(f"{key} = {value}\n")


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


class _Settings:
    """Merge of CLI flags (highest priority), config file, and defaults."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.cfg: dict[str, str] = {}
        if getattr(args, "config", None):
            self.cfg = _read_config(args.config)

    def get(self, key: str, cast, default):
        cli_value = getattr(self.args, key, None)
        if cli_value is not None:
            return cli_value
        if key in self.cfg:
            raw = self.cfg[key]
            if cast is bool:
                return _parse_bool(raw)
            return cast(raw)
        return default

    def get_paths(self, key: str) -> list[str]:
        cli_value = getattr(self.args, key, None)
        if cli_value:
            return list(cli_value) if isinstance(cli_value, (list, tuple)) else [cli_value]
        if key in self.cfg and self.cfg[key]:
            return self.cfg[key].split("\t")
        return []


def _resolve_threads(settings: _Settings, deterministic: bool) -> int:
    if deterministic:
        return 1
    threads = settings.get("threads", int, None)
    if threads is not None:
        return max(1, threads)
    env = os.environ.get(ENV_THREADS, "").strip()
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _resolve_backend(settings: _Settings) -> str:
    backend = settings.get("backend", str, None)
    if backend is None:
        backend = default_backend()
    if backend not in ("numba", "numpy"):
        raise XlexError(f"unknown backend {backend!r} (set --backend or {ENV_BACKEND})")
    return backend


# ---------------------------------------------------------------- stats


def cmd_stats(args: argparse.Namespace) -> int:
    settings = _Settings(args)
    paths = settings.get_paths("corpus")
    if not paths:
        raise XlexError("stats needs at least one corpus path")
    results = []
    for path in paths:
        if not Path(path).exists():
            raise FileNotFoundError(path)
        tokens, unique = corpus_mod.stats(corpus_mod.RawCorpus(path))
        results.append((path, tokens, unique))
        print(f"{path}: tokens={tokens} unique={unique}")
    # corpus-statistics table, corpora as columns
    names = [Path(p).name for p, _, _ in results]
    widths = [
        max(len(names[i]), len(str(results[i][1])), len(str(results[i][2]))) + 2
        for i in range(len(results))
    ]
    label_width = len("Number of tokens:") + 1
    header = " " * label_width + "".join(
        f"{names[i]:<{widths[i]}}" for i in range(len(results))
    )
    row_tokens = f"{'Number of tokens:':<{label_width}}" + "".join(
        f"{results[i][1]:<{widths[i]}}" for i in range(len(results))
    )
    row_unique = f"{'Unique words:':<{label_width}}" + "".join(
        f"{results[i][2]:<{widths[i]}}" for i in range(len(results))
    )
    print(header.rstrip())
    print(row_tokens.rstrip())
    print(row_unique.rstrip())
    return EXIT_OK


# ---------------------------------------------------------------- train


def _training_config(settings: _Settings) -> embedding_mod.TrainingConfig:
    lr = settings.get("lr", float, None)
    if lr is None:
        lr = settings.get("initial_lr", float, 0.025)
    return embedding_mod.TrainingConfig(
        mode=settings.get("mode", str, embedding_mod.SKIPGRAM),
        dim=settings.get("dim", int, 300),
        window=settings.get("window", int, 4),
        min_count=settings.get("min_count", int, 1),
        epochs=settings.get("epochs", int, 100),
        negatives=settings.get("negatives", int, 5),
        initial_lr=lr,
        seed=settings.get("seed", int, 1),
        nmin=settings.get("nmin", int, 3),
        nmax=settings.get("nmax", int, 6),
        buckets=settings.get("buckets", int, 2_000_000),
        subsample=settings.get("subsample", float, 0.0),
    )


def cmd_train(args: argparse.Namespace) -> int:
    settings = _Settings(args)
    corpus_paths = settings.get_paths("corpus")
    if not corpus_paths:
        raise XlexError("train needs a corpus path")
    for path in corpus_paths:
        if not Path(path).exists():
            raise FileNotFoundError(path)
    out_dir = Path(settings.get("out", str, "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    deterministic = bool(settings.get("deterministic", bool, False))
    threads = _resolve_threads(settings, deterministic)
    backend = _resolve_backend(settings)
    config = _training_config(settings)

    raw = corpus_mod.RawCorpus(*corpus_paths)
    vocab = corpus_mod.build_vocabulary(raw, config.min_count)
    stream = corpus_mod.encode(raw, vocab)
    if config.mode == embedding_mod.SKIPGRAM:
        matrix = sgns_mod.train(
            stream, vocab, config, threads=threads, backend=backend
        )
        units = None
    else:
        matrix, units = subword_mod.train(
            stream, vocab, config, threads=threads, backend=backend,
            return_units=True,
        )

    emb_path = out_dir / "embeddings.txt"
    vocab_path = out_dir / "vocab.tsv"
    embedding_mod.save_text(matrix, emb_path)
    corpus_mod.save_vocabulary(vocab, vocab_path)

    oov_words_path = settings.get("compose_oov", str, None)
    if oov_words_path:
        if units is None:
            raise XlexError("--compose-oov requires --mode subword-skipgram")
        index, unit_vectors = units
        oov_out = Path(settings.get("oov_out", str, str(out_dir / "oov.txt")))
        rows = []
        with open(oov_words_path, encoding="utf-8") as f:
            for line in f:
                word = line.strip()
                if word:
                    rows.append(
                        (word, subword_mod.word_vector(word, index, unit_vectors))
                    )
        embedding_mod.save_text(embedding_mod.from_rows(rows), oov_out)
        print(f"composed {len(rows)} words -> {oov_out}")

    manifest = {
        "command": "train",
        "corpus": corpus_paths,
        "out": str(out_dir),
        "deterministic": deterministic,
        "threads": threads,
        "backend": backend,
        **config.as_dict(),
    }
    _write_config(out_dir / "train_manifest.cfg", manifest)
    print(f"trained {len(vocab)} words (dim {config.dim}) -> {emb_path}")
    return EXIT_OK


# ---------------------------------------------------------------- align


def _alignment_config(settings: _Settings) -> AlignmentConfig:
    return AlignmentConfig(
        csls_k=settings.get("csls_k", int, 10),
        vocab_cutoff=settings.get("vocab_cutoff", int, 20_000),
        max_iterations=settings.get("max_iterations", int, 500),
        convergence_tol=settings.get("convergence_tol", float, 1e-6),
        keep_prob_start=settings.get("keep_prob_start", float, 0.1),
        stagnation_interval=settings.get("stagnation_interval", int, 50),
        orthogonal=bool(settings.get("orthogonal", bool, True)),
        advanced=bool(settings.get("advanced_mapping", bool, False)),
        seed=settings.get("seed", int, 1),
    )


def _identical_word_p_at_1(
    source: embedding_mod.EmbeddingMatrix,
    target: embedding_mod.EmbeddingMatrix,
    model: AlignmentModel,
    config: AlignmentConfig,
) -> tuple[float, int] | None:
    """Retrieval accuracy where the gold translation is the same string."""
    cs = min(config.vocab_cutoff, len(source))
    ct = min(config.vocab_cutoff, len(target))
    trg_index = {w: i for i, w in enumerate(target.vocab.words[:ct])}
    queries = [
        (i, trg_index[w])
        for i, w in enumerate(source.vocab.words[:cs])
        if w in trg_index
    ]
    if not queries:
        return None
    xw = normalize_array(
        np.asarray(source.matrix[:cs], np.float64)
    ) @ model.w_source
    zw = normalize_array(
        np.asarray(target.matrix[:ct], np.float64)
    ) @ model.w_target
    best = csls_translate(xw, zw, k=config.csls_k)
    hits = sum(1 for i, gold in queries if best[i] == gold)
    return 100.0 * hits / len(queries), len(queries)


def cmd_align(args: argparse.Namespace) -> int:
    settings = _Settings(args)
    source_path = settings.get("source", str, None)
    target_path = settings.get("target", str, None)
    if not source_path or not target_path:
        raise XlexError("align needs source and target embedding paths")
    for path in (source_path, target_path):
        if not Path(path).exists():
            raise FileNotFoundError(path)
    out_dir = Path(settings.get("out", str, "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    config = _alignment_config(settings)

    source = embedding_mod.load_text(source_path)
    target = embedding_mod.load_text(target_path)
    model = run_alignment(source, target, config)

    # mapped embeddings live in the common space; normalization is part of
    # the mapping chain, so the projected matrices are normalize(m) @ W
    src_mapped = embedding_mod.EmbeddingMatrix(
        source.vocab, normalize_embedding(source).matrix @ model.w_source
    )
    trg_mapped = embedding_mod.EmbeddingMatrix(
        target.vocab, normalize_embedding(target).matrix @ model.w_target
    )

    save_transform(model.w_source, out_dir / "w_source.txt")
    save_transform(model.w_target, out_dir / "w_target.txt")
    embedding_mod.save_text(src_mapped, out_dir / "src_mapped.txt")
    embedding_mod.save_text(trg_mapped, out_dir / "trg_mapped.txt")
    save_dictionary(
        model.induced_dictionary, source.vocab, target.vocab,
        out_dir / "dictionary.tsv",
    )

    log_lines = [
        f"iter={it} objective={obj:.6f} keep_prob={keep:g}"
        for it, obj, keep in model.history
    ]
    summary = (
        f"converged={'true' if model.converged else 'false'} "
        f"iterations={model.iterations} objective={model.objective:.6f}"
    )
    p1 = _identical_word_p_at_1(source, target, model, config)
    if p1 is not None:
        summary += f" identical_word_p@1={p1[0]:.2f}% (n={p1[1]})"
    log_lines.append(summary)
    (out_dir / "align_log.txt").write_text("\n".join(log_lines) + "\n", encoding="utf-8")
    print(summary)

    manifest = {
        "command": "align",
        "source": source_path,
        "target": target_path,
        "out": str(out_dir),
        "advanced_mapping": config.advanced,
        **{
            k: v
            for k, v in config.as_dict().items()
            if k != "advanced"
        },
    }
    _write_config(out_dir / "align_manifest.cfg", manifest)
    return EXIT_OK


# ---------------------------------------------------------------- eval


def cmd_eval(args: argparse.Namespace) -> int:
    settings = _Settings(args)
    dataset_paths = settings.get_paths("dataset")
    if not dataset_paths:
        raise XlexError("eval needs at least one --dataset")
    cross = settings.get_paths("cross")
    model_paths = settings.get_paths("embeddings")
    if cross and len(cross) != 2:
        raise XlexError("--cross takes exactly two embedding paths")
    if not cross and not model_paths:
        raise XlexError("eval needs embedding paths (or --cross)")
    for path in [*model_paths, *cross, *dataset_paths]:
        if not Path(path).exists():
            raise FileNotFoundError(path)

    reports: list[eval_mod.EvalReport] = []
    worst = EXIT_OK

    models: list[tuple[str, object]] = []
    if cross:
        src = embedding_mod.load_text(cross[0])
        trg = embedding_mod.load_text(cross[1])
        model_id = f"{Path(cross[0]).stem}-{Path(cross[1]).stem}"
        models.append((model_id, (src, trg)))
    for path in model_paths:
        models.append((Path(path).stem, embedding_mod.load_text(path)))

    for model_id, model in models:
        for ds_path in dataset_paths:
            try:
                dataset = eval_mod.load_dataset(ds_path)
                if isinstance(model, tuple):
                    report = eval_mod.evaluate_cross(
                        model[0], model[1], dataset, model_id
                    )
                else:
                    report = eval_mod.evaluate(model, dataset, model_id)
            except FormatError as exc:
                report = eval_mod.EvalReport(
                    model_id=model_id,
                    dataset=Path(ds_path).stem,
                    coverage_percent=0.0,
                    spearman_rho_percent=None,
                    pairs_total=0,
                    pairs_covered=0,
                    error=str(exc),
                )
                worst = max(worst, EXIT_FORMAT)
            reports.append(report)

    table = eval_mod.format_report_table(reports)
    lines = eval_mod.format_report_lines(reports)
    print(table)
    print()
    print(lines)

    out = settings.get("out", str, None)
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.txt").write_text(table + "\n", encoding="utf-8")
        (out_dir / "report.tsv").write_text(lines + "\n", encoding="utf-8")
        manifest = {
            "command": "eval",
            "embeddings": model_paths,
            "cross": cross,
            "dataset": dataset_paths,
            "out": str(out_dir),
        }
        _write_config(out_dir / "eval_manifest.cfg", manifest)
    return worst


# ---------------------------------------------------------------- parser


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="random seed (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlex",
        description=(
            "Train monolingual word embeddings, map two spaces into a "
            "common space without supervision, and score embeddings "
            "against human word-similarity datasets."
        ),
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_stats = sub.add_parser("stats", help="corpus token/unique-word counts")
    p_stats.add_argument("corpus", nargs="*", help="plain-text corpus files")
    _add_common(p_stats)

    p_train = sub.add_parser("train", help="train monolingual embeddings")
    p_train.add_argument("corpus", nargs="*", help="plain-text corpus files")
    p_train.add_argument(
        "--mode", choices=embedding_mod.MODES,
        help="trainer (default skipgram)",
    )
    p_train.add_argument("--dim", type=int, help="vector size (default 300)")
    p_train.add_argument("--window", type=int, help="context window (default 4)")
    p_train.add_argument(
        "--min-count", dest="min_count", type=int,
        help="minimum word occurrences (default 1)",
    )
    p_train.add_argument("--epochs", type=int, help="training passes (default 100)")
    p_train.add_argument(
        "--negatives", type=int, help="negative samples per pair (default 5)"
    )
    p_train.add_argument("--lr", type=float, help="initial learning rate (default 0.025)")
    p_train.add_argument(
        "--subsample", type=float,
        help="frequent-word subsampling threshold (default 0 = off)",
    )
    p_train.add_argument("--nmin", type=int, help="min n-gram length (default 3)")
    p_train.add_argument("--nmax", type=int, help="max n-gram length (default 6)")
    p_train.add_argument(
        "--buckets", type=int, help="n-gram hash buckets (default 2000000)"
    )
    p_train.add_argument(
        "--threads", type=int,
        help=f"worker threads (default {ENV_THREADS} or cpu count)",
    )
    p_train.add_argument(
        "--deterministic", action="store_true", default=None,
        help="single-threaded, bit-reproducible training",
    )
    p_train.add_argument(
        "--backend", choices=("numba", "numpy"),
        help=f"kernel backend (default {ENV_BACKEND} or numba)",
    )
    p_train.add_argument(
        "--compose-oov", dest="compose_oov",
        help="word list to compose from subword units after training",
    )
    p_train.add_argument(
        "--oov-out", dest="oov_out", help="output path for composed OOV vectors"
    )
    _add_common(p_train)

    p_align = sub.add_parser("align", help="map two embedding spaces together")
    p_align.add_argument("source", nargs="?", help="source embedding file")
    p_align.add_argument("target", nargs="?", help="target embedding file")
    p_align.add_argument("--csls-k", dest="csls_k", type=int,
                         help="CSLS neighborhood size (default 10)")
    p_align.add_argument(
        "--vocab-cutoff", dest="vocab_cutoff", type=int,
        help="most-frequent words used in self-learning (default 20000)",
    )
    p_align.add_argument(
        "--max-iterations", dest="max_iterations", type=int,
        help="self-learning iteration cap (default 500)",
    )
    p_align.add_argument(
        "--convergence-tol", dest="convergence_tol", type=float,
        help="minimal relative objective improvement (default 1e-6)",
    )
    p_align.add_argument(
        "--advanced-mapping", dest="advanced_mapping", action="store_true",
        default=None,
        help="whitening + reweighting + de-whitening mapping steps",
    )
    p_align.add_argument(
        "--deterministic", action="store_true", default=None,
        help="accepted for interface symmetry; alignment is always "
        "deterministic for a fixed seed",
    )
    _add_common(p_align)

    p_eval = sub.add_parser("eval", help="score embeddings on similarity datasets")
    p_eval.add_argument("embeddings", nargs="*", help="embedding files")
    p_eval.add_argument(
        "--dataset", action="append",
        help="similarity dataset (repeatable)",
    )
    p_eval.add_argument(
        "--cross", nargs=2, metavar=("SRC", "TRG"),
        help="cross-lingual mode: two mapped embedding files",
    )
    _add_common(p_eval)

    return parser


_COMMANDS = {
    "stats": cmd_stats,
    "train": cmd_train,
    "align": cmd_align,
    "eval": cmd_eval,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.subcommand](args)
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.args[0]}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DimensionMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except UnicodeDecodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except XlexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
