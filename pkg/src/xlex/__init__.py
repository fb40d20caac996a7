"""xlex: monolingual embedding training, unsupervised cross-lingual
alignment, and word-similarity evaluation."""

from .align import AlignmentConfig, AlignmentModel, align, csls, project
from .corpus import (
    RawCorpus,
    TokenStream,
    Vocabulary,
    build_vocabulary,
    encode,
    preprocess,
    stats,
)
from .embedding import (
    EmbeddingMatrix,
    TrainingConfig,
    load_text,
    nearest_neighbors,
    save_text,
)
from .evaluation import (
    EvalReport,
    SimilarityDataset,
    evaluate,
    evaluate_cross,
    load_dataset,
    spearman,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentConfig",
    "AlignmentModel",
    "EmbeddingMatrix",
    "EvalReport",
    "RawCorpus",
    "SimilarityDataset",
    "TokenStream",
    "TrainingConfig",
    "Vocabulary",
    "align",
    "build_vocabulary",
    "csls",
    "encode",
    "evaluate",
    "evaluate_cross",
    "load_dataset",
    "load_text",
    "nearest_neighbors",
    "preprocess",
    "project",
    "save_text",
    "spearman",
    "stats",
    "__version__",
]
