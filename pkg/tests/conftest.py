import subprocess
import sys

import numpy as np
import pytest

from xlex.corpus import RawCorpus, Vocabulary, build_vocabulary, encode


def run_cli(*args: str, cwd=None):
    """Run the CLI in a subprocess; returns CompletedProcess with text output."""
    return subprocess.run(
        [sys.executable, "-m", "xlex.cli", *map(str, args)],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture
def tiny_vocab() -> Vocabulary:
    return Vocabulary.from_counts([("a", 4), ("b", 2), ("c", 1)])


def encoded(text: str, min_count: int = 1):
    corpus = RawCorpus.from_text(text)
    vocab = build_vocabulary(corpus, min_count)
    return encode(corpus, vocab), vocab


def random_unit_rows(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    m = rng.standard_normal((n, d))
    return m / np.linalg.norm(m, axis=1, keepdims=True)
