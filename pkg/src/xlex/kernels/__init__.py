"""Hot training loops with two interchangeable backends.

``jit`` compiles the scalar loops with numba (default); ``numpy_ref`` is a
pure-numpy reference that walks the corpus identically and consumes the same
random stream, with the vector math done by numpy ops. Select with the
``XLEX_BACKEND`` environment variable (``numba`` or ``numpy``); training
manifests record the backend actually used so reruns stay reproducible.

Both backends expose the same two entry points:

    sgns_pass(ids, offsets, sent_lo, sent_hi, syn0, syn1, cdf, keep_tab,
              window, negatives, lr0, lr_min, total, progress, seed)
    subword_pass(ids, offsets, sent_lo, sent_hi, units, uoff, syn_units,
                 syn1, cdf, keep_tab, window, negatives, lr0, lr_min,
                 total, progress, seed)

They mutate the weight matrices in place. Results are deterministic per
backend (single worker, fixed seed) but the two backends are not bit-equal:
they accumulate float32 dot products in different orders.
"""

from __future__ import annotations

import os

ENV_BACKEND = "XLEX_BACKEND"
BACKENDS = ("numba", "numpy")

# LCG constants (Knuth MMIX) shared by both backends; 53-bit uniform scaling.
LCG_A = 6364136223846793005
LCG_C = 1442695040888963407
UINT64_MASK = (1 << 64) - 1
INV_2_53 = 1.0 / 9007199254740992.0


def default_backend() -> str:
    """Backend from the environment, else numba when importable."""
    env = os.environ.get(ENV_BACKEND, "").strip().lower()
    if env:
        if env not in BACKENDS:
            raise ValueError(
                f"{ENV_BACKEND} must be one of {BACKENDS}, got {env!r}"
            )
        return env
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


def get_kernels(backend: str | None = None):
    """Return the kernel module for ``backend`` (resolved if None)."""
    name = backend or default_backend()
    if name == "numba":
        from . import jit as module
    elif name == "numpy":
        from . import numpy_ref as module
    else:
        raise ValueError(f"unknown backend {name!r}, expected one of {BACKENDS}")
    return module


def derive_seed(seed: int, epoch: int, shard: int) -> int:
    """Stable nonzero 64-bit stream seed for an (epoch, shard) pair."""
    x = (
        seed * 0x9E3779B97F4A7C15
        + (epoch + 1) * 0xBF58476D1CE4E5B9
        + (shard + 1) * 0x94D049BB133111EB
    ) & UINT64_MASK
    # splitmix64 finalizer
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & UINT64_MASK
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & UINT64_MASK
    x ^= x >> 31
    return x or 1
