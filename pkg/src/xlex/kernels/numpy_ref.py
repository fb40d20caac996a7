"""Pure-numpy reference backend.

Walks the corpus in exactly the same order as the JIT backend and draws
from the same LCG stream, but does the per-pair vector math with numpy
array operations. Roughly an order of magnitude slower than the compiled
path; useful where numba is unavailable and as a cross-check in the
benchmark.
"""

import numpy as np

from . import INV_2_53, LCG_A, LCG_C, UINT64_MASK


def sgns_pass(
    ids,
    offsets,
    sent_lo,
    sent_hi,
    syn0,
    syn1,
    cdf,
    keep_tab,
    window,
    negatives,
    lr0,
    lr_min,
    total,
    progress,
    seed,
):
    state = int(seed)
    use_sub = keep_tab.shape[0] > 0
    labels = np.zeros(negatives + 1)
    labels[0] = 1.0
    us = np.empty(negatives)
    p = int(progress[0])
    for si in range(sent_lo, sent_hi):
        lo = int(offsets[si])
        hi = int(offsets[si + 1])
        for t in range(lo, hi):
            w = int(ids[t])
            frac = p / total if p < total else 1.0
            lr = lr0 + (lr_min - lr0) * frac
            p += 1
            if use_sub:
                state = (state * LCG_A + LCG_C) & UINT64_MASK
                if (state >> 11) * INV_2_53 >= keep_tab[w]:
                    continue
            state = (state * LCG_A + LCG_C) & UINT64_MASK
            b = 1 + ((state >> 32) % window)
            for ci in range(max(lo, t - b), min(hi, t + b + 1)):
                if ci == t:
                    continue
                ctx = int(ids[ci])
                for k in range(negatives):
                    state = (state * LCG_A + LCG_C) & UINT64_MASK
                    us[k] = (state >> 11) * INV_2_53
                negs = np.searchsorted(cdf, us, side="right")
                rows = [ctx] + [int(n) for n in negs if n != ctx]
                n_rows = len(rows)
                rows_arr = np.asarray(rows, dtype=np.int64)
                outs = syn1[rows_arr]  # gather copies the old rows
                center = syn0[w]
                dots = np.clip(outs @ center, -30.0, 30.0).astype(np.float64)
                sig = 1.0 / (1.0 + np.exp(-dots))
                g = ((labels[:n_rows] - sig) * lr).astype(np.float32)
                np.add.at(syn1, rows_arr, g[:, None] * center[None, :])
                syn0[w] += g @ outs
    progress[0] = p


def subword_pass(
    ids,
    offsets,
    sent_lo,
    sent_hi,
    units,
    uoff,
    syn_units,
    syn1,
    cdf,
    keep_tab,
    window,
    negatives,
    lr0,
    lr_min,
    total,
    progress,
    seed,
):
    state = int(seed)
    use_sub = keep_tab.shape[0] > 0
    labels = np.zeros(negatives + 1)
    labels[0] = 1.0
    us = np.empty(negatives)
    p = int(progress[0])
    for si in range(sent_lo, sent_hi):
        lo = int(offsets[si])
        hi = int(offsets[si + 1])
        for t in range(lo, hi):
            w = int(ids[t])
            frac = p / total if p < total else 1.0
            lr = lr0 + (lr_min - lr0) * frac
            p += 1
            if use_sub:
                state = (state * LCG_A + LCG_C) & UINT64_MASK
                if (state >> 11) * INV_2_53 >= keep_tab[w]:
                    continue
            state = (state * LCG_A + LCG_C) & UINT64_MASK
            b = 1 + ((state >> 32) % window)
            uarr = units[int(uoff[w]) : int(uoff[w + 1])]
            inv = np.float32(1.0 / uarr.shape[0])
            for ci in range(max(lo, t - b), min(hi, t + b + 1)):
                if ci == t:
                    continue
                ctx = int(ids[ci])
                h = syn_units[uarr].sum(axis=0) * inv
                for k in range(negatives):
                    state = (state * LCG_A + LCG_C) & UINT64_MASK
                    us[k] = (state >> 11) * INV_2_53
                negs = np.searchsorted(cdf, us, side="right")
                rows = [ctx] + [int(n) for n in negs if n != ctx]
                n_rows = len(rows)
                rows_arr = np.asarray(rows, dtype=np.int64)
                outs = syn1[rows_arr]
                dots = np.clip(outs @ h, -30.0, 30.0).astype(np.float64)
                sig = 1.0 / (1.0 + np.exp(-dots))
                g = ((labels[:n_rows] - sig) * lr).astype(np.float32)
                np.add.at(syn1, rows_arr, g[:, None] * h[None, :])
                np.add.at(syn_units, uarr, (g @ outs) * inv)
    progress[0] = p
