"""Numba-compiled training kernels.

Scalar inner loops over the token stream; float32 weights, float64 logistic
math, and an inline 64-bit LCG so the random stream is identical to the
numpy reference backend. Compiled with ``nogil`` so the driver can run
hogwild-style threads over sentence shards.
"""

import math

import numpy as np
from numba import njit

_A = np.uint64(6364136223846793005)
_C = np.uint64(1442695040888963407)
_SH11 = np.uint64(11)
_SH32 = np.uint64(32)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, nogil=True, inline="always")
def _search_cdf(cdf, u):
    # first index with cdf[idx] > u (== np.searchsorted side='right')
    lo = 0
    hi = cdf.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True, nogil=True, inline="always")
def _sigmoid(f):
    if f > 30.0:
        f = 30.0
    elif f < -30.0:
        f = -30.0
    return 1.0 / (1.0 + math.exp(-f))


@njit(cache=True, nogil=True)
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
    d = syn0.shape[1]
    work = np.zeros(d, np.float32)
    state = np.uint64(seed)
    wnd = np.uint64(window)
    use_sub = keep_tab.shape[0] > 0
    for si in range(sent_lo, sent_hi):
        lo = offsets[si]
        hi = offsets[si + 1]
        for t in range(lo, hi):
            w = ids[t]
            p = progress[0]
            frac = p / total if p < total else 1.0
            lr = lr0 + (lr_min - lr0) * frac
            progress[0] = p + 1
            if use_sub:
                state = state * _A + _C
                if np.float64(state >> _SH11) * _INV53 >= keep_tab[w]:
                    continue
            state = state * _A + _C
            b = np.int64((state >> _SH32) % wnd) + 1
            for off in range(-b, b + 1):
                if off == 0:
                    continue
                ci = t + off
                if ci < lo or ci >= hi:
                    continue
                ctx = ids[ci]
                for i in range(d):
                    work[i] = 0.0
                for k in range(negatives + 1):
                    if k == 0:
                        target = np.int64(ctx)
                        label = 1.0
                    else:
                        state = state * _A + _C
                        u = np.float64(state >> _SH11) * _INV53
                        target = np.int64(_search_cdf(cdf, u))
                        if target == ctx:
                            continue
                        label = 0.0
                    f = np.float32(0.0)
                    for i in range(d):
                        f += syn0[w, i] * syn1[target, i]
                    g = np.float32((label - _sigmoid(np.float64(f))) * lr)
                    for i in range(d):
                        work[i] += g * syn1[target, i]
                    for i in range(d):
                        syn1[target, i] += g * syn0[w, i]
                for i in range(d):
                    syn0[w, i] += work[i]


@njit(cache=True, nogil=True)
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
    d = syn_units.shape[1]
    work = np.zeros(d, np.float32)
    h = np.zeros(d, np.float32)
    state = np.uint64(seed)
    wnd = np.uint64(window)
    use_sub = keep_tab.shape[0] > 0
    for si in range(sent_lo, sent_hi):
        lo = offsets[si]
        hi = offsets[si + 1]
        for t in range(lo, hi):
            w = ids[t]
            p = progress[0]
            frac = p / total if p < total else 1.0
            lr = lr0 + (lr_min - lr0) * frac
            progress[0] = p + 1
            if use_sub:
                state = state * _A + _C
                if np.float64(state >> _SH11) * _INV53 >= keep_tab[w]:
                    continue
            state = state * _A + _C
            b = np.int64((state >> _SH32) % wnd) + 1
            u_lo = uoff[w]
            u_hi = uoff[w + 1]
            inv = np.float32(1.0 / (u_hi - u_lo))
            for off in range(-b, b + 1):
                if off == 0:
                    continue
                ci = t + off
                if ci < lo or ci >= hi:
                    continue
                ctx = ids[ci]
                # composed center vector: mean of all unit rows
                for i in range(d):
                    h[i] = 0.0
                for uu in range(u_lo, u_hi):
                    r = units[uu]
                    for i in range(d):
                        h[i] += syn_units[r, i]
                for i in range(d):
                    h[i] *= inv
                for i in range(d):
                    work[i] = 0.0
                for k in range(negatives + 1):
                    if k == 0:
                        target = np.int64(ctx)
                        label = 1.0
                    else:
                        state = state * _A + _C
                        u = np.float64(state >> _SH11) * _INV53
                        target = np.int64(_search_cdf(cdf, u))
                        if target == ctx:
                            continue
                        label = 0.0
                    f = np.float32(0.0)
                    for i in range(d):
                        f += h[i] * syn1[target, i]
                    g = np.float32((label - _sigmoid(np.float64(f))) * lr)
                    for i in range(d):
                        work[i] += g * syn1[target, i]
                    for i in range(d):
                        syn1[target, i] += g * h[i]
                # gradient split equally over the composed units
                for uu in range(u_lo, u_hi):
                    r = units[uu]
                    for i in range(d):
                        syn_units[r, i] += work[i] * inv
