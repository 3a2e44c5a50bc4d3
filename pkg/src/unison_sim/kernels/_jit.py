"""numba-compiled kernels.

Bit ``r`` of a mask is set when rule ``r`` (see :class:`unison_sim.rules.Rule`)
is enabled.  Faulty processors always carry mask 0.
"""

import numpy as np
from numba import njit

N_RULES = 10


@njit(cache=True)
def guard_mask(has_l, cl, cp, has_r, cr):
    m = 0
    if has_l and has_r:
        if (cp == cl or cp == cl - 1) and cp <= cr:
            m |= 16
        if (cp == cl or cp == cl + 1) and cp > cr:
            m |= 32
        if (cp == cr or cp == cr - 1) and cp <= cl:
            m |= 64
        if (cp == cr or cp == cr + 1) and cp > cl:
            m |= 128
        if cp < cl - 1 and cp < cr - 1:
            m |= 256
        if cp > cl + 1 and cp > cr + 1:
            m |= 512
    elif has_r:
        m = 1 if cp <= cr else 2
    elif has_l:
        m = 4 if cp <= cl else 8
    return m


@njit(cache=True)
def command(rule, cl, cp, cr):
    if rule == 0:
        return cr + 1
    if rule == 1:
        return cr - 1
    if rule == 2:
        return cl + 1
    if rule == 3:
        return cl - 1
    if rule == 4 or rule == 6:
        return cp + 1
    if rule == 5 or rule == 7:
        return cp - 1
    if rule == 8:
        return min(cl, cr)
    return max(cl, cr)


@njit(cache=True)
def _mask_at(clocks, correct, ring, p):
    n = clocks.shape[0]
    if not correct[p]:
        return 0
    if ring:
        return guard_mask(True, clocks[(p - 1) % n], clocks[p], True, clocks[(p + 1) % n])
    has_l = p > 0
    has_r = p < n - 1
    cl = clocks[p - 1] if has_l else 0
    cr = clocks[p + 1] if has_r else 0
    return guard_mask(has_l, cl, clocks[p], has_r, cr)


@njit(cache=True)
def enabled_masks(clocks, correct, ring):
    n = clocks.shape[0]
    out = np.zeros(n, dtype=np.int64)
    for p in range(n):
        out[p] = _mask_at(clocks, correct, ring, p)
    return out


@njit(cache=True)
def refresh_around(clocks, masks, correct, ring, p):
    n = clocks.shape[0]
    for d in (-1, 0, 1):
        q = p + d
        if ring:
            q %= n
        elif q < 0 or q >= n:
            continue
        masks[q] = _mask_at(clocks, correct, ring, q)


@njit(cache=True)
def bad_edges(clocks, correct, ring):
    n = clocks.shape[0]
    last = n if ring else n - 1
    bad = 0
    for p in range(last):
        q = (p + 1) % n
        if correct[p] and correct[q] and abs(clocks[p] - clocks[q]) > 1:
            bad += 1
    return bad


@njit(cache=True)
def fair_select(masks, debt):
    best = -1
    bp = -1
    br = -1
    for p in range(masks.shape[0]):
        m = masks[p]
        if m == 0:
            continue
        for r in range(N_RULES):
            if (m >> r) & 1 and debt[p, r] > best:
                best = debt[p, r]
                bp = p
                br = r
    return bp, br


@njit(cache=True)
def max_enabled_debt(masks, debt):
    """Largest ledger value over currently enabled rules, or -1."""
    best = -1
    for p in range(masks.shape[0]):
        m = masks[p]
        for r in range(N_RULES):
            if (m >> r) & 1 and debt[p, r] > best:
                best = debt[p, r]
    return best


@njit(cache=True)
def commit(clocks, masks, debt, idle, correct, ring, p, value, fired):
    clocks[p] = value
    refresh_around(clocks, masks, correct, ring, p)
    n = clocks.shape[0]
    for q in range(n):
        idle[q] += 1
        m = masks[q]
        if m == 0:
            continue
        for r in range(N_RULES):
            if (m >> r) & 1:
                debt[q, r] += 1
    idle[p] = 0
    if fired >= 0:
        debt[p, fired] = 0
    return bad_edges(clocks, correct, ring)


@njit(cache=True)
def fair_step(clocks, masks, debt, idle, correct, ring):
    p, r = fair_select(masks, debt)
    if p < 0:
        return -1, -1, 0, 0, bad_edges(clocks, correct, ring)
    n = clocks.shape[0]
    if ring:
        cl = clocks[(p - 1) % n]
        cr = clocks[(p + 1) % n]
    else:
        cl = clocks[p - 1] if p > 0 else 0
        cr = clocks[p + 1] if p < n - 1 else 0
    prev = clocks[p]
    new = command(r, cl, prev, cr)
    bad = commit(clocks, masks, debt, idle, correct, ring, p, new, r)
    return p, r, prev, new, bad
