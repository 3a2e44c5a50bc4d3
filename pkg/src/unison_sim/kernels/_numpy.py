"""Pure-numpy kernels with the same contracts as the numba versions."""

import numpy as np

N_RULES = 10
_SHIFTS = np.arange(N_RULES, dtype=np.int64)


def guard_mask(has_l, cl, cp, has_r, cr):
    return int(_masks_vec(np.array([cl]), np.array([cp]), np.array([cr]),
                          np.array([has_l]), np.array([has_r]))[0])


def _masks_vec(cl, cp, cr, has_l, has_r):
    middle = has_l & has_r
    m = np.zeros(cp.shape, dtype=np.int64)
    m |= (middle & ((cp == cl) | (cp == cl - 1)) & (cp <= cr)) * 16
    m |= (middle & ((cp == cl) | (cp == cl + 1)) & (cp > cr)) * 32
    m |= (middle & ((cp == cr) | (cp == cr - 1)) & (cp <= cl)) * 64
    m |= (middle & ((cp == cr) | (cp == cr + 1)) & (cp > cl)) * 128
    m |= (middle & (cp < cl - 1) & (cp < cr - 1)) * 256
    m |= (middle & (cp > cl + 1) & (cp > cr + 1)) * 512
    left_end = has_r & ~has_l
    right_end = has_l & ~has_r
    m |= left_end * np.where(cp <= cr, 1, 2)
    m |= right_end * np.where(cp <= cl, 4, 8)
    return m


def command(rule, cl, cp, cr):
    if rule == 0:
        return cr + 1
    if rule == 1:
        return cr - 1
    if rule == 2:
        return cl + 1
    if rule == 3:
        return cl - 1
    if rule in (4, 6):
        return cp + 1
    if rule in (5, 7):
        return cp - 1
    if rule == 8:
        return min(cl, cr)
    return max(cl, cr)


def enabled_masks(clocks, correct, ring):
    n = clocks.shape[0]
    has_l = np.ones(n, dtype=bool)
    has_r = np.ones(n, dtype=bool)
    if not ring:
        has_l[0] = False
        has_r[-1] = False
    m = _masks_vec(np.roll(clocks, 1), clocks, np.roll(clocks, -1), has_l, has_r)
    return np.where(correct, m, 0)


def refresh_around(clocks, masks, correct, ring, p):
    masks[:] = enabled_masks(clocks, correct, ring)


def bad_edges(clocks, correct, ring):
    if ring:
        drift = np.abs(clocks - np.roll(clocks, -1))
        both = correct & np.roll(correct, -1)
    else:
        drift = np.abs(np.diff(clocks))
        both = correct[:-1] & correct[1:]
    return int(np.count_nonzero(both & (drift > 1)))


def fair_select(masks, debt):
    bits = (masks[:, None] >> _SHIFTS) & 1
    if not bits.any():
        return -1, -1
    scored = np.where(bits == 1, debt, -1)
    # argmax returns the first maximum in processor-major order: lowest id, then rule order
    flat = int(np.argmax(scored))
    return flat // N_RULES, flat % N_RULES


def max_enabled_debt(masks, debt):
    bits = (masks[:, None] >> _SHIFTS) & 1
    if not bits.any():
        return -1
    return int(np.where(bits == 1, debt, -1).max())


def commit(clocks, masks, debt, idle, correct, ring, p, value, fired):
    clocks[p] = value
    masks[:] = enabled_masks(clocks, correct, ring)
    debt += (masks[:, None] >> _SHIFTS) & 1
    idle += 1
    idle[p] = 0
    if fired >= 0:
        debt[p, fired] = 0
    return bad_edges(clocks, correct, ring)


def fair_step(clocks, masks, debt, idle, correct, ring):
    p, r = fair_select(masks, debt)
    if p < 0:
        return -1, -1, 0, 0, bad_edges(clocks, correct, ring)
    n = clocks.shape[0]
    if ring:
        cl, cr = clocks[(p - 1) % n], clocks[(p + 1) % n]
    else:
        cl = clocks[p - 1] if p > 0 else 0
        cr = clocks[p + 1] if p < n - 1 else 0
    prev = int(clocks[p])
    new = int(command(r, int(cl), prev, int(cr)))
    bad = commit(clocks, masks, debt, idle, correct, ring, p, new, r)
    return p, r, prev, new, bad
