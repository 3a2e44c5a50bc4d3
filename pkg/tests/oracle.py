"""Slow, independent reference for SSU semantics.

Written from the rule text with plain lists and dicts and no imports from the
package, so it can serve as an oracle for the rules module, both kernel
backends and the strongly-fair engine loop.
"""

import random

RULE_NAMES = (
    "leftEndUp", "leftEndDown", "rightEndUp", "rightEndDown",
    "middleLeftUp", "middleLeftDown", "middleRightUp", "middleRightDown",
    "syncUp", "syncDown",
)


def nbrs(kind, n, p):
    if kind == "ring":
        return (p - 1) % n, (p + 1) % n
    return (p - 1 if p > 0 else None), (p + 1 if p < n - 1 else None)


def enabled_names(l, c, r):
    """Rule names enabled for clock ``c`` with neighbor clocks ``l``/``r`` (None = absent)."""
    out = []
    if l is None and r is not None:
        out.append("leftEndUp" if c <= r else "leftEndDown")
    if r is None and l is not None:
        out.append("rightEndUp" if c <= l else "rightEndDown")
    if l is not None and r is not None:
        if c in (l, l - 1) and c <= r:
            out.append("middleLeftUp")
        if c in (l, l + 1) and c > r:
            out.append("middleLeftDown")
        if c in (r, r - 1) and c <= l:
            out.append("middleRightUp")
        if c in (r, r + 1) and c > l:
            out.append("middleRightDown")
        if c < l - 1 and c < r - 1:
            out.append("syncUp")
        if c > l + 1 and c > r + 1:
            out.append("syncDown")
    return out


def new_value(name, l, c, r):
    return {
        "leftEndUp": lambda: r + 1,
        "leftEndDown": lambda: r - 1,
        "rightEndUp": lambda: l + 1,
        "rightEndDown": lambda: l - 1,
        "middleLeftUp": lambda: c + 1,
        "middleRightUp": lambda: c + 1,
        "middleLeftDown": lambda: c - 1,
        "middleRightDown": lambda: c - 1,
        "syncUp": lambda: min(l, r),
        "syncDown": lambda: max(l, r),
    }[name]()


def view(kind, clocks, p):
    a, b = nbrs(kind, len(clocks), p)
    return (None if a is None else clocks[a]), clocks[p], (None if b is None else clocks[b])


def drift(kind, clocks, correct):
    n = len(clocks)
    pairs = [(p, p + 1) for p in range(n - 1)] + ([(n - 1, 0)] if kind == "ring" else [])
    return max((abs(clocks[p] - clocks[q]) for p, q in pairs if correct[p] and correct[q]), default=0)


def fault_writer(spec, kind, n, pid):
    """Callable ``(step, clocks) -> value | None`` for an always-activated faulty processor."""
    if spec[0] in ("crash", "silent"):
        return lambda step, clocks: None
    if spec[0] == "fixed":
        return lambda step, clocks: spec[1]
    if spec[0] == "chase":
        def chase(step, clocks):
            return min(clocks[q] for q in nbrs(kind, n, pid) if q is not None) - spec[1]
        return chase
    if spec[0] == "walk":
        lo, hi, seed = spec[1:]
        count = [0]

        def walk(step, clocks):
            v = random.Random(f"walk:{seed}:{count[0]}").randint(lo, hi)
            count[0] += 1
            return v
        return walk
    raise ValueError(spec)


def simulate(kind, clocks, faults=None, max_rounds=1000, max_steps=100_000, window=None):
    """Strongly-fair central run with max-debt selection.

    ``faults`` maps processor id to a spec tuple: ("crash",), ("silent",),
    ("fixed", v), ("chase", d) or ("walk", lo, hi, seed).  Every faulty
    processor gets one opportunity, in id order, before each correct step,
    except when an enabled rule has waited as many configurations as there
    are correct processors; then the correct step goes first.
    Stops at the first INV configuration, or ``window`` rounds after it.
    Returns ``(steps, stats)``; each step is ``(actor, written, clocks_after)``.
    """
    faults = faults or {}
    clocks = list(clocks)
    init = tuple(clocks)
    n = len(clocks)
    correct = [p not in faults for p in range(n)]
    writers = {p: fault_writer(faults[p], kind, n, p) for p in sorted(faults)}
    debt = {}
    acted, rounds = set(), 0
    steps, rounds_after = [], []
    drift_rounds = [drift(kind, clocks, correct)]
    inv_step = 0 if drift_rounds[0] <= 1 else None
    inv_round = 0 if inv_step == 0 else None

    def enabled_pairs():
        return [(p, RULE_NAMES.index(x)) for p in range(n) if correct[p]
                for x in enabled_names(*view(kind, clocks, p))]

    def settle(actor, fired):
        nonlocal rounds, inv_step, inv_round
        for pr in enabled_pairs():
            debt[pr] = debt.get(pr, 0) + 1
        if fired is not None:
            debt[(actor, fired)] = 0
        if correct[actor]:
            acted.add(actor)
            if acted == {p for p in range(n) if correct[p]}:
                acted.clear()
                rounds += 1
                drift_rounds.append(drift(kind, clocks, correct))
        steps.append((actor, clocks[actor], tuple(clocks)))
        rounds_after.append(rounds)
        if inv_step is None and drift(kind, clocks, correct) <= 1:
            inv_step = len(steps)
            inv_round = rounds

    def done():
        if len(steps) >= max_steps or rounds >= max_rounds:
            return True
        if window is None:
            return inv_step is not None
        return inv_round is not None and rounds >= inv_round + window

    overdue = max(1, sum(correct))
    while not done():
        acted_faulty = False
        stop = False
        # faulty processors get their opportunity unless some enabled rule is overdue
        late = any(debt.get(pr, 0) >= overdue for pr in enabled_pairs())
        for p, w in ([] if late else writers.items()):
            v = w(len(steps), clocks)
            if v is None:
                continue
            acted_faulty = True
            clocks[p] = v
            settle(p, None)
            if done():
                stop = True
                break
        if stop:
            break
        cands = enabled_pairs()
        if not cands:
            if not acted_faulty:
                raise RuntimeError("deadlock")
            continue
        p, r = max(cands, key=lambda pr: (debt.get(pr, 0), -pr[0], -pr[1]))
        clocks[p] = new_value(RULE_NAMES[r], *view(kind, clocks, p))
        settle(p, r)

    if inv_step is None:
        rounds_to_inv = None
    elif inv_step == 0:
        rounds_to_inv = 0
    else:
        rounds_to_inv = (rounds_after[inv_step - 2] if inv_step >= 2 else 0) + 1
    increments = []
    for p in range(n):
        if not correct[p] or inv_step is None:
            increments.append(None)
            continue
        count = 0
        for k in range(inv_step, len(steps)):
            actor, written, _ = steps[k]
            before = steps[k - 1][2][actor] if k else init[actor]
            if actor == p and written > before:
                count += 1
        increments.append(count)
    stats = {
        "rounds_to_inv": rounds_to_inv,
        "steps_to_inv": inv_step,
        "drift_by_round": tuple(drift_rounds),
        "increments_post_inv": tuple(increments),
        "rounds": rounds,
    }
    return steps, stats
