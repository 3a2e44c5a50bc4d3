"""The ten guarded commands of the strictly-stabilizing unison algorithm.

This module is the readable reference: every guard is written out as a
boolean expression over ``(c_l, c_p, c_r)``.  The kernels in
:mod:`unison_sim.kernels` encode the same rules as bitmasks for speed and are
tested against this module.
"""

from __future__ import annotations

import enum
from typing import Optional, Sequence

from .core import Topology, check_clock, is_correct, neighbors
from .errors import GuardViolation, RoleMismatch


class Rule(enum.IntEnum):
    """Rule identifiers; the integer value is the fixed tie-break order."""

    LEFT_END_UP = 0
    LEFT_END_DOWN = 1
    RIGHT_END_UP = 2
    RIGHT_END_DOWN = 3
    MIDDLE_LEFT_UP = 4
    MIDDLE_LEFT_DOWN = 5
    MIDDLE_RIGHT_UP = 6
    MIDDLE_RIGHT_DOWN = 7
    SYNC_UP = 8
    SYNC_DOWN = 9

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def bit(self) -> int:
        return 1 << self.value

    @classmethod
    def from_label(cls, label: str) -> "Rule":
        try:
            return _BY_LABEL[label]
        except KeyError:
            raise ValueError(f"unknown rule name {label!r}") from None

    def __str__(self):
        return self.label


_LABELS = {
    Rule.LEFT_END_UP: "leftEndUp",
    Rule.LEFT_END_DOWN: "leftEndDown",
    Rule.RIGHT_END_UP: "rightEndUp",
    Rule.RIGHT_END_DOWN: "rightEndDown",
    Rule.MIDDLE_LEFT_UP: "middleLeftUp",
    Rule.MIDDLE_LEFT_DOWN: "middleLeftDown",
    Rule.MIDDLE_RIGHT_UP: "middleRightUp",
    Rule.MIDDLE_RIGHT_DOWN: "middleRightDown",
    Rule.SYNC_UP: "syncUp",
    Rule.SYNC_DOWN: "syncDown",
}
_BY_LABEL = {v: k for k, v in _LABELS.items()}

END_RULES = frozenset({Rule.LEFT_END_UP, Rule.LEFT_END_DOWN, Rule.RIGHT_END_UP, Rule.RIGHT_END_DOWN})
UP_RULES = frozenset(
    {Rule.LEFT_END_UP, Rule.RIGHT_END_UP, Rule.MIDDLE_LEFT_UP, Rule.MIDDLE_RIGHT_UP, Rule.SYNC_UP}
)


def guards(cl: Optional[int], cp: int, cr: Optional[int]) -> frozenset:
    """Enabled rules for a processor with clock ``cp`` and neighbor clocks.

    A missing neighbor (``None``) makes the processor a chain end; the end
    rules for the right end mirror the left-end rules with ``l`` in place of
    ``r``.
    """
    out = set()
    if cl is None and cr is not None:
        out.add(Rule.LEFT_END_UP if cp <= cr else Rule.LEFT_END_DOWN)
    elif cr is None and cl is not None:
        out.add(Rule.RIGHT_END_UP if cp <= cl else Rule.RIGHT_END_DOWN)
    elif cl is not None and cr is not None:
        if (cp == cl or cp == cl - 1) and cp <= cr:
            out.add(Rule.MIDDLE_LEFT_UP)
        if (cp == cl or cp == cl + 1) and cp > cr:
            out.add(Rule.MIDDLE_LEFT_DOWN)
        if (cp == cr or cp == cr - 1) and cp <= cl:
            out.add(Rule.MIDDLE_RIGHT_UP)
        if (cp == cr or cp == cr + 1) and cp > cl:
            out.add(Rule.MIDDLE_RIGHT_DOWN)
        if cp < cl - 1 and cp < cr - 1:
            out.add(Rule.SYNC_UP)
        if cp > cl + 1 and cp > cr + 1:
            out.add(Rule.SYNC_DOWN)
    return frozenset(out)


def command(rule: Rule, cl: Optional[int], cp: int, cr: Optional[int]) -> int:
    """Clock value written by ``rule`` (guard not checked)."""
    if rule is Rule.LEFT_END_UP:
        return cr + 1
    if rule is Rule.LEFT_END_DOWN:
        return cr - 1
    if rule is Rule.RIGHT_END_UP:
        return cl + 1
    if rule is Rule.RIGHT_END_DOWN:
        return cl - 1
    if rule in (Rule.MIDDLE_LEFT_UP, Rule.MIDDLE_RIGHT_UP):
        return cp + 1
    if rule in (Rule.MIDDLE_LEFT_DOWN, Rule.MIDDLE_RIGHT_DOWN):
        return cp - 1
    if rule is Rule.SYNC_UP:
        return min(cl, cr)
    return max(cl, cr)


def _view(c: Sequence[int], t: Topology, p: int):
    left, right = neighbors(t, p)
    cl = None if left is None else c[left]
    cr = None if right is None else c[right]
    return cl, c[p], cr


def enabled_rules(c: Sequence[int], t: Topology, p: int, roles: Optional[Sequence] = None) -> frozenset:
    if roles is not None and not is_correct(roles[p]):
        raise RoleMismatch(f"processor {p} is {roles[p]}; only correct processors run rules")
    return guards(*_view(c, t, p))


def apply_rule(c: Sequence[int], t: Topology, p: int, rule: Rule) -> tuple:
    """Execute ``rule`` at ``p``; the guard is re-checked, not trusted."""
    cl, cp, cr = _view(c, t, p)
    if rule not in guards(cl, cp, cr):
        raise GuardViolation(f"{Rule(rule).label} not enabled at processor {p} (l={cl}, p={cp}, r={cr})")
    out = list(c)
    out[p] = check_clock(command(rule, cl, cp, cr))
    return tuple(out)


def mask_to_rules(mask: int) -> frozenset:
    return frozenset(r for r in Rule if mask >> r.value & 1)


def rules_to_mask(rules) -> int:
    m = 0
    for r in rules:
        m |= 1 << int(r)
    return m
