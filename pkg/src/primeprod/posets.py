"""Finite posets, their upset lattices, and (prime) filters of upsets.

Upsets are handled as frozensets at the API level but ordered and
deduplicated through bitmasks over the canonical element order, which
keeps every enumeration deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import FilterError, PosetError


@dataclass(frozen=True)
class Poset:
    elements: tuple[str, ...]
    le: frozenset[tuple[str, str]]

    def leq(self, x: str, y: str) -> bool:
        return (x, y) in self.le

    def up(self, x: str) -> frozenset:
        return frozenset(y for y in self.elements if (x, y) in self.le)

    def down(self, x: str) -> frozenset:
        return frozenset(y for y in self.elements if (y, x) in self.le)

    def index(self, x: str) -> int:
        return self.elements.index(x)


def validate_poset(elements, pairs, close: bool = False) -> Poset:
    """Build a Poset, naming the violated axiom with a witness on failure.

    With close=True the reflexive-transitive closure is computed first
    (the file format expects this); antisymmetry is always verified.
    """
    elements = tuple(elements)
    if not elements:
        raise PosetError("poset must have at least one element")
    if len(set(elements)) != len(elements):
        raise PosetError("duplicate element names")
    elems = set(elements)
    le = set()
    for x, y in pairs:
        if x not in elems or y not in elems:
            raise PosetError(f"order pair ({x!r}, {y!r}) uses unknown element")
        le.add((x, y))
    if close:
        for x in elements:
            le.add((x, x))
        changed = True
        while changed:
            changed = False
            for (a, b), (c, d) in itertools.product(tuple(le), repeat=2):
                if b == c and (a, d) not in le:
                    le.add((a, d))
                    changed = True
    for x in elements:
        if (x, x) not in le:
            raise PosetError(f"missing reflexive pair ({x}, {x})")
    for x, y in le:
        if x != y and (y, x) in le:
            raise PosetError(f"antisymmetry violation ({x}, {y})")
    for x, y in le:
        for z in elements:
            if (y, z) in le and (x, z) not in le:
                raise PosetError(f"transitivity gap ({x}, {y}, {z})")
    return Poset(elements, frozenset(le))


def poset_from_dict(raw: dict) -> Poset:
    if set(raw) != {"elements", "le"}:
        raise PosetError("poset object must have exactly the keys elements/le")
    return validate_poset([str(e) for e in raw["elements"]],
                          [(str(a), str(b)) for a, b in raw["le"]], close=True)


def poset_to_dict(p: Poset) -> dict:
    strict = sorted((a, b) for a, b in p.le if a != b)
    return {"elements": list(p.elements), "le": [list(pair) for pair in strict]}


def id_poset(names) -> Poset:
    names = tuple(names)
    return validate_poset(names, [(n, n) for n in names])


def is_chain(p: Poset) -> bool:
    return all(p.leq(x, y) or p.leq(y, x)
               for x, y in itertools.combinations(p.elements, 2))


def is_wellfounded_forest(p: Poset) -> bool:
    """True when every principal downset is linearly ordered."""
    for x in p.elements:
        down = p.down(x)
        for a, b in itertools.combinations(sorted(down, key=p.index), 2):
            if not (p.leq(a, b) or p.leq(b, a)):
                return False
    return True


def mask_of(p: Poset, members) -> int:
    m = 0
    for e in members:
        m |= 1 << p.index(e)
    return m


def members_of(p: Poset, mask: int) -> frozenset:
    return frozenset(e for i, e in enumerate(p.elements) if mask >> i & 1)


@lru_cache(maxsize=None)
def _upset_masks(p: Poset) -> tuple[int, ...]:
    n = len(p.elements)
    strict_up = []
    for i, x in enumerate(p.elements):
        strict_up.append(mask_of(p, p.up(x)))
    out = []
    for mask in range(1 << n):
        ok = True
        for i in range(n):
            if mask >> i & 1 and strict_up[i] & ~mask:
                ok = False
                break
        if ok:
            out.append(mask)
    return tuple(out)


def upsets(p: Poset) -> tuple[frozenset, ...]:
    """All upsets in canonical (bitmask-ascending) order; includes {} and X."""
    return tuple(members_of(p, m) for m in _upset_masks(p))


def is_upset(p: Poset, members) -> bool:
    members = frozenset(members)
    return all(p.up(x) <= members for x in members)


@dataclass(frozen=True)
class Upset:
    poset: Poset
    members: frozenset

    def __post_init__(self):
        if not is_upset(self.poset, self.members):
            bad = next(x for x in self.members
                       if not self.poset.up(x) <= self.members)
            raise PosetError(f"not an upset: {bad} has a successor outside")


@dataclass(frozen=True)
class Filter:
    """A family of upsets; construct through make_filter to validate."""

    poset: Poset
    family: tuple[frozenset, ...]
    _masks: frozenset = field(compare=False, hash=False, default=frozenset())

    def __post_init__(self):
        object.__setattr__(
            self, "_masks", frozenset(mask_of(self.poset, v) for v in self.family))

    def contains(self, members) -> bool:
        return mask_of(self.poset, members) in self._masks

    def least_member(self) -> frozenset:
        return min(self.family, key=lambda v: mask_of(self.poset, v))

    def is_improper(self) -> bool:
        return frozenset() in self.family


def _check_family(p: Poset, family):
    out = []
    for v in family:
        v = frozenset(v)
        if not is_upset(p, v):
            raise FilterError(f"family member {sorted(v)} is not an upset")
        out.append(v)
    return out


def is_filter(p: Poset, family) -> bool:
    """Nonempty, superset-closed within Up(X), and closed under intersection."""
    fam = set(_check_family(p, family))
    if not fam:
        return False
    for v in fam:
        for w in upsets(p):
            if v <= w and w not in fam:
                return False
    for v, w in itertools.combinations(fam, 2):
        if v & w not in fam:
            return False
    return True


def is_prime_filter(p: Poset, family) -> bool:
    """A proper filter where V | W in F forces V in F or W in F."""
    fam = set(_check_family(p, family))
    if not is_filter(p, fam):
        return False
    if fam == set(upsets(p)):
        return False
    for v, w in itertools.combinations_with_replacement(upsets(p), 2):
        if (v | w) in fam and v not in fam and w not in fam:
            return False
    return True


def make_filter(p: Poset, family) -> Filter:
    fam = _check_family(p, family)
    if not is_filter(p, fam):
        raise FilterError("family is not a filter")
    ordered = tuple(sorted(set(fam), key=lambda v: mask_of(p, v)))
    return Filter(p, ordered)


def generated_filter(p: Poset, base) -> Filter:
    """Superset closure of the upset `base` inside Up(X)."""
    base = frozenset(base)
    if not is_upset(p, base):
        raise FilterError(f"{sorted(base)} is not an upset")
    fam = tuple(v for v in upsets(p) if base <= v)
    return Filter(p, fam)


def enumerate_filters(p: Poset) -> list[Filter]:
    """All filters over p, in canonical order of their least member.

    On a finite poset every filter is the superset closure of its least
    member, so there is exactly one filter per upset (the closure of the
    empty upset being the improper filter).
    """
    return [generated_filter(p, v) for v in upsets(p)]


def enumerate_prime_filters(p: Poset) -> list[Filter]:
    return [f for f in enumerate_filters(p) if is_prime_filter(p, f.family)]


def point_filter(p: Poset, x: str) -> Filter:
    if x not in p.elements:
        raise PosetError(f"unknown element {x!r}")
    return Filter(p, tuple(v for v in upsets(p) if x in v))


def principal_upset_filter(p: Poset) -> Filter:
    """The filter generated by the principal upsets of a chain."""
    if not is_chain(p):
        raise FilterError("principal-upset filter requires a linearly ordered poset")
    principal = {p.up(x) for x in p.elements}
    fam = tuple(v for v in upsets(p) if any(b <= v for b in principal))
    return Filter(p, fam)


def filter_to_lists(f: Filter) -> list[list[str]]:
    return [sorted(v) for v in f.family]


def filter_from_lists(p: Poset, lists) -> Filter:
    return make_filter(p, [frozenset(v) for v in lists])
