"""Ordered systems of structures over wellfounded forests, coherent
sections, denotation sets, and eventually-constant omega-chains with
their direct limits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ChainError, OrderedSystemError, PosetError
from .formulas import Formula, evaluate, free_variables, var_name
from .posets import Poset, is_upset, is_wellfounded_forest, mask_of, poset_from_dict, poset_to_dict
from .structures import (
    Hom,
    Structure,
    compose_homs,
    identity_hom,
    hom,
    is_homomorphism,
    structure_to_dict,
    validate_structure,
)


@dataclass
class OrderedSystem:
    """Structures indexed by a wellfounded forest with functorial homs.

    homs holds a Hom for every pair (x, y) with x <= y.
    """

    index: Poset
    structures: dict[str, Structure]
    homs: dict[tuple[str, str], Hom]

    def structure_at(self, x: str) -> Structure:
        return self.structures[x]

    def map_between(self, x: str, y: str) -> Hom:
        return self.homs[(x, y)]


def _covers(p: Poset) -> list[tuple[str, str]]:
    out = []
    for x, y in p.le:
        if x == y:
            continue
        if any(z not in (x, y) and p.leq(x, z) and p.leq(z, y)
               for z in p.elements):
            continue
        out.append((x, y))
    return sorted(out, key=lambda e: (p.index(e[0]), p.index(e[1])))


def validate_system(index: Poset, structures: dict, homs_given: dict) -> OrderedSystem:
    """Check the ordered-system laws, naming the failed one with witnesses.

    homs_given maps (x, y) pairs with x < y to element maps; entries for
    all covering pairs are required, remaining pairs are filled in by
    composition along the (unique) chain and checked for consistency.
    """
    if not is_wellfounded_forest(index):
        raise OrderedSystemError("index poset is not a wellfounded forest")
    for x in index.elements:
        if x not in structures:
            raise OrderedSystemError(f"no structure at index point {x!r}")
    sigs = {M.signature for M in structures.values()}
    if len(sigs) > 1:
        raise OrderedSystemError("structures do not share a signature")

    homs: dict[tuple[str, str], Hom] = {}
    for x in index.elements:
        if (x, x) in homs_given:
            given = dict(homs_given[(x, x)])
            ident = {e: e for e in structures[x].universe}
            if given != ident:
                raise OrderedSystemError(
                    f"identity failure: map at ({x}, {x}) is not the identity")
        homs[(x, x)] = identity_hom(structures[x])

    for x, y in _covers(index):
        if (x, y) not in homs_given:
            raise OrderedSystemError(f"missing connecting map for {x} <= {y}")
    for (x, y), mapping in homs_given.items():
        if x == y:
            continue
        if not index.leq(x, y):
            raise OrderedSystemError(f"map given for unrelated pair ({x}, {y})")
        h = hom(structures[x], structures[y], dict(mapping))
        if not is_homomorphism(h):
            bad = _first_violation(h)
            raise OrderedSystemError(
                f"connecting map {x} -> {y} is not a homomorphism: {bad}")
        homs[(x, y)] = h

    # fill non-cover pairs by composing along the (unique) chain below y,
    # working downward so the upper leg is always available
    for y in index.elements:
        below = sorted((x for x in index.elements
                        if index.leq(x, y) and x != y),
                       key=lambda x: -len(index.down(x)))
        for x in below:
            if (x, y) in homs:
                continue
            mid = next(z for z in below
                       if index.leq(x, z) and z != x and (z, y) in homs
                       and (x, z) in homs)
            homs[(x, y)] = compose_homs(homs[(mid, y)], homs[(x, mid)])

    for x in index.elements:
        for y in index.elements:
            if not index.leq(x, y):
                continue
            for z in index.elements:
                if not index.leq(y, z):
                    continue
                lhs = homs[(x, z)].mapping
                rhs = compose_homs(homs[(y, z)], homs[(x, y)]).mapping
                if lhs != rhs:
                    raise OrderedSystemError(
                        f"functoriality failure at ({x}, {y}, {z})")
    return OrderedSystem(index, dict(structures), homs)


def _first_violation(h: Hom) -> str:
    M, N = h.source, h.target
    for name, tuples in M.relations.items():
        for tup in sorted(tuples):
            if h.image_tuple(tup) not in N.relations[name]:
                return f"edge {name}{tup} not preserved"
    for name, table in M.functions.items():
        for args in sorted(table):
            if N.functions[name][h.image_tuple(args)] != h.mapping[table[args]]:
                return f"function {name} not preserved at {args}"
    for name, value in M.constants.items():
        if h.mapping[value] != N.constants[name]:
            return f"constant {name} not preserved"
    return "unknown violation"


def system_from_dict(raw: dict) -> OrderedSystem:
    if set(raw) != {"poset", "structures", "homs"}:
        raise OrderedSystemError(
            "system object must have exactly the keys poset/structures/homs")
    index = poset_from_dict(raw["poset"])
    structures = {str(x): validate_structure(s) for x, s in raw["structures"].items()}
    homs = {}
    for key, mapping in raw["homs"].items():
        if "->" not in key:
            raise OrderedSystemError(f"hom key {key!r} must look like 'x->y'")
        x, y = key.split("->", 1)
        homs[(x.strip(), y.strip())] = {str(a): str(b) for a, b in mapping.items()}
    return validate_system(index, structures, homs)


def system_to_dict(sys: OrderedSystem) -> dict:
    return {
        "poset": poset_to_dict(sys.index),
        "structures": {x: structure_to_dict(M) for x, M in sys.structures.items()},
        "homs": {f"{x}->{y}": dict(h.mapping)
                 for (x, y), h in sys.homs.items() if x != y},
    }


def constant_system(index: Poset, M: Structure) -> OrderedSystem:
    """The system with M at every point and identity connecting maps."""
    ident = {e: e for e in M.universe}
    homs = {(x, y): ident for x, y in index.le if x != y}
    return validate_system(index, {x: M for x in index.elements}, homs)


@dataclass(frozen=True)
class Section:
    """A coherent choice of elements over an upset domain."""

    domain: frozenset
    values: tuple[tuple[str, str], ...]  # (point, element), sorted by point

    def at(self, x: str) -> str:
        for p, e in self.values:
            if p == x:
                return e
        raise KeyError(x)

    def value_map(self) -> dict:
        return dict(self.values)


def make_section(sys: OrderedSystem, domain, values: dict) -> Section:
    domain = frozenset(domain)
    ordered = tuple(sorted(((x, values[x]) for x in domain),
                           key=lambda pe: sys.index.index(pe[0])))
    return Section(domain, ordered)


def section_key(sys: OrderedSystem, a: Section):
    """Canonical order: (domain bitmask, value tuple)."""
    return (mask_of(sys.index, a.domain), tuple(e for _, e in a.values))


def is_coherent(sys: OrderedSystem, a: Section) -> bool:
    vals = a.value_map()
    for y in a.domain:
        for z in a.domain:
            if sys.index.leq(y, z):
                if sys.homs[(y, z)].mapping[vals[y]] != vals[z]:
                    return False
    return True


def _minimal_elements(p: Poset, subset) -> list[str]:
    return sorted((x for x in subset
                   if not any(y != x and p.leq(y, x) for y in subset)),
                  key=p.index)


def sections(sys: OrderedSystem, V) -> list[Section]:
    """All coherent sections over the upset V, canonically ordered.

    On a forest a section is determined by free choices at the minimal
    elements of V; every choice extends coherently.
    """
    V = frozenset(V)
    if not is_upset(sys.index, V):
        raise PosetError(f"{sorted(V)} is not an upset of the index")
    if not V:
        return [make_section(sys, V, {})]
    mins = _minimal_elements(sys.index, V)
    anchor = {}
    for x in V:
        below = [m for m in mins if sys.index.leq(m, x)]
        anchor[x] = below[0]
    out = []
    for choice in itertools.product(*(sys.structures[m].universe for m in mins)):
        chosen = dict(zip(mins, choice))
        values = {x: sys.homs[(anchor[x], x)].mapping[chosen[anchor[x]]]
                  for x in V}
        out.append(make_section(sys, V, values))
    out.sort(key=lambda a: section_key(sys, a))
    return out


def restrict(sys: OrderedSystem, a: Section, V) -> Section:
    V = frozenset(V)
    if not is_upset(sys.index, V):
        raise PosetError(f"{sorted(V)} is not an upset of the index")
    if not V <= a.domain:
        raise OrderedSystemError("restriction target is not below the domain")
    vals = a.value_map()
    return make_section(sys, V, {x: vals[x] for x in V})


def denotation(sys: OrderedSystem, phi: Formula, args: list[Section]) -> frozenset:
    """The index points where phi holds of the given sections, inside the
    intersection of their domains."""
    names = [var_name(i + 1) for i in range(len(args))]
    missing = free_variables(phi, sys.structures[sys.index.elements[0]].signature) \
        - set(names)
    if missing:
        raise OrderedSystemError(
            f"denotation arity mismatch: unbound {sorted(missing)}")
    common = frozenset(sys.index.elements)
    for a in args:
        common &= a.domain
    out = set()
    for x in common:
        env = {names[i]: args[i].at(x) for i in range(len(args))}
        if evaluate(sys.structures[x], phi, env, check=False):
            out.add(x)
    return frozenset(out)


# ---------------------------------------------------------------------------
# omega-chains with a repeating endomorphism


@dataclass
class OmegaChain:
    """A finite prefix feeding into one structure repeated along an
    endomorphism: N_0 -> ... -> N_{k-1} -> M -e-> M -e-> ..."""

    prefix: tuple[Structure, ...]
    steps: tuple[Hom, ...]
    tail: Structure
    endo: Hom


def make_omega_chain(prefix, steps, tail, endo_mapping) -> OmegaChain:
    prefix = tuple(prefix)
    steps = tuple(steps)
    if len(steps) != len(prefix):
        raise ChainError("need exactly one step map per prefix structure")
    e = hom(tail, tail, dict(endo_mapping))
    if not is_homomorphism(e):
        raise ChainError("endomorphism is not a homomorphism")
    stages = list(prefix) + [tail]
    for i, h in enumerate(steps):
        if h.source != stages[i] or h.target != stages[i + 1]:
            raise ChainError(f"step {i} does not link stage {i} to stage {i + 1}")
        if not is_homomorphism(h):
            raise ChainError(f"step {i} is not a homomorphism")
    return OmegaChain(prefix, steps, tail, e)


def omega_chain_from_dict(raw: dict) -> OmegaChain:
    if set(raw) != {"prefix", "tail", "endo"}:
        raise ChainError("chain object must have exactly the keys prefix/tail/endo")
    tail = validate_structure(raw["tail"])
    prefix, steps = [], []
    entries = list(raw["prefix"])
    for i, entry in enumerate(entries):
        if set(entry) != {"structure", "step"}:
            raise ChainError("prefix entries must have keys structure/step")
        prefix.append(validate_structure(entry["structure"]))
    for i, entry in enumerate(entries):
        target = prefix[i + 1] if i + 1 < len(prefix) else tail
        steps.append(hom(prefix[i], target,
                         {str(a): str(b) for a, b in entry["step"].items()}))
    return make_omega_chain(prefix, steps, tail, raw["endo"])


def endo_cycle(tail: Structure, endo: Hom) -> tuple[list[dict], int, int]:
    """Iterated power tables of the endomorphism with (cycle start, period)."""
    tables = [{e: e for e in tail.universe}]
    while True:
        nxt = {e: endo.mapping[v] for e, v in tables[-1].items()}
        if nxt in tables:
            start = tables.index(nxt)
            return tables, start, len(tables) - start
        tables.append(nxt)


def _power(tables, start: int, period: int, n: int) -> dict:
    if n < len(tables):
        return tables[n]
    return tables[start + (n - start) % period]


@dataclass
class ColimitResult:
    """Direct limit of an omega-chain, with its stage homomorphisms."""

    chain: OmegaChain
    structure: Structure
    class_of: dict[str, str]  # tail element -> colimit element
    members: dict[str, tuple[str, ...]]
    stabilizer: int  # power of the endomorphism that settles membership

    def tail_stage_map(self, j: int = 0) -> Hom:
        """Canonical map from the j-th tail stage into the limit.

        Stage-j element a and stage-0 representative r land on the same
        limit element exactly when their values agree at stage n for
        n = cycle start + period + j, which is late enough to be settled.
        """
        chain = self.chain
        tables, start, period = endo_cycle(chain.tail, chain.endo)
        n = start + period + j
        e_n = _power(tables, start, period, n)
        e_nj = _power(tables, start, period, n - j)
        key_to_rep = {e_n[r]: r for r in self.structure.universe}
        mapping = {a: key_to_rep[e_nj[a]] for a in chain.tail.universe}
        return Hom(chain.tail, self.structure, mapping)

    def prefix_stage_map(self, i: int) -> Hom:
        chain = self.chain
        into_tail = chain.steps[i]
        for j in range(i + 1, len(chain.steps)):
            into_tail = compose_homs(chain.steps[j], into_tail)
        return compose_homs(self.tail_stage_map(0), into_tail)


def omega_colimit(chain: OmegaChain) -> ColimitResult:
    """Direct limit by stabilization of the endomorphism powers.

    Elements merge when some common power of the endomorphism identifies
    them; relations hold when they hold on some power inside the eventual
    cycle.  The prefix does not affect the limit (the tail is cofinal).
    """
    tail = chain.tail
    tables, start, period = endo_cycle(tail, chain.endo)
    k = start + period - 1
    settle = tables[k]
    classes: dict[str, list[str]] = {}
    class_of: dict[str, str] = {}
    by_key: dict[str, str] = {}
    for a in tail.universe:
        rep = by_key.get(settle[a])
        if rep is None:
            by_key[settle[a]] = a
            classes[a] = []
            rep = a
        classes[rep].append(a)
        class_of[a] = rep
    universe = tuple(classes)
    relations = {}
    for name, arity in tail.signature.relations:
        tuples = set()
        for tup in itertools.product(universe, repeat=arity):
            if tuple(settle[x] for x in tup) in tail.relations[name]:
                tuples.add(tup)
        relations[name] = frozenset(tuples)
    functions = {}
    for name, arity in tail.signature.functions:
        table = {}
        for args in itertools.product(universe, repeat=arity):
            table[args] = class_of[tail.functions[name][args]]
        functions[name] = table
    constants = {name: class_of[v] for name, v in tail.constants.items()}
    structure = Structure(tail.signature, universe, relations, functions, constants)
    members = {rep: tuple(ms) for rep, ms in classes.items()}
    return ColimitResult(chain, structure, class_of, members, k)


@dataclass
class OmegaView:
    """An omega-chain limit read as a product along the filter of
    principal upsets: truth of a formula at a tuple of limit elements is
    eventual truth along the chain."""

    chain: OmegaChain
    colimit: ColimitResult

    @property
    def structure(self) -> Structure:
        return self.colimit.structure

    @property
    def prime(self) -> bool:
        return True

    def eventually_true(self, phi: Formula, reps: tuple[str, ...]) -> bool:
        """phi(reps) holds from some chain stage onward (reps are tail
        elements standing for the limit classes through stage 0)."""
        tail = self.chain.tail
        tables, start, period = endo_cycle(tail, self.chain.endo)
        names = [var_name(i + 1) for i in range(len(reps))]
        for k in range(start, start + period):
            env = {names[i]: tables[k][reps[i]] for i in range(len(reps))}
            if not evaluate(tail, phi, env, check=False):
                return False
        return True


def omega_prime_power(chain: OmegaChain) -> OmegaView:
    return OmegaView(chain, omega_colimit(chain))
