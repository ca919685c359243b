"""Finite relational/functional structures and homomorphism search.

A structure is a finite named universe together with interpretations of
the relation, function, and constant symbols of a signature.  Element
order is the declaration order of the universe and is the canonical
order used by every deterministic search in the package.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import HomError, SignatureError, StructureError


@dataclass(frozen=True)
class Signature:
    """Relation/function/constant symbols with arities.

    Names must be pairwise distinct across the three kinds; relation
    arities may be 0 (propositional flags), function arities must be
    at least 1.
    """

    relations: tuple[tuple[str, int], ...] = ()
    functions: tuple[tuple[str, int], ...] = ()
    constants: tuple[str, ...] = ()

    def __post_init__(self):
        names = [n for n, _ in self.relations]
        names += [n for n, _ in self.functions]
        names += list(self.constants)
        if len(set(names)) != len(names):
            raise SignatureError("symbol names must be pairwise distinct")
        for name, arity in self.relations:
            if arity < 0:
                raise SignatureError(f"relation {name} has negative arity")
        for name, arity in self.functions:
            if arity < 1:
                raise SignatureError(f"function {name} must have arity >= 1")

    def relation_arity(self, name: str) -> int:
        for n, a in self.relations:
            if n == name:
                return a
        raise SignatureError(f"unknown relation symbol {name!r}")

    def function_arity(self, name: str) -> int:
        for n, a in self.functions:
            if n == name:
                return a
        raise SignatureError(f"unknown function symbol {name!r}")

    def is_constant(self, name: str) -> bool:
        return name in self.constants


GRAPH = Signature(relations=(("E", 2),))


@dataclass
class Structure:
    """A finite structure; treat as immutable after validation."""

    signature: Signature
    universe: tuple[str, ...]
    relations: dict[str, frozenset[tuple[str, ...]]]
    functions: dict[str, dict[tuple[str, ...], str]]
    constants: dict[str, str]

    def index(self, element: str) -> int:
        return self.universe.index(element)

    def __repr__(self):
        return f"Structure(universe={list(self.universe)})"


def make_structure(signature, universe, relations=None, functions=None,
                   constants=None) -> Structure:
    """Validated constructor; raises StructureError on any violation."""
    universe = tuple(universe)
    if not universe:
        raise StructureError("empty universe")
    if len(set(universe)) != len(universe):
        raise StructureError("duplicate element names in universe")
    elems = set(universe)
    relations = {k: v for k, v in (relations or {}).items()}
    functions = {k: v for k, v in (functions or {}).items()}
    constants = dict(constants or {})

    rel_out = {}
    for name, arity in signature.relations:
        tuples = set()
        for tup in relations.get(name, ()):  # noqa: B007
            tup = tuple(tup)
            if len(tup) != arity:
                raise StructureError(
                    f"relation {name} expects arity {arity}, got tuple {tup}")
            for e in tup:
                if e not in elems:
                    raise StructureError(
                        f"tuple out of range: {name}{tup} uses unknown element {e!r}")
            tuples.add(tup)
        rel_out[name] = frozenset(tuples)
    for name in relations:
        if name not in rel_out:
            raise StructureError(f"unknown symbol {name!r} in relations")

    fun_out = {}
    for name, arity in signature.functions:
        table = {}
        for args, value in functions.get(name, {}).items():
            args = tuple(args)
            if len(args) != arity:
                raise StructureError(
                    f"function {name} expects arity {arity}, got args {args}")
            if any(e not in elems for e in args) or value not in elems:
                raise StructureError(
                    f"tuple out of range: {name}{args} -> {value!r}")
            table[args] = value
        for args in itertools.product(universe, repeat=arity):
            if args not in table:
                raise StructureError(
                    f"partial function: {name} undefined on {args}")
        fun_out[name] = table
    for name in functions:
        if name not in fun_out:
            raise StructureError(f"unknown symbol {name!r} in functions")

    con_out = {}
    for name in signature.constants:
        if name not in constants:
            raise StructureError(f"constant {name} is uninterpreted")
        if constants[name] not in elems:
            raise StructureError(
                f"tuple out of range: constant {name} -> {constants[name]!r}")
        con_out[name] = constants[name]
    for name in constants:
        if name not in con_out:
            raise StructureError(f"unknown symbol {name!r} in constants")

    return Structure(signature, universe, rel_out, fun_out, con_out)


_STRUCTURE_KEYS = {"signature", "universe", "relations", "functions", "constants"}
_SIGNATURE_KEYS = {"relations", "functions", "constants"}


def validate_structure(raw: dict) -> Structure:
    """Validate the JSON-dict structure format.

    Exact key set required; unknown keys are rejected.
    """
    if not isinstance(raw, dict):
        raise StructureError("structure description must be an object")
    unknown = set(raw) - _STRUCTURE_KEYS
    if unknown:
        raise StructureError(f"unknown keys in structure: {sorted(unknown)}")
    missing = _STRUCTURE_KEYS - set(raw)
    if missing:
        raise StructureError(f"missing keys in structure: {sorted(missing)}")
    rawsig = raw["signature"]
    if not isinstance(rawsig, dict) or set(rawsig) - _SIGNATURE_KEYS:
        raise StructureError("signature must have keys relations/functions/constants")
    sig = Signature(
        relations=tuple((str(n), int(a)) for n, a in rawsig.get("relations", [])),
        functions=tuple((str(n), int(a)) for n, a in rawsig.get("functions", [])),
        constants=tuple(str(c) for c in rawsig.get("constants", [])),
    )
    functions = {
        name: {tuple(args): value for args, value in entries}
        for name, entries in raw["functions"].items()
    } if isinstance(raw["functions"], dict) else raw["functions"]
    return make_structure(sig, raw["universe"], raw["relations"], functions,
                          raw["constants"])


def structure_to_dict(M: Structure) -> dict:
    return {
        "signature": {
            "relations": [[n, a] for n, a in M.signature.relations],
            "functions": [[n, a] for n, a in M.signature.functions],
            "constants": list(M.signature.constants),
        },
        "universe": list(M.universe),
        "relations": {n: sorted(list(t) for t in tups)
                      for n, tups in M.relations.items()},
        "functions": {n: sorted([list(a), v] for a, v in table.items())
                      for n, table in M.functions.items()},
        "constants": dict(sorted(M.constants.items())),
    }


def graph_structure(vertices, edges, symmetric=False) -> Structure:
    """Convenience builder for E-graphs; symmetric=True closes edges."""
    edges = {tuple(e) for e in edges}
    if symmetric:
        edges |= {(b, a) for a, b in edges}
    return make_structure(GRAPH, vertices, {"E": edges})


@dataclass
class Hom:
    """A total map between structures over one signature."""

    source: Structure
    target: Structure
    mapping: dict[str, str]

    def __call__(self, element: str) -> str:
        return self.mapping[element]

    def image_tuple(self, tup):
        return tuple(self.mapping[e] for e in tup)

    def as_pairs(self):
        return tuple((e, self.mapping[e]) for e in self.source.universe)

    def __repr__(self):
        inner = ", ".join(f"{a}->{b}" for a, b in self.as_pairs())
        return f"Hom({{{inner}}})"


def hom(source: Structure, target: Structure, mapping: dict) -> Hom:
    if source.signature != target.signature:
        raise HomError("signature mismatch between source and target")
    missing = [e for e in source.universe if e not in mapping]
    if missing:
        raise HomError(f"map is not total: missing {missing}")
    bad = [v for v in mapping.values() if v not in target.universe]
    if bad:
        raise HomError(f"map values outside target universe: {bad}")
    return Hom(source, target, dict(mapping))


def identity_hom(M: Structure) -> Hom:
    return Hom(M, M, {e: e for e in M.universe})


def compose_homs(outer: Hom, inner: Hom) -> Hom:
    """outer o inner, defined when inner.target is outer.source."""
    if inner.target is not outer.source and inner.target != outer.source:
        raise HomError("composition mismatch: inner.target != outer.source")
    return Hom(inner.source, outer.target,
               {e: outer.mapping[inner.mapping[e]] for e in inner.source.universe})


def is_homomorphism(h: Hom) -> bool:
    """Pointwise check: relations preserved, functions commute, constants map."""
    M, N = h.source, h.target
    if M.signature != N.signature:
        raise HomError("signature mismatch")
    for name, tuples in M.relations.items():
        target = N.relations[name]
        for tup in tuples:
            if h.image_tuple(tup) not in target:
                return False
    for name, table in M.functions.items():
        ntable = N.functions[name]
        for args, value in table.items():
            if ntable[h.image_tuple(args)] != h.mapping[value]:
                return False
    for name, value in M.constants.items():
        if h.mapping[value] != N.constants[name]:
            return False
    return True


def _participation(M: Structure):
    """For each element, the relation tuples and function instances touching it."""
    rel_by_elem = {e: [] for e in M.universe}
    for name, tuples in M.relations.items():
        for tup in tuples:
            for e in set(tup):
                rel_by_elem[e].append((name, tup))
    fun_by_elem = {e: [] for e in M.universe}
    for name, table in M.functions.items():
        for args, value in table.items():
            for e in set(args) | {value}:
                fun_by_elem[e].append((name, args, value))
    return rel_by_elem, fun_by_elem


def enumerate_homs(M: Structure, N: Structure, limit=None, fixed=None) -> list[Hom]:
    """All homomorphisms M -> N by backtracking with forward pruning.

    Results are ordered lexicographically by the image tuple, images
    ranging over N's universe in declaration order.  `fixed` pins a
    partial assignment (used for retraction search).
    """
    if M.signature != N.signature:
        raise HomError("signature mismatch")
    if fixed:
        for e, v in fixed.items():
            if e not in M.universe or v not in N.universe:
                raise HomError(f"fixed pair {e!r}->{v!r} out of range")
    rel_by_elem, fun_by_elem = _participation(M)
    order = M.universe
    assigned: dict[str, str] = {}
    out: list[Hom] = []

    def consistent(e: str) -> bool:
        for name, tup in rel_by_elem[e]:
            if all(x in assigned for x in tup):
                if tuple(assigned[x] for x in tup) not in N.relations[name]:
                    return False
        for name, args, value in fun_by_elem[e]:
            if value in assigned and all(x in assigned for x in args):
                img = N.functions[name][tuple(assigned[x] for x in args)]
                if img != assigned[value]:
                    return False
        cname = next((c for c, v in M.constants.items() if v == e), None)
        if cname is not None and assigned[e] != N.constants[cname]:
            return False
        return True

    def backtrack(i: int):
        if limit is not None and len(out) >= limit:
            return
        if i == len(order):
            out.append(Hom(M, N, dict(assigned)))
            return
        e = order[i]
        candidates = (fixed[e],) if fixed and e in fixed else N.universe
        for t in candidates:
            assigned[e] = t
            if consistent(e):
                backtrack(i + 1)
            del assigned[e]

    backtrack(0)
    return out


def _profile(M: Structure, e: str):
    rel = tuple(
        tuple(sum(1 for tup in M.relations[name] if tup[i] == e)
              for i in range(arity))
        for name, arity in M.signature.relations
    )
    fun = tuple(
        (
            tuple(sum(1 for args in M.functions[name] if args[i] == e)
                  for i in range(arity)),
            sum(1 for v in M.functions[name].values() if v == e),
        )
        for name, arity in M.signature.functions
    )
    consts = tuple(sorted(c for c, v in M.constants.items() if v == e))
    return rel, fun, consts


def find_isomorphism(M: Structure, N: Structure) -> Hom | None:
    """First isomorphism in search order, or None.

    Plain backtracking with per-element profile pruning; the inverse is
    verified to be a homomorphism before a candidate is accepted.
    """
    if M.signature != N.signature:
        raise HomError("signature mismatch")
    if len(M.universe) != len(N.universe):
        return None
    for name, _ in M.signature.relations:
        if len(M.relations[name]) != len(N.relations[name]):
            return None
    prof_n = {e: _profile(N, e) for e in N.universe}
    prof_m = {e: _profile(M, e) for e in M.universe}
    if sorted(prof_m.values()) != sorted(prof_n.values()):
        return None
    rel_by_elem, fun_by_elem = _participation(M)
    assigned: dict[str, str] = {}
    used: set[str] = set()

    def consistent(e: str) -> bool:
        for name, tup in rel_by_elem[e]:
            if all(x in assigned for x in tup):
                if tuple(assigned[x] for x in tup) not in N.relations[name]:
                    return False
        for name, args, value in fun_by_elem[e]:
            if value in assigned and all(x in assigned for x in args):
                if N.functions[name][tuple(assigned[x] for x in args)] != assigned[value]:
                    return False
        cname = next((c for c, v in M.constants.items() if v == e), None)
        if cname is not None and assigned[e] != N.constants[cname]:
            return False
        return True

    def backtrack(i: int) -> Hom | None:
        if i == len(M.universe):
            h = Hom(M, N, dict(assigned))
            inv = Hom(N, M, {v: k for k, v in assigned.items()})
            if is_homomorphism(h) and is_homomorphism(inv):
                return h
            return None
        e = M.universe[i]
        for t in N.universe:
            if t in used or prof_n[t] != prof_m[e]:
                continue
            assigned[e] = t
            used.add(t)
            if consistent(e):
                found = backtrack(i + 1)
                if found is not None:
                    return found
            del assigned[e]
            used.discard(t)
        return None

    return backtrack(0)
