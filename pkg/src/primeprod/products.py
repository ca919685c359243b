"""Filter and prime products of ordered systems, classical reduced
products and ultraproducts over plain index sets, and the assembly that
rebuilds an ultraproduct of chain limits as one prime product.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import FilterError, ProductError
from .formulas import Rel, Var, var_name
from .posets import (
    Filter,
    Poset,
    is_chain,
    is_filter,
    is_prime_filter,
    upsets,
    validate_poset,
)
from .structures import Hom, Structure, compose_homs, is_homomorphism
from .systems import (
    OrderedSystem,
    Section,
    denotation,
    make_section,
    section_key,
    sections,
    validate_system,
)


@dataclass
class ProductClass:
    """One element of a product carrier: a canonical representative
    section together with every section in its class."""

    name: str
    representative: Section
    members: tuple[Section, ...]


@dataclass
class FilterProduct:
    system: OrderedSystem
    filter: Filter
    classes: tuple[ProductClass, ...]
    structure: Structure
    prime: bool

    def representative(self, name: str) -> Section:
        for cls in self.classes:
            if cls.name == name:
                return cls.representative
        raise ProductError(f"no carrier element named {name!r}")

    def class_of(self, section: Section) -> str:
        """The carrier element whose class contains the given section."""
        if not self.filter.contains(section.domain):
            raise ProductError("section domain is not a filter member")
        for cls in self.classes:
            if _equivalent(self.system, self.filter, section, cls.representative):
                return cls.name
        raise ProductError("section does not belong to any class")


def _agreement_set(sys: OrderedSystem, a: Section, b: Section) -> frozenset:
    common = a.domain & b.domain
    va, vb = a.value_map(), b.value_map()
    return frozenset(x for x in common if va[x] == vb[x])


def _equivalent(sys: OrderedSystem, F: Filter, a: Section, b: Section) -> bool:
    return F.contains(_agreement_set(sys, a, b))


def filter_product(sys: OrderedSystem, F: Filter) -> FilterProduct:
    """The quotient of coherent sections with filter-member domains by
    agreement on a filter member."""
    if F.poset != sys.index:
        raise ProductError("filter is over a different poset than the system")
    if not F.family:
        raise FilterError("empty filter")
    if not is_filter(sys.index, F.family):
        raise FilterError("family is not a filter")

    pool: list[Section] = []
    for V in F.family:
        pool.extend(sections(sys, V))
    pool.sort(key=lambda a: section_key(sys, a))

    classes: list[tuple[Section, list[Section]]] = []
    for a in pool:
        for rep, members in classes:
            if _equivalent(sys, F, a, rep):
                members.append(a)
                break
        else:
            classes.append((a, [a]))

    carrier = tuple(
        ProductClass(f"cls{i}", rep, tuple(members))
        for i, (rep, members) in enumerate(classes)
    )

    def name_of(section: Section) -> str:
        for cls in carrier:
            if _equivalent(sys, F, section, cls.representative):
                return cls.name
        raise ProductError("section escaped the carrier")  # unreachable

    sig = sys.structures[sys.index.elements[0]].signature
    universe = tuple(cls.name for cls in carrier)
    reps = {cls.name: cls.representative for cls in carrier}

    relations = {}
    for rname, arity in sig.relations:
        phi = Rel(rname, tuple(Var(var_name(i + 1)) for i in range(arity)))
        tuples = set()
        for tup in itertools.product(universe, repeat=arity):
            den = denotation(sys, phi, [reps[t] for t in tup])
            if F.contains(den):
                tuples.add(tup)
        relations[rname] = frozenset(tuples)

    functions = {}
    for fname, arity in sig.functions:
        table = {}
        for tup in itertools.product(universe, repeat=arity):
            args = [reps[t] for t in tup]
            V = frozenset(sys.index.elements)
            for a in args:
                V &= a.domain
            values = {x: sys.structures[x].functions[fname][
                tuple(a.at(x) for a in args)] for x in V}
            table[tup] = name_of(make_section(sys, V, values))
        functions[fname] = table

    constants = {}
    for cname in sig.constants:
        X = frozenset(sys.index.elements)
        values = {x: sys.structures[x].constants[cname] for x in X}
        constants[cname] = name_of(make_section(sys, X, values))

    structure = Structure(sig, universe, relations, functions, constants)
    prime = is_prime_filter(sys.index, F.family)
    return FilterProduct(sys, F, carrier, structure, prime)


def prime_product(sys: OrderedSystem, F: Filter) -> FilterProduct:
    if not is_prime_filter(sys.index, F.family):
        raise FilterError("filter not prime")
    return filter_product(sys, F)


def point_collapse_map(fp: FilterProduct, x: str) -> Hom:
    """The canonical map M_x -> product at a point filter: m goes to the
    class of the section y |-> f_xy(m) over the upset of x."""
    sys = fp.system
    M = sys.structures[x]
    up = sys.index.up(x)
    mapping = {}
    for m in M.universe:
        section = make_section(sys, up,
                               {y: sys.homs[(x, y)].mapping[m] for y in up})
        mapping[m] = fp.class_of(section)
    return Hom(M, fp.structure, mapping)


# ---------------------------------------------------------------------------
# classical constructions over plain index sets (the textbook oracles)


def is_set_filter(points, family) -> bool:
    """Filter over a set: nonempty, superset-closed, intersection-closed."""
    points = frozenset(points)
    fam = {frozenset(s) for s in family}
    if not fam or any(not s <= points for s in fam):
        return False
    for s in fam:
        for t in map(frozenset, _subsets(points)):
            if s <= t and t not in fam:
                return False
    return all(s & t in fam for s in fam for t in fam)


def is_set_ultrafilter(points, family) -> bool:
    points = frozenset(points)
    fam = {frozenset(s) for s in family}
    if not is_set_filter(points, fam) or frozenset() in fam:
        return False
    return all(s in fam or points - s in fam for s in map(frozenset, _subsets(points)))


def _subsets(points):
    points = sorted(points)
    for r in range(len(points) + 1):
        yield from map(frozenset, itertools.combinations(points, r))


def principal_set_ultrafilter(points, at) -> frozenset:
    return frozenset(s for s in _subsets(points) if at in s)


@dataclass
class ClassicalProduct:
    """Textbook reduced product of an indexed family."""

    index: tuple[str, ...]
    factors: dict[str, Structure]
    filter: frozenset
    structure: Structure
    classes: dict[str, tuple[tuple[str, ...], ...]]  # name -> member tuples

    def representative(self, name: str) -> tuple[str, ...]:
        return self.classes[name][0]


def classical_reduced_product(factors: dict, family) -> ClassicalProduct:
    """Direct product modulo agreement on a filter member; relations hold
    when their truth set belongs to the filter."""
    index = tuple(factors)
    fam = frozenset(frozenset(s) for s in family)
    if not is_set_filter(index, fam):
        raise FilterError("family is not a filter over the index set")
    sigs = {M.signature for M in factors.values()}
    if len(sigs) != 1:
        raise ProductError("factors do not share a signature")
    sig = sigs.pop()

    tuples_all = list(itertools.product(*(factors[i].universe for i in index)))

    def agree(u, v):
        return frozenset(i for k, i in enumerate(index) if u[k] == v[k])

    classes: list[tuple[tuple, list[tuple]]] = []
    for u in tuples_all:
        for rep, members in classes:
            if agree(u, rep) in fam:
                members.append(u)
                break
        else:
            classes.append((u, [u]))

    universe = tuple(f"cls{i}" for i in range(len(classes)))
    reps = {f"cls{i}": rep for i, (rep, _) in enumerate(classes)}

    def name_of(u):
        for i, (rep, _) in enumerate(classes):
            if agree(u, rep) in fam:
                return f"cls{i}"
        raise ProductError("tuple escaped the carrier")  # unreachable

    relations = {}
    for rname, arity in sig.relations:
        rel = set()
        for tup in itertools.product(universe, repeat=arity):
            truth = frozenset(
                i for k, i in enumerate(index)
                if tuple(reps[t][k] for t in tup) in factors[i].relations[rname])
            if truth in fam:
                rel.add(tup)
        relations[rname] = frozenset(rel)

    functions = {}
    for fname, arity in sig.functions:
        table = {}
        for tup in itertools.product(universe, repeat=arity):
            value = tuple(
                factors[i].functions[fname][tuple(reps[t][k] for t in tup)]
                for k, i in enumerate(index))
            table[tup] = name_of(value)
        functions[fname] = table

    constants = {}
    for cname in sig.constants:
        constants[cname] = name_of(tuple(factors[i].constants[cname] for i in index))

    structure = Structure(sig, universe, relations, functions, constants)
    class_map = {f"cls{i}": tuple(members)
                 for i, (_, members) in enumerate(classes)}
    return ClassicalProduct(index, dict(factors), fam, structure, class_map)


def classical_ultraproduct(factors: dict, family) -> ClassicalProduct:
    if not is_set_ultrafilter(tuple(factors), family):
        raise FilterError("family is not an ultrafilter over the index set")
    return classical_reduced_product(factors, family)


# ---------------------------------------------------------------------------
# ultraproducts of chain limits as prime products


@dataclass
class AppendixBundle:
    """An ultraproduct of finite-chain limits, rebuilt as a prime product
    over the disjoint union of the chains, with the witnessing map."""

    chains: tuple[OrderedSystem, ...]
    ultra_at: int
    poset: Poset
    filter: Filter
    union_system: OrderedSystem
    colimits: tuple[Structure, ...]
    ultraproduct: ClassicalProduct
    primeproduct: FilterProduct
    ghat: dict[str, str]
    checks: dict[str, bool]

    @property
    def verified(self) -> bool:
        return all(self.checks.values())


def _chain_top(sys: OrderedSystem) -> str:
    return max(sys.index.elements, key=lambda x: len(sys.index.down(x)))


def _presentation(sys: OrderedSystem, element: str, choice: str):
    """Earliest (or latest) chain stage presenting a limit element, with
    the presenting member."""
    top = _chain_top(sys)
    order = sorted(sys.index.elements, key=lambda x: len(sys.index.down(x)))
    if choice == "greatest":
        order = order[::-1]
    for z in order:
        fiber = [m for m in sys.structures[z].universe
                 if sys.homs[(z, top)].mapping[m] == element]
        if fiber:
            return z, fiber[0]
    raise ProductError(f"element {element!r} missing from the chain top")


def appendix_transform(chains, ultra_at: int, presentation: str = "least") -> AppendixBundle:
    """Assemble the prime product matching an ultraproduct of chain limits.

    Each chain is a linearly ordered system; its limit is the structure at
    the top.  The ultrafilter over the chain indices is principal (they
    are finitely many), given by the index of its generator.
    """
    chains = tuple(chains)
    if not chains:
        raise ProductError("need at least one chain")
    for c in chains:
        if not is_chain(c.index):
            raise ProductError("every input system must be indexed by a chain")
    if not 0 <= ultra_at < len(chains):
        raise FilterError("ultrafilter generator out of range; "
                          "finite ultrafilters are principal")
    names = [x for c in chains for x in c.index.elements]
    if len(set(names)) != len(names):
        raise ProductError("chains share index names")

    kappa = [str(i) for i in range(len(chains))]
    ultra = principal_set_ultrafilter(kappa, str(ultra_at))

    elements = tuple(names)
    le = [(x, y) for c in chains for (x, y) in c.index.le]
    poset = validate_poset(elements, le)
    union = validate_system(
        poset,
        {x: c.structures[x] for c in chains for x in c.index.elements},
        {(x, y): c.homs[(x, y)].mapping
         for c in chains for (x, y) in c.index.le if x != y},
    )

    blocks = [frozenset(c.index.elements) for c in chains]
    family = tuple(
        V for V in upsets(poset)
        if frozenset(str(i) for i, b in enumerate(blocks) if b & V) in ultra
    )
    F = Filter(poset, family)
    checks = {"filter_is_prime": is_prime_filter(poset, F.family)}

    tops = [_chain_top(c) for c in chains]
    colimits = tuple(c.structures[tops[i]] for i, c in enumerate(chains))

    factors = {str(i): colimits[i] for i in range(len(chains))}
    up = classical_ultraproduct(factors, ultra)
    fp = filter_product(union, F)
    checks["product_filter_recorded_prime"] = fp.prime

    def section_of(choice_tuple) -> Section:
        stages = [_presentation(chains[i], choice_tuple[i], presentation)
                  for i in range(len(chains))]
        domain = set()
        values = {}
        for i, c in enumerate(chains):
            z, m = stages[i]
            for x in c.index.elements:
                if c.index.leq(z, x):
                    domain.add(x)
                    values[x] = c.homs[(z, x)].mapping[m]
        return make_section(union, frozenset(domain), values)

    sections_ok = True
    for choice in itertools.product(*(colimits[i].universe for i in range(len(chains)))):
        a = section_of(choice)
        if not F.contains(a.domain):
            sections_ok = False
    checks["choice_sections_in_filter"] = sections_ok

    ghat = {}
    well_defined = True
    for name, members in up.classes.items():
        images = {fp.class_of(section_of(member)) for member in members}
        if len(images) != 1:
            well_defined = False
        ghat[name] = fp.class_of(section_of(up.classes[name][0]))
    checks["map_well_defined"] = well_defined

    forward = Hom(up.structure, fp.structure, ghat)
    bijective = (len(set(ghat.values())) == len(ghat)
                 and set(ghat.values()) == set(fp.structure.universe))
    checks["map_bijective"] = bijective
    checks["map_is_isomorphism"] = bool(
        bijective and is_homomorphism(forward)
        and is_homomorphism(Hom(fp.structure, up.structure,
                                {v: k for k, v in ghat.items()})))

    return AppendixBundle(chains, ultra_at, poset, F, union, colimits, up, fp,
                          ghat, checks)
