import itertools

import pytest

from primeprod import GRAPH, Signature, graph_structure, make_structure


@pytest.fixture
def k2():
    return graph_structure(["a", "b"], [("a", "b")], symmetric=True)


@pytest.fixture
def p3():
    return graph_structure(["u", "v", "w"], [("u", "v"), ("v", "w")], symmetric=True)


@pytest.fixture
def k3():
    return graph_structure(["x1", "x2", "x3"],
                           [("x1", "x2"), ("x2", "x3"), ("x1", "x3")],
                           symmetric=True)


@pytest.fixture
def loop():
    return graph_structure(["l"], [("l", "l")])


def all_digraphs(max_size, loops=True):
    """Every E-structure on canonical universes of size 1..max_size."""
    out = []
    for n in range(1, max_size + 1):
        universe = tuple(f"e{i}" for i in range(1, n + 1))
        pairs = [t for t in itertools.product(universe, repeat=2)
                 if loops or t[0] != t[1]]
        for r in range(len(pairs) + 1):
            for edges in itertools.combinations(pairs, r):
                out.append(graph_structure(universe, edges))
    return out


def digraphs_up_to_iso(max_size, loops=True):
    from primeprod import find_isomorphism

    kept = []
    for candidate in all_digraphs(max_size, loops=loops):
        if not any(len(candidate.universe) == len(other.universe)
                   and find_isomorphism(candidate, other)
                   for other in kept):
            kept.append(candidate)
    return kept


def undirected_graphs_up_to_iso(max_size):
    """Loopless symmetric graphs on 1..max_size vertices, one per iso class."""
    from primeprod import find_isomorphism

    kept = []
    for n in range(1, max_size + 1):
        universe = tuple(f"e{i}" for i in range(1, n + 1))
        pairs = list(itertools.combinations(universe, 2))
        for r in range(len(pairs) + 1):
            for edges in itertools.combinations(pairs, r):
                candidate = graph_structure(universe, edges, symmetric=True)
                if not any(len(candidate.universe) == len(other.universe)
                           and find_isomorphism(candidate, other)
                           for other in kept):
                    kept.append(candidate)
    return kept
