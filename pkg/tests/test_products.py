import itertools

import pytest

from primeprod import (
    FilterError,
    Signature,
    appendix_transform,
    classical_reduced_product,
    classical_ultraproduct,
    constant_system,
    enumerate_filters,
    enumerate_prime_filters,
    filter_product,
    find_isomorphism,
    graph_structure,
    id_poset,
    is_homomorphism,
    is_set_filter,
    is_set_ultrafilter,
    make_filter,
    make_structure,
    point_collapse_map,
    point_filter,
    poset_from_dict,
    prime_product,
    principal_set_ultrafilter,
    principal_upset_filter,
    sections,
    upsets,
    validate_poset,
    validate_system,
)


def chain01(p3, k2):
    poset = validate_poset(["0", "1"], [("0", "0"), ("1", "1"), ("0", "1")])
    return validate_system(poset, {"0": p3, "1": k2},
                           {("0", "1"): {"u": "a", "v": "b", "w": "a"}})


def tree3():
    return poset_from_dict({"elements": ["x", "y", "z"],
                            "le": [["x", "y"], ["x", "z"]]})


class TestFilterProduct:
    def test_improper_filter_collapses(self, k2):
        poset = id_poset(["0", "1"])
        sys = validate_system(poset, {"0": k2, "1": k2}, {})
        improper = make_filter(poset, upsets(poset))
        fp = filter_product(sys, improper)
        assert len(fp.structure.universe) == 1
        # every relation holds on the single class
        only = fp.structure.universe[0]
        assert (only, only) in fp.structure.relations["E"]

    def test_point_filter_on_chain_gives_k2(self, p3, k2):
        sys = chain01(p3, k2)
        fp = filter_product(sys, point_filter(sys.index, "1"))
        assert find_isomorphism(fp.structure, k2) is not None

    def test_whole_space_filter_is_direct_product(self, k2):
        poset = id_poset(["0", "1"])
        sys = validate_system(poset, {"0": k2, "1": k2}, {})
        trivial = make_filter(poset, [frozenset({"0", "1"})])
        fp = filter_product(sys, trivial)
        assert len(fp.structure.universe) == 4
        direct = classical_reduced_product({"0": k2, "1": k2},
                                           [frozenset({"0", "1"})])
        assert find_isomorphism(fp.structure, direct.structure) is not None

    def test_carrier_names_and_provenance(self, p3, k2):
        sys = chain01(p3, k2)
        fp = filter_product(sys, point_filter(sys.index, "1"))
        assert [cls.name for cls in fp.classes] == \
            [f"cls{i}" for i in range(len(fp.classes))]
        for cls in fp.classes:
            assert cls.representative in cls.members
            assert fp.filter.contains(cls.representative.domain)

    def test_class_partition_covers_all_sections(self, p3, k2):
        sys = chain01(p3, k2)
        F = point_filter(sys.index, "1")
        fp = filter_product(sys, F)
        total = sum(len(sections(sys, V)) for V in F.family)
        assert sum(len(cls.members) for cls in fp.classes) == total


class TestPrimeProduct:
    def test_constant_tree_point_filter(self, k2):
        sys = constant_system(tree3(), k2)
        fp = prime_product(sys, point_filter(sys.index, "y"))
        assert fp.prime
        assert find_isomorphism(fp.structure, k2) is not None

    def test_chain_principal_upset_filter_is_limit(self, p3, k2):
        sys = chain01(p3, k2)
        fp = prime_product(sys, principal_upset_filter(sys.index))
        assert find_isomorphism(fp.structure, k2) is not None

    def test_non_prime_rejected(self, k2):
        sys = constant_system(tree3(), k2)
        fam = make_filter(sys.index, [frozenset({"y", "z"}),
                                      frozenset({"x", "y", "z"})])
        with pytest.raises(FilterError, match="not prime"):
            prime_product(sys, fam)

    def test_point_collapse_map_is_iso(self, p3, k2, k3):
        tree = tree3()
        sys = validate_system(
            tree, {"x": p3, "y": k2, "z": k3},
            {("x", "y"): {"u": "a", "v": "b", "w": "a"},
             ("x", "z"): {"u": "x1", "v": "x2", "w": "x1"}})
        for pt in tree.elements:
            fp = prime_product(sys, point_filter(tree, pt))
            h = point_collapse_map(fp, pt)
            assert is_homomorphism(h)
            assert len(set(h.mapping.values())) == len(fp.structure.universe)


class TestWellDefinedness:
    def test_relation_membership_class_invariant(self, p3, k2):
        # swapping representatives for any members of their classes never
        # changes relation membership (the quotient is well defined)
        from primeprod import Rel, Var, denotation

        sys = chain01(p3, k2)
        for F in enumerate_filters(sys.index):
            fp = filter_product(sys, F)
            phi = Rel("E", (Var("v1"), Var("v2")))
            for c1 in fp.classes:
                for c2 in fp.classes:
                    expected = (c1.name, c2.name) in fp.structure.relations["E"]
                    for a in c1.members:
                        for b in c2.members:
                            assert F.contains(denotation(sys, phi, [a, b])) \
                                == expected

    def test_exhaustive_well_definedness_small(self):
        # all filters on a 2-chain of 2-element structures
        a2 = graph_structure(["p", "q"], [("p", "q")])
        b2 = graph_structure(["r", "s"], [("r", "s"), ("s", "s")])
        poset = validate_poset(["0", "1"], [("0", "0"), ("1", "1"), ("0", "1")])
        sys = validate_system(poset, {"0": a2, "1": b2},
                              {("0", "1"): {"p": "r", "q": "s"}})
        from primeprod import Rel, Var, denotation

        phi = Rel("E", (Var("v1"), Var("v2")))
        for F in enumerate_filters(poset):
            fp = filter_product(sys, F)
            for c1, c2 in itertools.product(fp.classes, repeat=2):
                vals = {F.contains(denotation(sys, phi, [a, b]))
                        for a in c1.members for b in c2.members}
                assert len(vals) == 1


class TestClassicalProducts:
    def test_trivial_filter_direct_product(self, k2):
        rp = classical_reduced_product({"0": k2, "1": k2},
                                       [frozenset({"0", "1"})])
        assert len(rp.structure.universe) == 4

    def test_principal_ultrafilter_projects(self, k2, k3):
        U = principal_set_ultrafilter(["0", "1"], "0")
        up = classical_ultraproduct({"0": k2, "1": k3}, U)
        assert find_isomorphism(up.structure, k2) is not None

    def test_set_filter_predicates(self):
        pts = ["0", "1"]
        assert is_set_filter(pts, [frozenset({"0", "1"})])
        assert not is_set_filter(pts, [])
        assert is_set_ultrafilter(pts, principal_set_ultrafilter(pts, "1"))
        assert not is_set_ultrafilter(pts, [frozenset({"0", "1"})])

    def test_filter_product_over_id_matches_reduced(self, k2, p3):
        # the reduced-product correspondence on a two-point index
        factors = {"0": k2, "1": p3}
        poset = id_poset(["0", "1"])
        sys = validate_system(poset, factors, {})
        subsets = [frozenset(), frozenset({"0"}), frozenset({"1"}),
                   frozenset({"0", "1"})]
        for r in range(1, 5):
            for fam in itertools.combinations(subsets, r):
                if not is_set_filter(["0", "1"], fam):
                    continue
                rp = classical_reduced_product(factors, fam)
                F = make_filter(poset, [frozenset(s) for s in fam])
                fp = filter_product(sys, F)
                assert find_isomorphism(fp.structure, rp.structure) is not None


class TestAppendixTransform:
    def _single(self, M, name_prefix):
        name = f"{name_prefix}0"
        poset = validate_poset([name], [(name, name)])
        return validate_system(poset, {name: M}, {})

    def _chain(self, stages, homs, prefix):
        names = [f"{prefix}{i}" for i in range(len(stages))]
        poset = poset_from_dict({
            "elements": names,
            "le": [[names[i], names[i + 1]] for i in range(len(names) - 1)]})
        return validate_system(
            poset, dict(zip(names, stages)),
            {(names[i], names[i + 1]): homs[i] for i in range(len(homs))})

    def test_two_chains_principal_at_one(self, p3, k2):
        x0 = self._single(p3, "a")
        x1 = self._chain([p3, k2], [{"u": "a", "v": "b", "w": "a"}], "b")
        bundle = appendix_transform([x0, x1], 1)
        assert bundle.verified
        assert find_isomorphism(bundle.ultraproduct.structure, k2) is not None
        assert find_isomorphism(bundle.primeproduct.structure, k2) is not None

    def test_single_chain_reduces_to_limit(self, p3, k2):
        x0 = self._chain([p3, k2], [{"u": "a", "v": "b", "w": "a"}], "c")
        bundle = appendix_transform([x0], 0)
        assert bundle.verified
        assert find_isomorphism(bundle.primeproduct.structure, k2) is not None

    def test_principal_at_zero_gives_first_chain(self, p3, k2):
        x0 = self._single(p3, "a")
        x1 = self._chain([p3, k2], [{"u": "a", "v": "b", "w": "a"}], "b")
        bundle = appendix_transform([x0, x1], 0)
        assert bundle.verified
        assert find_isomorphism(bundle.ultraproduct.structure, p3) is not None
        assert find_isomorphism(bundle.primeproduct.structure, p3) is not None

    def test_assembled_filter_is_prime(self, p3, k2, k3):
        x0 = self._single(k3, "a")
        x1 = self._chain([p3, k2], [{"u": "a", "v": "b", "w": "a"}], "b")
        for at in (0, 1):
            bundle = appendix_transform([x0, x1], at)
            assert bundle.checks["filter_is_prime"]

    def test_presentation_choice_is_immaterial(self, p3, k2):
        x0 = self._single(p3, "a")
        x1 = self._chain([p3, k2], [{"u": "a", "v": "b", "w": "a"}], "b")
        least = appendix_transform([x0, x1], 1, presentation="least")
        greatest = appendix_transform([x0, x1], 1, presentation="greatest")
        assert least.ghat == greatest.ghat

    def test_name_clash_rejected(self, p3):
        from primeprod import ProductError

        x0 = self._single(p3, "a")
        x1 = self._single(p3, "a")
        with pytest.raises(ProductError, match="share index names"):
            appendix_transform([x0, x1], 0)

    def test_bad_ultrafilter_index(self, p3):
        x0 = self._single(p3, "a")
        with pytest.raises(FilterError, match="principal"):
            appendix_transform([x0], 3)
