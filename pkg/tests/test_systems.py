import itertools

import pytest

from primeprod import (
    ChainError,
    OrderedSystemError,
    Signature,
    constant_system,
    denotation,
    graph_structure,
    id_poset,
    is_coherent,
    make_omega_chain,
    make_section,
    make_structure,
    omega_chain_from_dict,
    omega_colimit,
    omega_prime_power,
    parse_formula,
    poset_from_dict,
    restrict,
    sections,
    system_from_dict,
    system_to_dict,
    validate_poset,
    validate_system,
    find_isomorphism,
    is_homomorphism,
)


def chain_poset():
    return validate_poset(["0", "1"], [("0", "0"), ("1", "1"), ("0", "1")])


@pytest.fixture
def p3k2_system(p3, k2):
    return validate_system(chain_poset(), {"0": p3, "1": k2},
                           {("0", "1"): {"u": "a", "v": "b", "w": "a"}})


class TestValidateSystem:
    def test_valid_chain(self, p3k2_system):
        assert p3k2_system.homs[("0", "1")].mapping == {"u": "a", "v": "b", "w": "a"}

    def test_edge_not_preserved(self, p3, k2):
        with pytest.raises(OrderedSystemError, match="not a homomorphism"):
            validate_system(chain_poset(), {"0": p3, "1": k2},
                            {("0", "1"): {"u": "a", "v": "a", "w": "a"}})

    def test_diamond_index_rejected(self, k2):
        diamond = poset_from_dict({
            "elements": ["b", "l", "r", "t"],
            "le": [["b", "l"], ["b", "r"], ["l", "t"], ["r", "t"]],
        })
        ident = {e: e for e in k2.universe}
        with pytest.raises(OrderedSystemError, match="wellfounded forest"):
            validate_system(diamond, {x: k2 for x in diamond.elements},
                            {pair: ident for pair in
                             [("b", "l"), ("b", "r"), ("l", "t"), ("r", "t")]})

    def test_functoriality_violation(self, k2):
        chain3 = poset_from_dict({"elements": ["0", "1", "2"],
                                  "le": [["0", "1"], ["1", "2"]]})
        swap = {"a": "b", "b": "a"}
        ident = {"a": "a", "b": "b"}
        with pytest.raises(OrderedSystemError, match="functoriality failure"):
            validate_system(chain3, {x: k2 for x in "012"},
                            {("0", "1"): swap, ("1", "2"): ident,
                             ("0", "2"): ident})

    def test_composition_filled_in(self, k2):
        chain3 = poset_from_dict({"elements": ["0", "1", "2"],
                                  "le": [["0", "1"], ["1", "2"]]})
        swap = {"a": "b", "b": "a"}
        sys = validate_system(chain3, {x: k2 for x in "012"},
                              {("0", "1"): swap, ("1", "2"): swap})
        assert sys.homs[("0", "2")].mapping == {"a": "a", "b": "b"}

    def test_identity_map_rejected_if_wrong(self, k2):
        with pytest.raises(OrderedSystemError, match="identity failure"):
            validate_system(id_poset(["0"]), {"0": k2},
                            {("0", "0"): {"a": "b", "b": "a"}})

    def test_file_round_trip(self, p3k2_system):
        raw = system_to_dict(p3k2_system)
        again = system_from_dict(raw)
        assert again.structures == p3k2_system.structures
        assert {k: h.mapping for k, h in again.homs.items()} == \
            {k: h.mapping for k, h in p3k2_system.homs.items()}


class TestSections:
    def test_full_domain_count(self, p3k2_system):
        secs = sections(p3k2_system, {"0", "1"})
        assert len(secs) == 3
        for a in secs:
            assert a.at("1") == p3k2_system.homs[("0", "1")].mapping[a.at("0")]

    def test_top_only(self, p3k2_system):
        assert len(sections(p3k2_system, {"1"})) == 2

    def test_empty_domain(self, p3k2_system):
        secs = sections(p3k2_system, frozenset())
        assert len(secs) == 1
        assert secs[0].values == ()

    def test_brute_force_oracle(self, p3k2_system, k2, k3):
        tree = poset_from_dict({"elements": ["r", "l", "m"],
                                "le": [["r", "l"], ["r", "m"]]})
        sys2 = validate_system(
            tree, {"r": k2, "l": k2, "m": k3},
            {("r", "l"): {"a": "b", "b": "a"},
             ("r", "m"): {"a": "x1", "b": "x2"}})
        for system in (p3k2_system, sys2):
            from primeprod import upsets

            for V in upsets(system.index):
                got = {a.values for a in sections(system, V)}
                brute = set()
                pts = sorted(V, key=system.index.index)
                for combo in itertools.product(
                        *(system.structures[x].universe for x in pts)):
                    candidate = make_section(system, V, dict(zip(pts, combo)))
                    if is_coherent(system, candidate):
                        brute.add(candidate.values)
                assert got == brute

    def test_non_upset_rejected(self, p3k2_system):
        from primeprod import PosetError

        with pytest.raises(PosetError):
            sections(p3k2_system, {"0"})


class TestRestrict:
    def test_restrict_to_top(self, p3k2_system):
        a = sections(p3k2_system, {"0", "1"})[0]
        r = restrict(p3k2_system, a, {"1"})
        assert r.domain == frozenset({"1"})
        assert r.at("1") == a.at("1")

    def test_restrict_identity(self, p3k2_system):
        a = sections(p3k2_system, {"0", "1"})[0]
        assert restrict(p3k2_system, a, a.domain) == a

    def test_restrict_upward_only(self, p3k2_system):
        a = sections(p3k2_system, {"1"})[0]
        with pytest.raises(OrderedSystemError):
            restrict(p3k2_system, a, {"0", "1"})


class TestDenotation:
    def test_no_loops_anywhere(self, p3k2_system):
        phi = parse_formula("exists x. E(x,x)")
        assert denotation(p3k2_system, phi, []) == frozenset()

    def test_edge_everywhere(self, p3k2_system):
        phi = parse_formula("exists x. exists y. E(x,y)")
        assert denotation(p3k2_system, phi, []) == frozenset({"0", "1"})

    def test_parameters(self, p3k2_system):
        phi = parse_formula("E(v1,v2)")
        a1 = make_section(p3k2_system, {"0", "1"}, {"0": "u", "1": "a"})
        a2 = make_section(p3k2_system, {"0", "1"}, {"0": "w", "1": "a"})
        assert denotation(p3k2_system, phi, [a1, a2]) == frozenset()

    def test_positive_denotations_are_upsets(self, p3k2_system, k2):
        from primeprod import Budget, enumerate_positive_formulas, is_upset, upsets

        sig = k2.signature
        for n in (0, 1):
            phis = enumerate_positive_formulas(sig, Budget(3, 2), free_count=n)
            for V in upsets(p3k2_system.index):
                for a in sections(p3k2_system, V):
                    for phi in phis:
                        den = denotation(p3k2_system, phi, [a] * n)
                        rel = frozenset(x for x in den)
                        # an upset of the index restricted to the domain
                        for x in rel:
                            for y in p3k2_system.index.up(x):
                                if y in V or n == 0:
                                    assert y in den


class TestOmegaColimit:
    def test_idempotent_fold_gives_k2(self, p3, k2):
        ch = make_omega_chain((), (), p3, {"u": "u", "v": "v", "w": "u"})
        res = omega_colimit(ch)
        assert find_isomorphism(res.structure, k2) is not None
        assert res.class_of["w"] == res.class_of["u"]

    def test_identity_endo(self, p3):
        ch = make_omega_chain((), (), p3, {e: e for e in p3.universe})
        res = omega_colimit(ch)
        assert find_isomorphism(res.structure, p3) is not None

    def test_relation_stabilizes_after_one_step(self):
        # unary truth only grows along homomorphisms; after one step every
        # element sits inside the P part, so the limit is all-P
        sig = Signature(relations=(("P", 1),))
        M = make_structure(sig, ["a", "b"], {"P": [("b",)]})
        ch = make_omega_chain((), (), M, {"a": "b", "b": "b"})
        res = omega_colimit(ch)
        assert len(res.structure.universe) == 1
        assert len(res.structure.relations["P"]) == 1

    def test_relation_empty_iff_empty_in_tail(self):
        sig = Signature(relations=(("P", 1),))
        M = make_structure(sig, ["a", "b"], {"P": []})
        ch = make_omega_chain((), (), M, {"a": "b", "b": "b"})
        assert omega_colimit(ch).structure.relations["P"] == frozenset()

    def test_swap_automorphism(self, k2):
        ch = make_omega_chain((), (), k2, {"a": "b", "b": "a"})
        res = omega_colimit(ch)
        assert find_isomorphism(res.structure, k2) is not None

    def test_stage_maps_are_homs_and_jointly_surjective(self, p3):
        ch = make_omega_chain((), (), p3, {"u": "u", "v": "v", "w": "u"})
        res = omega_colimit(ch)
        hit = set()
        for j in range(3):
            f = res.tail_stage_map(j)
            assert is_homomorphism(f)
            hit |= set(f.mapping.values())
        assert hit == set(res.structure.universe)

    def test_stage_maps_commute_with_endo(self, p3):
        # f_j = f_{j+1} o e, the defining identity of the limit cone
        for endo in ({"u": "u", "v": "v", "w": "u"},
                     {"u": "w", "v": "v", "w": "u"}):
            ch = make_omega_chain((), (), p3, endo)
            res = omega_colimit(ch)
            for j in range(4):
                f_j = res.tail_stage_map(j)
                f_j1 = res.tail_stage_map(j + 1)
                composed = {x: f_j1.mapping[endo[x]] for x in p3.universe}
                assert composed == f_j.mapping

    def test_prefix_maps(self, k2, p3):
        from primeprod import hom

        ch = make_omega_chain((k2,), (hom(k2, p3, {"a": "u", "b": "v"}),), p3,
                              {"u": "u", "v": "v", "w": "u"})
        res = omega_colimit(ch)
        pm = res.prefix_stage_map(0)
        assert is_homomorphism(pm)

    def test_idempotent_colimit_is_image_substructure(self, p3):
        ch = make_omega_chain((), (), p3, {"u": "u", "v": "v", "w": "u"})
        res = omega_colimit(ch)
        image = graph_structure(["u", "v"], [("u", "v")], symmetric=True)
        assert find_isomorphism(res.structure, image) is not None


class TestOmegaView:
    def test_view_of_fold_is_k2(self, p3, k2):
        view = omega_prime_power(make_omega_chain((), (), p3,
                                                  {"u": "u", "v": "v", "w": "u"}))
        assert find_isomorphism(view.structure, k2) is not None

    def test_identity_view(self, p3):
        view = omega_prime_power(make_omega_chain((), (), p3,
                                                  {e: e for e in p3.universe}))
        assert find_isomorphism(view.structure, p3) is not None

    def test_eventual_truth_of_loop_sentence(self, p3):
        view = omega_prime_power(make_omega_chain((), (), p3,
                                                  {"u": "u", "v": "v", "w": "u"}))
        phi = parse_formula("exists x. E(x,x)")
        assert not view.eventually_true(phi, ())

    def test_eventual_truth_with_parameters(self, p3):
        view = omega_prime_power(make_omega_chain((), (), p3,
                                                  {"u": "u", "v": "v", "w": "u"}))
        phi = parse_formula("E(v1,v2)")
        assert view.eventually_true(phi, ("u", "v"))
        assert not view.eventually_true(phi, ("u", "w"))


class TestChainValidation:
    def test_endo_must_be_hom(self, p3):
        with pytest.raises(ChainError, match="endomorphism"):
            make_omega_chain((), (), p3, {"u": "v", "v": "u", "w": "w"})

    def test_prefix_must_link(self, k2, p3):
        from primeprod import hom

        bad = hom(k2, k2, {"a": "a", "b": "b"})
        with pytest.raises(ChainError, match="does not link"):
            make_omega_chain((k2,), (bad,), p3, {e: e for e in p3.universe})

    def test_chain_file_format(self, k2, p3):
        from primeprod import structure_to_dict

        raw = {
            "prefix": [{"structure": structure_to_dict(k2),
                        "step": {"a": "u", "b": "v"}}],
            "tail": structure_to_dict(p3),
            "endo": {"u": "u", "v": "v", "w": "u"},
        }
        ch = omega_chain_from_dict(raw)
        assert ch.prefix[0] == k2
        assert ch.tail == p3


class TestConstantSystem:
    def test_constant_system_builds(self, k2):
        tree = poset_from_dict({"elements": ["x", "y", "z"],
                                "le": [["x", "y"], ["x", "z"]]})
        sys = constant_system(tree, k2)
        assert all(M == k2 for M in sys.structures.values())
        assert len(sections(sys, frozenset({"x", "y", "z"}))) == 2
