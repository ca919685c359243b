"""Batch command-line front end with deterministic output.

One subcommand per operation; every budget-driven command echoes its
budget.  Machine-readable payloads are fenced between ---json--- and
---end--- lines.  Exit codes: 0 success / positive verdict, 1 negative
verdict or verification counterexample, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import WorkbenchError
from .formulas import (
    Budget,
    classify,
    evaluate,
    formula_size,
    immersion_witness,
    parse_formula,
    to_text,
)
from .posets import (
    enumerate_filters,
    enumerate_prime_filters,
    filter_from_lists,
    filter_to_lists,
    is_chain,
    is_wellfounded_forest,
    point_filter,
    poset_from_dict,
    upsets,
)
from .products import (
    classical_reduced_product,
    filter_product,
    point_collapse_map,
    appendix_transform,
    principal_set_ultrafilter,
    prime_product,
)
from .structures import find_isomorphism, enumerate_homs, hom, structure_to_dict, validate_structure
from .systems import omega_chain_from_dict, omega_colimit, omega_prime_power, system_from_dict
from .verify import (
    core,
    is_pec,
    verify_h_inductive_persistence,
    verify_los,
)


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise WorkbenchError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise WorkbenchError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}"
        ) from None


def _tagged(path: str, builder):
    raw = _load_json(path)
    try:
        return builder(raw)
    except WorkbenchError as exc:
        raise WorkbenchError(f"{path}: {exc}") from None


def _structure(path: str):
    return _tagged(path, validate_structure)


def _poset(path: str):
    return _tagged(path, poset_from_dict)


def _system(path: str):
    return _tagged(path, system_from_dict)


def _parse_map(text: str) -> dict:
    out = {}
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "=" not in piece:
            raise WorkbenchError(f"bad map entry {piece!r}; expected name=value")
        k, v = piece.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _emit_json(payload: dict) -> None:
    print("---json---")
    print(json.dumps(payload, sort_keys=True, indent=2))
    print("---end---")


def _budget(args) -> Budget:
    b = Budget(args.size, args.vars)
    print(f"budget: {b.describe()}")
    return b


def _add_budget_flags(sub):
    sub.add_argument("--size", type=int, default=5,
                     help="maximum atom+connective nodes (default 5)")
    sub.add_argument("--vars", type=int, default=2,
                     help="maximum distinct variables (default 2)")


def _filter_for(args, poset):
    if getattr(args, "point", None) is not None:
        if args.point not in poset.elements:
            raise WorkbenchError(f"unknown index point {args.point!r}")
        return point_filter(poset, args.point)
    if getattr(args, "filter", None) is not None:
        lists = _load_json(args.filter)
        return filter_from_lists(poset, lists)
    raise WorkbenchError("select a filter with --point or --filter")


def _named_prime_filters(poset):
    named = []
    for f in enumerate_prime_filters(poset):
        x = min(f.least_member(), key=poset.index)
        named.append((poset.index(x), f"F_{x}", f))
    named.sort()
    return [(name, f) for _, name, f in named]


# --------------------------------------------------------------------------
# handlers


def _cmd_parse(args) -> int:
    phi = parse_formula(args.formula)
    print(f"parsed: {to_text(phi)}")
    print(f"size: {formula_size(phi)} (atoms+connectives; quantifiers free)")
    print(f"classification: {classify(phi)}")
    _emit_json({"formula": to_text(phi), "size": formula_size(phi),
                "classification": str(classify(phi))})
    return 0


def _cmd_classify(args) -> int:
    phi = parse_formula(args.formula)
    print(str(classify(phi)))
    _emit_json({"classification": str(classify(phi))})
    return 0


def _cmd_eval(args) -> int:
    M = _structure(args.structure)
    phi = parse_formula(args.formula, M.signature)
    assignment = _parse_map(args.assign) if args.assign else {}
    value = evaluate(M, phi, assignment)
    print("true" if value else "false")
    _emit_json({"value": value})
    return 0 if value else 1


def _cmd_hom(args) -> int:
    M, N = _structure(args.source), _structure(args.target)
    limit = 1 if args.exists else args.limit
    homs = enumerate_homs(M, N, limit=limit)
    if args.exists:
        print("homomorphism exists" if homs else "no homomorphism")
    else:
        print(f"{len(homs)} homomorphism(s)")
        for h in homs:
            print("  " + ",".join(f"{a}->{b}" for a, b in h.as_pairs()))
    _emit_json({"count": len(homs),
                "maps": [dict(h.mapping) for h in homs]})
    return 0 if homs else 1


def _cmd_immersion(args) -> int:
    M, N = _structure(args.source), _structure(args.target)
    budget = _budget(args)
    h = hom(M, N, _parse_map(args.map))
    witness = immersion_witness(h, budget)
    if witness is None:
        print(f"immersion (no witness within budget {budget.describe()})")
        _emit_json({"immersion": True, "witness": None})
        return 0
    phi, tup = witness
    print(f"not an immersion: {to_text(phi)} on ({','.join(tup)})")
    _emit_json({"immersion": False,
                "witness": {"formula": to_text(phi), "tuple": list(tup)}})
    return 1


def _cmd_iso(args) -> int:
    M, N = _structure(args.source), _structure(args.target)
    iso = find_isomorphism(M, N)
    if iso is None:
        print("not isomorphic")
        _emit_json({"isomorphic": False})
        return 1
    print("isomorphic: " + ",".join(f"{a}->{b}" for a, b in iso.as_pairs()))
    _emit_json({"isomorphic": True, "map": dict(iso.mapping)})
    return 0


def _cmd_poset_check(args) -> int:
    p = _poset(args.poset)
    strict = sum(1 for a, b in p.le if a != b)
    forest = is_wellfounded_forest(p)
    print(f"valid poset: {len(p.elements)} elements, {strict} strict pairs")
    print(f"wellfounded forest: {'yes' if forest else 'no'}"
          + ("" if forest else " (some principal downset is not a chain)"))
    print(f"chain: {'yes' if is_chain(p) else 'no'}")
    _emit_json({"elements": list(p.elements), "strict_pairs": strict,
                "wellfounded_forest": forest, "chain": is_chain(p)})
    return 0


def _cmd_upsets(args) -> int:
    p = _poset(args.poset)
    ups = [sorted(v) for v in upsets(p)]
    print(f"{len(ups)} upsets")
    for v in ups:
        print("  {" + ",".join(v) + "}")
    _emit_json({"upsets": ups})
    return 0


def _cmd_filters(args) -> int:
    p = _poset(args.poset)
    if args.prime:
        named = _named_prime_filters(p)
        print(f"{len(named)} prime filters: " + ", ".join(n for n, _ in named))
        _emit_json({"prime_filters": {n: filter_to_lists(f) for n, f in named}})
        return 0
    filters = enumerate_filters(p)
    print(f"{len(filters)} filters (including the improper one)")
    payload = []
    for f in filters:
        label = "improper" if f.is_improper() else \
            "generated by {" + ",".join(sorted(f.least_member())) + "}"
        print(f"  {label}: {len(f.family)} upsets")
        payload.append({"label": label, "family": filter_to_lists(f)})
    _emit_json({"filters": payload})
    return 0


def _product_payload(fp) -> dict:
    return {
        "structure": structure_to_dict(fp.structure),
        "provenance": {
            cls.name: {"domain": sorted(cls.representative.domain),
                       "values": dict(cls.representative.values)}
            for cls in fp.classes
        },
    }


def _cmd_product(args) -> int:
    sys_obj = _system(args.system)
    chosen = [bool(args.point), bool(args.filter), args.reduced,
              bool(args.ultra)]
    if sum(chosen) != 1:
        raise WorkbenchError(
            "choose exactly one of --point/--filter/--reduced/--ultra")
    if args.reduced or args.ultra:
        if any(x != y for x, y in sys_obj.index.le):
            raise WorkbenchError(
                "--reduced/--ultra need a discrete (identity-ordered) index")
        factors = dict(sys_obj.structures)
        if args.reduced:
            family = [frozenset(factors)]
            label = "reduced product with the trivial filter (direct product)"
        else:
            if args.ultra not in factors:
                raise WorkbenchError(f"unknown index point {args.ultra!r}")
            family = principal_set_ultrafilter(tuple(factors), args.ultra)
            label = f"ultraproduct with the principal ultrafilter at {args.ultra}"
        rp = classical_reduced_product(factors, family)
        print(label)
        print(f"carrier: {len(rp.structure.universe)} elements")
        payload = {
            "structure": structure_to_dict(rp.structure),
            "provenance": {name: {"tuple": list(tuples[0])}
                           for name, tuples in rp.classes.items()},
        }
    else:
        F = _filter_for(args, sys_obj.index)
        fp = filter_product(sys_obj, F)
        kind = "prime product" if fp.prime else "filter product"
        print(f"{kind} over a filter with {len(F.family)} upsets")
        print(f"carrier: {len(fp.structure.universe)} elements")
        payload = _product_payload(fp)
    _emit_json(payload)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
        print(f"written: {args.output}")
    return 0


def _cmd_omega_limit(args) -> int:
    ch = _tagged(args.chain, omega_chain_from_dict)
    res = omega_colimit(ch)
    print(f"limit carrier: {len(res.structure.universe)} elements "
          f"({','.join(res.structure.universe)})")
    print(f"membership settles at endomorphism power {res.stabilizer}")
    for rep, members in res.members.items():
        print(f"  {rep}: {{{','.join(members)}}}")
    _emit_json({
        "structure": structure_to_dict(res.structure),
        "classes": {rep: list(m) for rep, m in res.members.items()},
        "stage0_map": dict(res.tail_stage_map(0).mapping),
    })
    return 0


def _cmd_los_verify(args) -> int:
    budget = _budget(args)
    if args.omega:
        view = omega_prime_power(_tagged(args.system, omega_chain_from_dict))
        report = verify_los(view, budget)
    else:
        sys_obj = _system(args.system)
        F = _filter_for(args, sys_obj.index)
        fp = filter_product(sys_obj, F)
        report = verify_los(fp, budget)
        if fp.prime and args.point:
            collapse = point_collapse_map(fp, args.point)
            onto = len(set(collapse.mapping.values())) == \
                len(fp.structure.universe)
            print(f"point collapse at {args.point}: "
                  + ("isomorphism" if onto else "not onto (unexpected)"))
    print(report.render())
    _emit_json(report.to_json_dict())
    return 0 if report.ok else 1


def _cmd_preserve(args) -> int:
    sys_obj = _system(args.system)
    F = _filter_for(args, sys_obj.index)
    phi = parse_formula(args.formula)
    report = verify_h_inductive_persistence(sys_obj, F, phi)
    print(report.render())
    _emit_json(report.to_json_dict())
    return 0 if report.ok else 1


def _cmd_poseq(args) -> int:
    M, N = _structure(args.first), _structure(args.second)
    forward = enumerate_homs(N, M, limit=1)
    backward = enumerate_homs(M, N, limit=1)
    if forward and backward:
        w1 = ",".join(f"{a}->{b}" for a, b in backward[0].as_pairs())
        w2 = ",".join(f"{a}->{b}" for a, b in forward[0].as_pairs())
        print(f"positively equivalent (hom witnesses: {w1} / {w2})")
        _emit_json({"equivalent": True,
                    "hom_into_second": dict(backward[0].mapping),
                    "hom_into_first": dict(forward[0].mapping)})
        return 0
    missing = []
    if not backward:
        missing.append("no homomorphism first -> second")
    if not forward:
        missing.append("no homomorphism second -> first")
    print("not positively equivalent (" + "; ".join(missing) + ")")
    _emit_json({"equivalent": False, "reasons": missing})
    return 1


def _cmd_core(args) -> int:
    M = _structure(args.structure)
    result = core(M)
    print(f"core: {{{','.join(result.core.universe)}}} "
          f"({len(result.core.universe)} of {len(M.universe)} elements)")
    print("retraction: " + ",".join(f"{a}->{b}"
                                    for a, b in result.retract.as_pairs()))
    print("endomorphism: " + ",".join(f"{a}->{b}"
                                      for a, b in result.endo.as_pairs()))
    _emit_json({
        "core": structure_to_dict(result.core),
        "retraction": dict(result.retract.mapping),
        "endomorphism": dict(result.endo.mapping),
    })
    return 0


def _cmd_pec(args) -> int:
    M = _structure(args.structure)
    K = [_structure(p) for p in args.klass]
    if not any(N == M for N in K):
        K.insert(0, M)
        print("note: the structure was added to its class")
    budget = _budget(args)
    report = is_pec(M, K, budget)
    print(report.render())
    _emit_json(report.to_json_dict())
    return 0 if report.ok else 1


def _cmd_appendix(args) -> int:
    raw = _load_json(args.bundle)
    if set(raw) != {"chains", "ultrafilter_at"}:
        raise WorkbenchError(
            f"{args.bundle}: bundle needs exactly the keys chains/ultrafilter_at")
    chains = [system_from_dict(c) for c in raw["chains"]]
    bundle = appendix_transform(chains, int(raw["ultrafilter_at"]))
    for name, ok in bundle.checks.items():
        print(f"{name}: {'ok' if ok else 'FAILED'}")
    print(f"ultraproduct carrier: {len(bundle.ultraproduct.structure.universe)}; "
          f"prime product carrier: {len(bundle.primeproduct.structure.universe)}")
    _emit_json({
        "poset": {"elements": list(bundle.poset.elements)},
        "filter": filter_to_lists(bundle.filter),
        "ghat": bundle.ghat,
        "checks": bundle.checks,
        "verified": bundle.verified,
    })
    return 0 if bundle.verified else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="primeprod",
        description="finite workbench for positive logic and prime products")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for randomized property sweeps "
                             "(current subcommands are fully deterministic)")
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("parse", help="parse a formula and reprint it")
    s.add_argument("formula")
    s.set_defaults(fn=_cmd_parse)

    s = subs.add_parser("classify", help="fragment tag of a formula")
    s.add_argument("formula")
    s.set_defaults(fn=_cmd_classify)

    s = subs.add_parser("eval", help="evaluate a formula on a structure")
    s.add_argument("structure")
    s.add_argument("formula")
    s.add_argument("--assign", default="",
                   help="free-variable assignment, e.g. x=a,y=b")
    s.set_defaults(fn=_cmd_eval)

    s = subs.add_parser("hom", help="enumerate homomorphisms")
    s.add_argument("source")
    s.add_argument("target")
    s.add_argument("--exists", action="store_true",
                   help="stop at the first homomorphism")
    s.add_argument("--limit", type=int, default=None)
    s.set_defaults(fn=_cmd_hom)

    s = subs.add_parser("immersion", help="budgeted immersion check of a map")
    s.add_argument("source")
    s.add_argument("target")
    s.add_argument("--map", required=True, help="element map, e.g. a=u,b=v")
    _add_budget_flags(s)
    s.set_defaults(fn=_cmd_immersion)

    s = subs.add_parser("iso", help="search for an isomorphism")
    s.add_argument("source")
    s.add_argument("target")
    s.set_defaults(fn=_cmd_iso)

    s = subs.add_parser("poset-check", help="validate a poset file")
    s.add_argument("poset")
    s.set_defaults(fn=_cmd_poset_check)

    s = subs.add_parser("upsets", help="list the upsets of a poset")
    s.add_argument("poset")
    s.set_defaults(fn=_cmd_upsets)

    s = subs.add_parser("filters", help="enumerate (prime) filters of upsets")
    s.add_argument("poset")
    s.add_argument("--prime", action="store_true")
    s.set_defaults(fn=_cmd_filters)

    s = subs.add_parser("product", help="build a filter/prime/reduced product")
    s.add_argument("system")
    s.add_argument("--point", help="point filter at this index point")
    s.add_argument("--filter", help="JSON file with a list of upsets")
    s.add_argument("--reduced", action="store_true",
                   help="classical reduced product with the trivial filter")
    s.add_argument("--ultra", help="classical ultraproduct, principal at point")
    s.add_argument("-o", "--output", help="also write the product to a file")
    s.set_defaults(fn=_cmd_product)

    s = subs.add_parser("omega-limit", help="direct limit of an omega-chain")
    s.add_argument("chain")
    s.set_defaults(fn=_cmd_omega_limit)

    s = subs.add_parser("los-verify",
                        help="check the positive truth biconditional")
    s.add_argument("system", help="system file (or chain file with --omega)")
    s.add_argument("--point")
    s.add_argument("--filter")
    s.add_argument("--omega", action="store_true",
                   help="treat the input as an omega-chain")
    _add_budget_flags(s)
    s.set_defaults(fn=_cmd_los_verify)

    s = subs.add_parser("preserve",
                        help="h-inductive persistence in a prime product")
    s.add_argument("system")
    s.add_argument("formula")
    s.add_argument("--point")
    s.add_argument("--filter")
    s.set_defaults(fn=_cmd_preserve)

    s = subs.add_parser("poseq", help="decide positive equivalence")
    s.add_argument("first")
    s.add_argument("second")
    s.set_defaults(fn=_cmd_poseq)

    s = subs.add_parser("core", help="minimum retract with its chain data")
    s.add_argument("structure")
    s.set_defaults(fn=_cmd_core)

    s = subs.add_parser("pec", help="positive existential closedness in a class")
    s.add_argument("structure")
    s.add_argument("klass", nargs="+", metavar="class-member")
    _add_budget_flags(s)
    s.set_defaults(fn=_cmd_pec)

    s = subs.add_parser("appendix",
                        help="rebuild an ultraproduct of chain limits as a "
                             "prime product and verify the witnessing map")
    s.add_argument("bundle")
    s.set_defaults(fn=_cmd_appendix)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None:
        print(f"seed: {args.seed}")
    try:
        return args.fn(args)
    except WorkbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
