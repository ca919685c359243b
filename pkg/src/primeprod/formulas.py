"""First-order formulas: syntax trees, concrete syntax, classification,
Tarskian evaluation, and bounded enumeration of the positive fragment.

Formula size is counted as the number of atom and connective nodes;
quantifiers are free.  Every budgeted report states the budget it used.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

from .errors import FormulaError, PreconditionError
from .structures import Hom, Signature, Structure, is_homomorphism, make_structure


# ---------------------------------------------------------------------------
# syntax trees


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Const(Term):
    name: str


@dataclass(frozen=True)
class App(Term):
    function: str
    args: tuple[Term, ...]


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Falsum(Formula):
    pass


@dataclass(frozen=True)
class Verum(Formula):
    pass


@dataclass(frozen=True)
class Rel(Formula):
    name: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


def term_variables(t: Term) -> frozenset:
    if isinstance(t, Var):
        return frozenset({t.name})
    if isinstance(t, App):
        out = frozenset()
        for a in t.args:
            out |= term_variables(a)
        return out
    return frozenset()


def free_variables(phi: Formula, sig: Signature | None = None) -> frozenset:
    """Free variable names; with a signature, constant names are excluded."""
    def go(f, bound):
        if isinstance(f, (Falsum, Verum)):
            return frozenset()
        if isinstance(f, Rel):
            out = frozenset()
            for t in f.args:
                out |= term_variables(t)
            return out - bound
        if isinstance(f, Eq):
            return (term_variables(f.left) | term_variables(f.right)) - bound
        if isinstance(f, (And, Or, Implies)):
            return go(f.left, bound) | go(f.right, bound)
        if isinstance(f, Not):
            return go(f.body, bound)
        if isinstance(f, (Exists, Forall)):
            return go(f.body, bound | {f.var})
        raise TypeError(f"not a formula: {f!r}")

    out = go(phi, frozenset())
    if sig is not None:
        out = frozenset(v for v in out if not sig.is_constant(v))
    return out


def formula_size(phi: Formula) -> int:
    """Atom + connective count; quantifiers do not contribute."""
    if isinstance(phi, (Falsum, Verum, Rel, Eq)):
        return 1
    if isinstance(phi, (And, Or, Implies)):
        return 1 + formula_size(phi.left) + formula_size(phi.right)
    if isinstance(phi, Not):
        return 1 + formula_size(phi.body)
    if isinstance(phi, (Exists, Forall)):
        return formula_size(phi.body)
    raise TypeError(f"not a formula: {phi!r}")


# ---------------------------------------------------------------------------
# concrete syntax

_PREC = {Implies: 1, Or: 2, And: 3, Not: 4}


def _term_text(t: Term) -> str:
    if isinstance(t, (Var, Const)):
        return t.name
    return f"{t.function}({','.join(_term_text(a) for a in t.args)})"


def to_text(phi: Formula, _ctx: int = 0) -> str:
    if isinstance(phi, Falsum):
        return "false"
    if isinstance(phi, Verum):
        return "true"
    if isinstance(phi, Rel):
        if not phi.args:
            return phi.name
        return f"{phi.name}({','.join(_term_text(a) for a in phi.args)})"
    if isinstance(phi, Eq):
        return f"{_term_text(phi.left)} = {_term_text(phi.right)}"
    if isinstance(phi, (Exists, Forall)):
        kw = "exists" if isinstance(phi, Exists) else "forall"
        body = f"{kw} {phi.var}. {to_text(phi.body, 0)}"
        return f"({body})" if _ctx > 0 else body
    if isinstance(phi, Not):
        return f"~{to_text(phi.body, 4)}"
    op = {And: "&", Or: "|", Implies: "->"}[type(phi)]
    prec = _PREC[type(phi)]
    if isinstance(phi, Implies):
        left, right = to_text(phi.left, prec + 1), to_text(phi.right, prec)
    else:
        left, right = to_text(phi.left, prec), to_text(phi.right, prec + 1)
    text = f"{left} {op} {right}"
    return f"({text})" if prec < _ctx else text


_KEYWORDS = {"exists", "forall", "false", "true"}
_TOKEN_RE = re.compile(r"->|[()=,.&|~]|[A-Za-z_][A-Za-z0-9_]*")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise FormulaError(f"unexpected character {text[pos]!r}", pos)
        tokens.append((m.group(), pos))
        pos = m.end()
    tokens.append((None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i][0]

    def pos(self):
        return self.tokens[self.i][1]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, what):
        tok, pos = self.tokens[self.i]
        if tok != what:
            raise FormulaError(f"expected {what!r}, found {tok!r}", pos)
        self.i += 1
        return pos

    def ident(self):
        tok, pos = self.tokens[self.i]
        if tok is None or not tok[0].isalpha() and tok[0] != "_":
            raise FormulaError(f"expected identifier, found {tok!r}", pos)
        if tok in _KEYWORDS:
            raise FormulaError(f"reserved word {tok!r} cannot be a name", pos)
        self.i += 1
        return tok

    def formula(self) -> Formula:
        if self.peek() in ("exists", "forall"):
            kw, _ = self.advance()
            var = self.ident()
            self.expect(".")
            body = self.formula()
            return Exists(var, body) if kw == "exists" else Forall(var, body)
        return self.implication()

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.peek() == "->":
            self.advance()
            return Implies(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        out = self.conjunction()
        while self.peek() == "|":
            self.advance()
            out = Or(out, self.conjunction())
        return out

    def conjunction(self) -> Formula:
        out = self.unary()
        while self.peek() == "&":
            self.advance()
            out = And(out, self.unary())
        return out

    def unary(self) -> Formula:
        if self.peek() == "~":
            self.advance()
            return Not(self.unary())
        if self.peek() in ("exists", "forall"):
            return self.formula()
        return self.primary()

    def primary(self) -> Formula:
        tok, pos = self.tokens[self.i]
        if tok == "(":
            self.advance()
            inner = self.formula()
            if self.peek() != ")":
                raise FormulaError("unbalanced '('", pos)
            self.advance()
            return inner
        if tok == "false":
            self.advance()
            return Falsum()
        if tok == "true":
            self.advance()
            return Verum()
        name = self.ident()
        args = None
        if self.peek() == "(":
            args = self.arguments()
        if self.peek() == "=":
            self.advance()
            left = Var(name) if args is None else App(name, args)
            return Eq(left, self.term())
        return Rel(name, args or ())

    def arguments(self) -> tuple[Term, ...]:
        open_pos = self.expect("(")
        if self.peek() == ")":
            self.advance()
            return ()
        args = [self.term()]
        while True:
            tok = self.peek()
            if tok == ",":
                self.advance()
                args.append(self.term())
            elif tok == ")":
                self.advance()
                return tuple(args)
            else:
                raise FormulaError("unbalanced '('", open_pos)

    def term(self) -> Term:
        name = self.ident()
        if self.peek() == "(":
            return App(name, self.arguments())
        return Var(name)


def parse_formula(text: str, sig: Signature | None = None) -> Formula:
    """Parse the ASCII concrete syntax; parse(print(parse(s))) is stable."""
    p = _Parser(text)
    phi = p.formula()
    tok, pos = p.tokens[p.i]
    if tok is not None:
        raise FormulaError(f"trailing input {tok!r}", pos)
    if sig is not None:
        typecheck(phi, sig)
    return phi


def typecheck(phi: Formula, sig: Signature) -> None:
    """Arity and symbol checks against a signature."""
    from .errors import SignatureError

    def term(t):
        if isinstance(t, App):
            try:
                arity = sig.function_arity(t.function)
            except SignatureError as exc:
                raise FormulaError(str(exc)) from None
            if len(t.args) != arity:
                raise FormulaError(
                    f"arity mismatch: function {t.function} expects {arity} "
                    f"arguments, got {len(t.args)}")
            for a in t.args:
                term(a)
        elif isinstance(t, Const) and not sig.is_constant(t.name):
            raise FormulaError(f"unknown constant {t.name!r}")

    def go(f):
        if isinstance(f, Rel):
            try:
                arity = sig.relation_arity(f.name)
            except SignatureError as exc:
                raise FormulaError(str(exc)) from None
            if len(f.args) != arity:
                raise FormulaError(
                    f"arity mismatch: relation {f.name} expects {arity} "
                    f"arguments, got {len(f.args)}")
            for a in f.args:
                term(a)
        elif isinstance(f, Eq):
            term(f.left)
            term(f.right)
        elif isinstance(f, (And, Or, Implies)):
            go(f.left)
            go(f.right)
        elif isinstance(f, Not):
            go(f.body)
        elif isinstance(f, (Exists, Forall)):
            go(f.body)

    go(phi)


# ---------------------------------------------------------------------------
# fragment classification


class FragmentTag(str, Enum):
    ATOMIC = "atomic"
    POSITIVE = "positive"
    BASIC_H_INDUCTIVE = "basic-h-inductive"
    H_INDUCTIVE = "h-inductive"
    GENERAL = "general"

    def __str__(self):
        return self.value


def is_positive(phi: Formula) -> bool:
    if isinstance(phi, (Falsum, Verum, Rel, Eq)):
        return True
    if isinstance(phi, (And, Or)):
        return is_positive(phi.left) and is_positive(phi.right)
    if isinstance(phi, Exists):
        return is_positive(phi.body)
    return False


def normalize_negations(phi: Formula) -> Formula:
    """Rewrite ~p as p -> false throughout."""
    if isinstance(phi, Not):
        return Implies(normalize_negations(phi.body), Falsum())
    if isinstance(phi, (And, Or, Implies)):
        return type(phi)(normalize_negations(phi.left), normalize_negations(phi.right))
    if isinstance(phi, (Exists, Forall)):
        return type(phi)(phi.var, normalize_negations(phi.body))
    return phi


def _is_basic_h_inductive(phi: Formula) -> bool:
    while isinstance(phi, Forall):
        phi = phi.body
    return (isinstance(phi, Implies)
            and is_positive(phi.left) and is_positive(phi.right))


def _is_h_inductive(phi: Formula) -> bool:
    if isinstance(phi, And):
        return _is_h_inductive(phi.left) and _is_h_inductive(phi.right)
    return _is_basic_h_inductive(phi)


def classify(phi: Formula) -> FragmentTag:
    """Most specific tag; negations are normalized to p -> false before
    the h-inductive checks."""
    if isinstance(phi, (Rel, Eq)):
        return FragmentTag.ATOMIC
    if is_positive(phi):
        return FragmentTag.POSITIVE
    norm = normalize_negations(phi)
    if _is_basic_h_inductive(norm):
        return FragmentTag.BASIC_H_INDUCTIVE
    if _is_h_inductive(norm):
        return FragmentTag.H_INDUCTIVE
    return FragmentTag.GENERAL


# ---------------------------------------------------------------------------
# evaluation


def _term_value(t: Term, M: Structure, env: dict) -> str:
    if isinstance(t, Var):
        if t.name in env:
            return env[t.name]
        if t.name in M.constants:
            return M.constants[t.name]
        raise FormulaError(f"unbound variable {t.name!r}")
    if isinstance(t, Const):
        return M.constants[t.name]
    return M.functions[t.function][tuple(_term_value(a, M, env) for a in t.args)]


def _eval(phi: Formula, M: Structure, env: dict) -> bool:
    if isinstance(phi, Falsum):
        return False
    if isinstance(phi, Verum):
        return True
    if isinstance(phi, Rel):
        return tuple(_term_value(a, M, env) for a in phi.args) in M.relations[phi.name]
    if isinstance(phi, Eq):
        return _term_value(phi.left, M, env) == _term_value(phi.right, M, env)
    if isinstance(phi, And):
        return _eval(phi.left, M, env) and _eval(phi.right, M, env)
    if isinstance(phi, Or):
        return _eval(phi.left, M, env) or _eval(phi.right, M, env)
    if isinstance(phi, Implies):
        return not _eval(phi.left, M, env) or _eval(phi.right, M, env)
    if isinstance(phi, Not):
        return not _eval(phi.body, M, env)
    if isinstance(phi, (Exists, Forall)):
        want = isinstance(phi, Forall)
        had = phi.var in env
        saved = env.get(phi.var)
        result = want
        for e in M.universe:
            env[phi.var] = e
            if _eval(phi.body, M, env) != want:
                result = not want
                break
        if had:
            env[phi.var] = saved
        else:
            env.pop(phi.var, None)
        return result
    raise TypeError(f"not a formula: {phi!r}")


def evaluate(M: Structure, phi: Formula, assignment: dict | None = None,
             check: bool = True) -> bool:
    """Standard satisfaction M |= phi[assignment]."""
    env = dict(assignment or {})
    if check:
        typecheck(phi, M.signature)
        missing = free_variables(phi, M.signature) - set(env)
        if missing:
            raise FormulaError(f"unbound variable {sorted(missing)[0]!r}")
    return _eval(phi, M, env)


# ---------------------------------------------------------------------------
# bounded enumeration of positive formulas
#
# Formulas are generated bottom-up per (size, context) where context m
# means free variables among v1..vm; quantifiers always bind the next
# index.  Within a context, formulas are deduplicated by their truth
# fingerprint over a fixed probe set (all structures of at most two
# elements over the signature, up to isomorphism), computed bitwise.


@dataclass(frozen=True)
class Budget:
    """size: max atom+connective nodes; vars: max distinct variables."""

    size: int
    vars: int

    def describe(self) -> str:
        return f"size={self.size} vars={self.vars}"


def var_name(i: int) -> str:
    return f"v{i}"


def _canonical_key(M: Structure) -> str:
    """Serialization minimized over universe permutations (iso invariant)."""
    best = None
    for perm in itertools.permutations(M.universe):
        rename = dict(zip(M.universe, perm))
        rels = tuple(sorted(
            (name, tuple(sorted(tuple(rename[e] for e in t) for t in tups)))
            for name, tups in M.relations.items()))
        funs = tuple(sorted(
            (name, tuple(sorted((tuple(rename[e] for e in a), rename[v])
                                for a, v in table.items())))
            for name, table in M.functions.items()))
        cons = tuple(sorted((name, rename[v]) for name, v in M.constants.items()))
        key = repr((len(M.universe), rels, funs, cons))
        if best is None or key < best:
            best = key
    return best


# a single universe whose raw interpretation count passes this bound is
# dropped from the probe set (keeps rich signatures usable)
_PROBE_CAP = 5000


@lru_cache(maxsize=None)
def probe_structures(sig: Signature, max_size: int = 2) -> tuple[Structure, ...]:
    """All structures of size <= max_size over sig, up to isomorphism."""
    probes = []
    for n in range(1, max_size + 1):
        universe = tuple(f"e{i}" for i in range(1, n + 1))
        count = 1
        for _, arity in sig.relations:
            count *= 2 ** (n ** arity)
        for _, arity in sig.functions:
            count *= n ** (n ** arity)
        count *= n ** len(sig.constants)
        if count > _PROBE_CAP and n > 2:
            continue
        rel_spaces = []
        for name, arity in sig.relations:
            tuples = sorted(itertools.product(universe, repeat=arity))
            rel_spaces.append([(name, frozenset(sub))
                               for r in range(len(tuples) + 1)
                               for sub in itertools.combinations(tuples, r)])
        fun_spaces = []
        for name, arity in sig.functions:
            keys = sorted(itertools.product(universe, repeat=arity))
            fun_spaces.append([(name, dict(zip(keys, values)))
                               for values in itertools.product(universe,
                                                               repeat=len(keys))])
        con_spaces = [[(name, e) for e in universe] for name in sig.constants]
        for combo in itertools.product(*rel_spaces, *fun_spaces, *con_spaces):
            rels = dict(combo[:len(rel_spaces)])
            funs = dict(combo[len(rel_spaces):len(rel_spaces) + len(fun_spaces)])
            cons = dict(combo[len(rel_spaces) + len(fun_spaces):])
            probes.append(make_structure(sig, universe, rels, funs, cons))
    deduped: list[Structure] = []
    seen = set()
    for candidate in probes:
        key = _canonical_key(candidate)
        if key not in seen:
            seen.add(key)
            deduped.append(candidate)
    return tuple(deduped)


def _probe_size(nvars: int) -> int:
    # probes of size v decide v-variable positive formulas exactly (each
    # disjunct of such a formula is witnessed by a <= v element pattern),
    # so fingerprint deduplication at this probe size is lossless up to
    # three variables; beyond that it is an explicit approximation.
    return max(2, min(nvars, 3))


def _atom_pool(sig: Signature, m: int) -> list[Formula]:
    terms: list[Term] = [Var(var_name(i + 1)) for i in range(m)]
    terms += [Const(c) for c in sig.constants]
    if sig.functions:
        base = list(terms)
        for name, arity in sig.functions:
            terms += [App(name, args)
                      for args in itertools.product(base, repeat=arity)]
    atoms: list[Formula] = [Falsum()]
    for name, arity in sig.relations:
        atoms += [Rel(name, args)
                  for args in itertools.product(terms, repeat=arity)]
    for i, t1 in enumerate(terms):
        for t2 in terms[i:]:
            atoms.append(Eq(t1, t2))
    return atoms


@lru_cache(maxsize=None)
def _formula_table(sig: Signature, size: int, nvars: int):
    """cells[(s, m)]: formulas of size s in context m, fingerprint-fresh."""
    probes = probe_structures(sig, _probe_size(nvars))
    # bit layout per context m: probes in order, assignments to (v1..vm)
    # in product order with the last variable fastest.
    offsets: list[list[int]] = []
    widths: list[list[int]] = []
    for m in range(nvars + 1):
        offs, wids, acc = [], [], 0
        for P in probes:
            offs.append(acc)
            w = len(P.universe) ** m
            wids.append(w)
            acc += w
        offsets.append(offs)
        widths.append(wids)

    def fingerprint(phi: Formula, m: int) -> int:
        fp = 0
        bit = 0
        for P in probes:
            for asg in itertools.product(P.universe, repeat=m):
                env = {var_name(i + 1): asg[i] for i in range(m)}
                if _eval(phi, P, env):
                    fp |= 1 << bit
                bit += 1
        return fp

    u_mask = [(1 << len(P.universe)) - 1 for P in probes]

    def project(fp_child: int, m: int) -> int:
        # exists over v_{m+1}: assignments extending a context-m assignment
        # occupy consecutive bits (the new variable varies fastest), so OR
        # each group of |universe| bits down to one.
        out = 0
        for p_idx in range(len(probes)):
            u = u_mask[p_idx].bit_length()
            block = (fp_child >> offsets[m + 1][p_idx]) & \
                ((1 << widths[m + 1][p_idx]) - 1)
            if not block:
                continue
            parent_off = offsets[m][p_idx]
            for parent_idx in range(widths[m][p_idx]):
                if (block >> (parent_idx * u)) & u_mask[p_idx]:
                    out |= 1 << (parent_off + parent_idx)
        return out

    cells: dict[tuple[int, int], list[tuple[Formula, int]]] = {}
    seen: list[dict[int, Formula]] = [dict() for _ in range(nvars + 1)]

    def add(s: int, m: int, phi: Formula, fp: int):
        if fp in seen[m]:
            return
        seen[m][fp] = phi
        cells[(s, m)].append((phi, fp))

    for s in range(1, size + 1):
        for m in range(nvars, -1, -1):
            cells[(s, m)] = []
            if s == 1:
                for atom in _atom_pool(sig, m):
                    add(s, m, atom, fingerprint(atom, m))
            for s1 in range(1, s - 1):
                s2 = s - 1 - s1
                if s2 < 1:
                    continue
                for phi1, fp1 in cells[(s1, m)]:
                    for phi2, fp2 in cells[(s2, m)]:
                        add(s, m, And(phi1, phi2), fp1 & fp2)
                        add(s, m, Or(phi1, phi2), fp1 | fp2)
            if m < nvars:
                for phi, fp in list(cells[(s, m + 1)]):
                    add(s, m, Exists(var_name(m + 1), phi), project(fp, m))
    return cells


def enumerate_positive_formulas(sig: Signature, budget: Budget,
                                free_count: int = 0) -> tuple[Formula, ...]:
    """Canonical deduplicated list of positive formulas with free
    variables among v1..v{free_count}."""
    if free_count > budget.vars:
        raise PreconditionError("free variable count exceeds the vars budget")
    if budget.size <= 0:
        return (Falsum(), Verum()) if free_count == 0 else ()
    cells = _formula_table(sig, budget.size, budget.vars)
    out: list[Formula] = []
    for s in range(1, budget.size + 1):
        out.extend(phi for phi, _ in cells[(s, free_count)])
    return tuple(out)


def enumerate_positive_sentences(sig: Signature, budget: Budget) -> tuple[Formula, ...]:
    return enumerate_positive_formulas(sig, budget, free_count=0)


# ---------------------------------------------------------------------------
# positive theories and resultants


@dataclass(frozen=True)
class TheoryFingerprint:
    """The positive sentences within budget that hold in a structure."""

    budget: Budget
    satisfied: tuple[Formula, ...]

    def describe(self) -> str:
        return (f"{len(self.satisfied)} positive sentences hold "
                f"(budget {self.budget.describe()})")


def positive_theory(M: Structure, budget: Budget) -> TheoryFingerprint:
    sentences = enumerate_positive_sentences(M.signature, budget)
    satisfied = tuple(phi for phi in sentences if evaluate(M, phi, check=False))
    return TheoryFingerprint(budget, satisfied)


def _canonical_free(phi: Formula, sig: Signature) -> tuple[Formula, int]:
    """Rename free variables to v1, v2, ... in first-occurrence order."""
    order: list[str] = []

    def walk_term(t):
        if isinstance(t, Var) and not sig.is_constant(t.name):
            if t.name not in order:
                order.append(t.name)
        elif isinstance(t, App):
            for a in t.args:
                walk_term(a)

    def walk(f, bound):
        if isinstance(f, Rel):
            for a in f.args:
                if isinstance(a, Var) and a.name in bound:
                    continue
                walk_term(a)
        elif isinstance(f, Eq):
            for a in (f.left, f.right):
                if isinstance(a, Var) and a.name in bound:
                    continue
                walk_term(a)
        elif isinstance(f, (And, Or, Implies)):
            walk(f.left, bound)
            walk(f.right, bound)
        elif isinstance(f, Not):
            walk(f.body, bound)
        elif isinstance(f, (Exists, Forall)):
            walk(f.body, bound | {f.var})

    walk(phi, frozenset())
    renaming = {name: var_name(i + 1) for i, name in enumerate(order)}

    def rename_term(t, bound):
        if isinstance(t, Var):
            if t.name in bound or t.name not in renaming:
                return t
            return Var(renaming[t.name])
        if isinstance(t, App):
            return App(t.function, tuple(rename_term(a, bound) for a in t.args))
        return t

    def rename(f, bound):
        if isinstance(f, Rel):
            return Rel(f.name, tuple(rename_term(a, bound) for a in f.args))
        if isinstance(f, Eq):
            return Eq(rename_term(f.left, bound), rename_term(f.right, bound))
        if isinstance(f, (And, Or, Implies)):
            return type(f)(rename(f.left, bound), rename(f.right, bound))
        if isinstance(f, Not):
            return Not(rename(f.body, bound))
        if isinstance(f, (Exists, Forall)):
            return type(f)(f.var, rename(f.body, bound | {f.var}))
        return f

    return rename(phi, frozenset()), len(order)


def resultant(phi: Formula, K, budget: Budget) -> tuple[Formula, ...]:
    """All positive psi within budget jointly unsatisfiable with phi over
    every structure in K (free variables shared as v1, v2, ...)."""
    if classify(phi) not in (FragmentTag.ATOMIC, FragmentTag.POSITIVE):
        raise PreconditionError("resultant requires a positive formula")
    K = list(K)
    if not K:
        raise PreconditionError("resultant requires a nonempty structure class")
    sig = K[0].signature
    canon, n = _canonical_free(phi, sig)
    if n > budget.vars:
        raise PreconditionError("free variable count exceeds the vars budget")
    names = [var_name(i + 1) for i in range(n)]
    out = []
    for psi in enumerate_positive_formulas(sig, budget, free_count=n):
        witness = And(canon, psi)
        sat = any(
            evaluate(N, witness, dict(zip(names, asg)), check=False)
            for N in K
            for asg in itertools.product(N.universe, repeat=n)
        )
        if not sat:
            out.append(psi)
    return tuple(out)


# ---------------------------------------------------------------------------
# immersions


def _as_budget(budget) -> Budget:
    if isinstance(budget, Budget):
        return budget
    # a bare int bounds the size; a size-s witness can use at most s+1
    # distinct variables over a binary signature
    return Budget(size=int(budget), vars=int(budget) + 1)


def immersion_witness(h: Hom, budget) -> tuple[Formula, tuple[str, ...]] | None:
    """First positive formula/tuple on which h fails to reflect truth."""
    if not is_homomorphism(h):
        raise PreconditionError("immersion check requires a homomorphism")
    budget = _as_budget(budget)
    M, N = h.source, h.target
    sig = M.signature
    for n in range(0, min(budget.vars, len(M.universe)) + 1):
        names = [var_name(i + 1) for i in range(n)]
        formulas = enumerate_positive_formulas(sig, Budget(budget.size, budget.vars),
                                               free_count=n)
        for phi in formulas:
            for tup in itertools.product(M.universe, repeat=n):
                env_m = dict(zip(names, tup))
                env_n = dict(zip(names, (h.mapping[e] for e in tup)))
                if _eval(phi, M, env_m) != _eval(phi, N, env_n):
                    return phi, tup
    return None


def is_immersion(h: Hom, budget) -> bool:
    """Budget-bounded positive-truth reflection check.

    True means no witness was found within the budget; the budget is the
    caller's to report.
    """
    return immersion_witness(h, budget) is None
