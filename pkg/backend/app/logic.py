"""First-order formulas over graphs: AST, text DSL, evaluation and semantic checks.

Grammar (whitespace-insensitive)::

    formula := quant | impl
    quant   := ("exists" | "forall") var "." formula
    impl    := or ("->" impl)?
    or      := and ("|" and)*
    and     := neg ("&" neg)*
    neg     := "!" neg | atom
    atom    := "E(" var "," var ")" | var "=" var | ident "(" var ")"
             | "dist(" var "," var ")" ("<=" | ">") nat | "true" | "false"
             | "(" formula ")"

A quantifier is also accepted where an atom is expected; its body then
extends as far to the right as possible.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import chain, combinations
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence, Union

from .graphs import ColoredGraph, Graph, as_colored, ball, balls
from .reports import FAIL, PASS, make_report

RESERVED = frozenset({"exists", "forall", "true", "false", "dist", "E"})
INTERPRETATION_VARS = ("x", "y")


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnboundVariableError(ValueError):
    pass


class EvaluationError(ValueError):
    pass


class InterpretationError(ValueError):
    def __init__(self, message: str, witness: tuple[int, int]) -> None:
        super().__init__(f"{message}: witness {witness}")
        self.witness = witness


@dataclass(frozen=True)
class Truth:
    value: bool


@dataclass(frozen=True)
class Edge:
    a: str
    b: str


@dataclass(frozen=True)
class Equal:
    a: str
    b: str


@dataclass(frozen=True)
class Color:
    name: str
    var: str


@dataclass(frozen=True)
class Dist:
    a: str
    b: str
    op: str
    bound: int

    def __post_init__(self) -> None:
        if self.op not in ("<=", ">"):
            raise ValueError(f"unknown distance comparison {self.op!r}")
        if self.bound < 0:
            raise ValueError("distance bound must be nonnegative")


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


Formula = Union[Truth, Edge, Equal, Color, Dist, Not, And, Or, Implies, Exists, Forall]


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"(?P<num>\d+)|(?P<ident>[A-Za-z][A-Za-z0-9_]*)|(?P<op>->|<=|[!&|().,=>])"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN_RE.match(text, pos)
        if not match:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = match.lastgroup or "op"
        tokens.append(_Token(kind, match.group(0), pos))
        pos = match.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = _tokenize(text)
        self.index = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def peek(self, offset: int = 1) -> _Token:
        return self.tokens[min(self.index + offset, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        token = self.current
        if token.kind != "eof":
            self.index += 1
        return token

    def expect(self, text: str) -> _Token:
        token = self.current
        if token.text != text or token.kind == "eof":
            found = token.text or "end of input"
            raise FormulaSyntaxError(f"expected {text!r}, found {found!r}", token.pos)
        return self.advance()

    def variable(self) -> str:
        token = self.current
        if token.kind != "ident" or token.text in RESERVED:
            found = token.text or "end of input"
            raise FormulaSyntaxError(f"expected variable, found {found!r}", token.pos)
        return self.advance().text

    def number(self) -> int:
        token = self.current
        if token.kind != "num":
            found = token.text or "end of input"
            raise FormulaSyntaxError(f"expected number, found {found!r}", token.pos)
        return int(self.advance().text)

    def parse(self) -> Formula:
        formula = self.formula()
        if self.current.kind != "eof":
            raise FormulaSyntaxError(f"unexpected {self.current.text!r}", self.current.pos)
        return formula

    def formula(self) -> Formula:
        if self.current.kind == "ident" and self.current.text in ("exists", "forall"):
            return self.quantifier()
        return self.implication()

    def quantifier(self) -> Formula:
        keyword = self.advance().text
        var = self.variable()
        self.expect(".")
        body = self.formula()
        return Exists(var, body) if keyword == "exists" else Forall(var, body)

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.current.text == "->":
            self.advance()
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        parts = [self.conjunction()]
        while self.current.text == "|":
            self.advance()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self) -> Formula:
        parts = [self.negation()]
        while self.current.text == "&":
            self.advance()
            parts.append(self.negation())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def negation(self) -> Formula:
        if self.current.text == "!" and self.current.kind == "op":
            self.advance()
            return Not(self.negation())
        return self.atom()

    def atom(self) -> Formula:
        token = self.current
        if token.kind == "op" and token.text == "(":
            self.advance()
            inner = self.formula()
            self.expect(")")
            return inner
        if token.kind != "ident":
            found = token.text or "end of input"
            raise FormulaSyntaxError(f"expected atom, found {found!r}", token.pos)
        word = token.text
        if word in ("exists", "forall"):
            return self.quantifier()
        if word in ("true", "false"):
            self.advance()
            return Truth(word == "true")
        if word == "E" and self.peek().text == "(":
            self.advance()
            self.expect("(")
            a = self.variable()
            self.expect(",")
            b = self.variable()
            self.expect(")")
            return Edge(a, b)
        if word == "dist" and self.peek().text == "(":
            self.advance()
            self.expect("(")
            a = self.variable()
            self.expect(",")
            b = self.variable()
            self.expect(")")
            op_token = self.current
            if op_token.text not in ("<=", ">"):
                raise FormulaSyntaxError("expected '<=' or '>' after dist(...)", op_token.pos)
            self.advance()
            return Dist(a, b, op_token.text, self.number())
        if word in RESERVED:
            raise FormulaSyntaxError(f"reserved word {word!r} cannot start an atom here", token.pos)
        nxt = self.peek()
        if nxt.text == "(":
            self.advance()
            self.expect("(")
            var = self.variable()
            self.expect(")")
            return Color(word, var)
        if nxt.text == "=":
            a = self.variable()
            self.expect("=")
            return Equal(a, self.variable())
        raise FormulaSyntaxError(f"expected atom after {word!r}", nxt.pos)


def parse_formula(text: str, free_vars: Optional[Iterable[str]] = None) -> Formula:
    """Parse DSL text; when ``free_vars`` is given every free variable must be listed."""
    formula = _Parser(text).parse()
    if free_vars is not None:
        unbound = free_variables(formula) - set(free_vars)
        if unbound:
            raise UnboundVariableError(f"unbound variables: {sorted(unbound)}")
    return formula


def _operand(formula: Formula) -> str:
    text = format_formula(formula)
    if isinstance(formula, Equal):
        return f"({text})"
    return text


def format_formula(formula: Formula) -> str:
    """Fully parenthesised rendering; parse(format(f)) == f."""
    if isinstance(formula, Truth):
        return "true" if formula.value else "false"
    if isinstance(formula, Edge):
        return f"E({formula.a},{formula.b})"
    if isinstance(formula, Equal):
        return f"{formula.a}={formula.b}"
    if isinstance(formula, Color):
        return f"{formula.name}({formula.var})"
    if isinstance(formula, Dist):
        return f"dist({formula.a},{formula.b}){formula.op}{formula.bound}"
    if isinstance(formula, Not):
        return "!" + _operand(formula.body)
    if isinstance(formula, And):
        return "(" + " & ".join(_operand(p) for p in formula.parts) + ")"
    if isinstance(formula, Or):
        return "(" + " | ".join(_operand(p) for p in formula.parts) + ")"
    if isinstance(formula, Implies):
        return f"({_operand(formula.left)} -> {_operand(formula.right)})"
    if isinstance(formula, Exists):
        return f"(exists {formula.var}. {format_formula(formula.body)})"
    if isinstance(formula, Forall):
        return f"(forall {formula.var}. {format_formula(formula.body)})"
    raise TypeError(f"not a formula: {formula!r}")


def free_variables(formula: Formula) -> frozenset[str]:
    if isinstance(formula, Truth):
        return frozenset()
    if isinstance(formula, (Edge, Equal, Dist)):
        return frozenset({formula.a, formula.b})
    if isinstance(formula, Color):
        return frozenset({formula.var})
    if isinstance(formula, Not):
        return free_variables(formula.body)
    if isinstance(formula, (And, Or)):
        return frozenset().union(*(free_variables(p) for p in formula.parts))
    if isinstance(formula, Implies):
        return free_variables(formula.left) | free_variables(formula.right)
    if isinstance(formula, (Exists, Forall)):
        return free_variables(formula.body) - {formula.var}
    raise TypeError(f"not a formula: {formula!r}")


def colors_used(formula: Formula) -> frozenset[str]:
    if isinstance(formula, Color):
        return frozenset({formula.name})
    if isinstance(formula, Not):
        return colors_used(formula.body)
    if isinstance(formula, (And, Or)):
        return frozenset().union(*(colors_used(p) for p in formula.parts))
    if isinstance(formula, Implies):
        return colors_used(formula.left) | colors_used(formula.right)
    if isinstance(formula, (Exists, Forall)):
        return colors_used(formula.body)
    return frozenset()


def _conjuncts(formula: Formula) -> Iterator[Formula]:
    if isinstance(formula, And):
        for part in formula.parts:
            yield from _conjuncts(part)
    else:
        yield formula


def as_formula(formula: Union[str, Formula]) -> Formula:
    return parse_formula(formula) if isinstance(formula, str) else formula


# ---------------------------------------------------------------------------
# Evaluation

Env = dict[str, int]
Check = Callable[[Env], bool]
Domain = Callable[[Env], Iterable[int]]


class Evaluator:
    """Compiles a formula against one colored graph.

    Quantifiers whose body pins the bound variable to a neighbourhood, a
    color class, a ball or a single vertex only range over that set.
    """

    def __init__(self, graph: Union[Graph, ColoredGraph], formula: Union[str, Formula]) -> None:
        self.graph = as_colored(graph)
        self.formula = as_formula(formula)
        missing = colors_used(self.formula) - set(self.graph.colors)
        if missing:
            raise EvaluationError(f"missing colors: {sorted(missing)}")
        self.free = free_variables(self.formula)
        self._check = self._compile(self.formula)

    def __call__(self, env: Mapping[str, int]) -> bool:
        return self._check(dict(env))

    def holds(self, env: Mapping[str, int]) -> bool:
        return self._check(dict(env))

    def _compile(self, formula: Formula) -> Check:
        base = self.graph.base
        adj = base.adj
        if isinstance(formula, Truth):
            value = formula.value
            return lambda env: value
        if isinstance(formula, Edge):
            a, b = formula.a, formula.b
            return lambda env: env[b] in adj[env[a]]
        if isinstance(formula, Equal):
            a, b = formula.a, formula.b
            return lambda env: env[a] == env[b]
        if isinstance(formula, Color):
            members = self.graph.colors[formula.name]
            var = formula.var
            return lambda env: env[var] in members
        if isinstance(formula, Dist):
            a, b, bound = formula.a, formula.b, formula.bound
            if formula.op == "<=":
                return lambda env: base.distance(env[a], env[b]) <= bound
            return lambda env: base.distance(env[a], env[b]) > bound
        if isinstance(formula, Not):
            body = self._compile(formula.body)
            return lambda env: not body(env)
        if isinstance(formula, And):
            parts = [self._compile(p) for p in formula.parts]
            return lambda env: all(p(env) for p in parts)
        if isinstance(formula, Or):
            parts = [self._compile(p) for p in formula.parts]
            return lambda env: any(p(env) for p in parts)
        if isinstance(formula, Implies):
            left = self._compile(formula.left)
            right = self._compile(formula.right)
            return lambda env: (not left(env)) or right(env)
        if isinstance(formula, Exists):
            return self._compile_exists(formula)
        if isinstance(formula, Forall):
            return self._compile_forall(formula)
        raise TypeError(f"not a formula: {formula!r}")

    def _guard(self, var: str, conjuncts: Sequence[Formula]) -> Domain:
        base = self.graph.base
        adj = base.adj

        def other_side(atom: Union[Edge, Equal, Dist]) -> Optional[str]:
            if atom.a == var and atom.b != var:
                return atom.b
            if atom.b == var and atom.a != var:
                return atom.a
            return None

        for c in conjuncts:
            if isinstance(c, Equal) and (other := other_side(c)) is not None:
                return lambda env, o=other: (env[o],)
        for c in conjuncts:
            if isinstance(c, Edge) and (other := other_side(c)) is not None:
                return lambda env, o=other: adj[env[o]]
        for c in conjuncts:
            if isinstance(c, Color) and c.var == var:
                members = tuple(sorted(self.graph.colors[c.name]))
                return lambda env: members
        for c in conjuncts:
            if isinstance(c, Dist) and c.op == "<=" and (other := other_side(c)) is not None:
                return lambda env, o=other, r=c.bound: ball(base, env[o], r)
        everything = range(base.n)
        return lambda env: everything

    def _compile_exists(self, formula: Exists) -> Check:
        var = formula.var
        body = self._compile(formula.body)
        domain = self._guard(var, list(_conjuncts(formula.body)))

        def check(env: Env) -> bool:
            saved = env.get(var)
            try:
                for v in domain(env):
                    env[var] = v
                    if body(env):
                        return True
                return False
            finally:
                if saved is None:
                    env.pop(var, None)
                else:
                    env[var] = saved

        return check

    def _compile_forall(self, formula: Forall) -> Check:
        var = formula.var
        body = self._compile(formula.body)
        if isinstance(formula.body, Implies):
            domain = self._guard(var, list(_conjuncts(formula.body.left)))
        else:
            everything = range(self.graph.n)
            domain = lambda env: everything  # noqa: E731

        def check(env: Env) -> bool:
            saved = env.get(var)
            try:
                for v in domain(env):
                    env[var] = v
                    if not body(env):
                        return False
                return True
            finally:
                if saved is None:
                    env.pop(var, None)
                else:
                    env[var] = saved

        return check


def evaluate(
    graph: Union[Graph, ColoredGraph],
    formula: Union[str, Formula],
    assignment: Mapping[str, int],
) -> bool:
    evaluator = Evaluator(graph, formula)
    missing = evaluator.free - set(assignment)
    if missing:
        raise EvaluationError(f"incomplete assignment, missing {sorted(missing)}")
    extra = set(assignment) - evaluator.free
    if extra:
        raise EvaluationError(f"assignment names variables that are not free: {sorted(extra)}")
    for var, v in assignment.items():
        if not isinstance(v, int) or not 0 <= v < evaluator.graph.n:
            raise EvaluationError(f"{var} assigned to invalid vertex {v!r}")
    return evaluator.holds(assignment)


def _pair_evaluator(graph: ColoredGraph, formula: Formula) -> Callable[[int, int], bool]:
    free = free_variables(formula)
    if not free <= set(INTERPRETATION_VARS):
        raise EvaluationError(
            f"interpretation formulas may only use x and y freely, found {sorted(free)}"
        )
    evaluator = Evaluator(graph, formula)
    return lambda u, v: evaluator.holds({"x": u, "y": v})


def interpretation_pairs(
    graph: Union[Graph, ColoredGraph], psi: Union[str, Formula]
) -> set[tuple[int, int]]:
    """Ordered pairs (u, v), u != v, with G |= psi(u, v)."""
    graph = as_colored(graph)
    holds = _pair_evaluator(graph, as_formula(psi))
    return {(u, v) for u in range(graph.n) for v in range(graph.n) if u != v and holds(u, v)}


def interpret(graph: Union[Graph, ColoredGraph], psi: Union[str, Formula]) -> Graph:
    graph = as_colored(graph)
    holds = _pair_evaluator(graph, as_formula(psi))
    edges = set()
    for u in range(graph.n):
        if holds(u, u):
            raise InterpretationError("formula is not antireflexive", (u, u))
    for u in range(graph.n):
        for v in range(u + 1, graph.n):
            forward = holds(u, v)
            if forward != holds(v, u):
                raise InterpretationError("formula is not symmetric", (u, v))
            if forward:
                edges.add((u, v))
    return Graph(n=graph.n, edges=frozenset(edges), labels=graph.base.labels)


def check_symmetric_antireflexive(
    psi: Union[str, Formula], instances: Sequence[Union[Graph, ColoredGraph]]
) -> dict:
    psi = as_formula(psi)
    for index, instance in enumerate(instances):
        instance = as_colored(instance)
        holds = _pair_evaluator(instance, psi)
        for u in range(instance.n):
            if holds(u, u):
                return make_report(FAIL, witness=[u, u], instance=index, violation="antireflexive")
        for u, v in combinations(range(instance.n), 2):
            if holds(u, v) != holds(v, u):
                return make_report(FAIL, witness=[u, v], instance=index, violation="symmetric")
    return make_report(PASS, instances=len(instances))


def check_range(psi: Union[str, Formula], graph: Union[Graph, ColoredGraph], d: int) -> dict:
    graph = as_colored(graph)
    base = graph.base
    realized = 0
    witness = None
    for u, v in sorted(interpretation_pairs(graph, psi)):
        dist = base.distance(u, v)
        if dist > realized:
            realized = dist
        if dist > d and witness is None:
            witness = [u, v]
    status = FAIL if witness is not None else PASS
    return make_report(status, witness=witness, realized_bound=realized, declared_range=d)


def check_local(
    rho: Union[str, Formula],
    graph: Union[Graph, ColoredGraph],
    r: int,
    pairs: Optional[Iterable[tuple[int, int]]] = None,
) -> dict:
    graph = as_colored(graph)
    rho = as_formula(rho)
    holds = _pair_evaluator(graph, rho)
    if pairs is None:
        # distinct pairs before the diagonal
        distinct = ((u, v) for u in range(graph.n) for v in range(graph.n) if u != v)
        pairs = chain(distinct, ((u, u) for u in range(graph.n)))
    checked = 0
    for u, v in pairs:
        checked += 1
        local, index_map = graph.induced(balls(graph.base, (u, v), r))
        local_holds = _pair_evaluator(local, rho)(index_map[u], index_map[v])
        global_holds = holds(u, v)
        if local_holds != global_holds:
            return make_report(
                FAIL,
                witness=[u, v],
                checked=checked,
                radius=r,
                global_value=global_holds,
                local_value=local_holds,
            )
    return make_report(PASS, checked=checked, radius=r)


CASES = ("clique", "edgeless", "equals_rho", "equals_not_rho")


def interpretation_case_report(
    psi: Union[str, Formula], graph: Union[Graph, ColoredGraph], rho: Union[str, Formula]
) -> dict[str, bool]:
    graph = as_colored(graph)
    psi_holds = _pair_evaluator(graph, as_formula(psi))
    rho_holds = _pair_evaluator(graph, as_formula(rho))
    cases = dict.fromkeys(CASES, True)
    for u in range(graph.n):
        for v in range(graph.n):
            if u == v:
                continue
            p = psi_holds(u, v)
            q = rho_holds(u, v)
            if not p:
                cases["clique"] = False
            if p:
                cases["edgeless"] = False
            if p != q:
                cases["equals_rho"] = False
            if p == q:
                cases["equals_not_rho"] = False
            if not any(cases.values()):
                return cases
    return cases


def classify_interpretation(
    psi: Union[str, Formula], graph: Union[Graph, ColoredGraph], rho: Union[str, Formula]
) -> str:
    cases = interpretation_case_report(psi, graph, rho)
    for case in CASES:
        if cases[case]:
            return case
    return "none"


def scattered_tuple_exists(
    graph: Union[Graph, ColoredGraph],
    alpha: Union[str, Formula],
    k: int,
    r: int,
) -> Optional[tuple[int, ...]]:
    """k vertices satisfying alpha with pairwise distance > 2r, or None."""
    graph = as_colored(graph)
    alpha = as_formula(alpha)
    free = sorted(free_variables(alpha))
    if len(free) > 1:
        raise EvaluationError(f"alpha must have at most one free variable, found {free}")
    var = free[0] if free else "x"
    evaluator = Evaluator(graph, alpha)
    candidates = [v for v in range(graph.n) if evaluator.holds({var: v} if free else {})]
    base = graph.base
    chosen: list[int] = []

    def extend(start: int) -> bool:
        if len(chosen) == k:
            return True
        for idx in range(start, len(candidates)):
            v = candidates[idx]
            if all(base.distance(v, w) > 2 * r for w in chosen):
                chosen.append(v)
                if extend(idx + 1):
                    return True
                chosen.pop()
        return False

    return tuple(chosen) if extend(0) else None
