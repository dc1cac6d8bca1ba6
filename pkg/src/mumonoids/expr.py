"""The expression tree for collection programs.

Programs are terms over bags: bag displays, flatmap, join, cogroup,
folds, and a fixpoint form that iterates a body over a seed until the
accumulated bag stops changing. Scalars, tuples and constructor terms
ride along as ordinary values. Functions are lambdas with one or more
pattern cases; multi-argument application is curried.

The tree is immutable. Rewrites build new nodes, and structural
equality is plain ``==``. ``format_expr`` prints any tree in the
surface syntax, and the parser maps that text back to an equal tree, so
plans can be logged, diffed and re-run as text.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterator, Mapping, Optional, Tuple

from .aggregates import DISTINCT, Aggregator
from .errors import MalformedTermError
from .types import TypeExpr, format_type
from .values import (
    Bag,
    Constructed,
    FALSE,
    PCons,
    Pattern,
    PVar,
    TRUE,
    Value,
    format_value,
    pattern_vars,
)


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Lit(Expr):
    """A constant, already in value form."""

    value: Value

    def __post_init__(self):
        if not isinstance(self.value, Value):
            raise MalformedTermError(
                f"literal holds a {type(self.value).__name__}, not a value"
            )


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Prim(Expr):
    """A reference to a named primitive function."""

    name: str


@dataclass(frozen=True)
class Singleton(Expr):
    """The one-element bag {e}."""

    item: Expr


@dataclass(frozen=True)
class Construct(Expr):
    name: str
    args: Tuple[Expr, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Lambda(Expr):
    """A function given as pattern cases tried in order."""

    cases: Tuple[Tuple[Pattern, Expr], ...]

    def __post_init__(self):
        cases = tuple((p, b) for p, b in self.cases)
        if not cases:
            raise MalformedTermError("a function needs at least one case")
        object.__setattr__(self, "cases", cases)


@dataclass(frozen=True)
class Apply(Expr):
    func: Expr
    arg: Expr


@dataclass(frozen=True)
class Let(Expr):
    name: str
    bound: Expr
    body: Expr


@dataclass(frozen=True)
class Flatmap(Expr):
    """Map a bag-returning function over a bag and union the results."""

    func: Expr
    source: Expr


@dataclass(frozen=True)
class Reduce(Expr):
    """Fold a whole bag to one value with a binary operator and a zero."""

    op: Expr
    zero: Expr
    source: Expr


@dataclass(frozen=True)
class ReduceByKey(Expr):
    """Fold the values of a bag of pairs, per key.

    ``compat`` records the programmer's ``reduceByKey!`` annotation: a
    claim that folding early, inside a producing loop, does not change
    the result. The optimizer tests the claim before relying on it.
    """

    op: Expr
    source: Expr
    compat: bool = False


@dataclass(frozen=True)
class Join(Expr):
    """Pair up elements of two bags of key-value pairs by equal key."""

    left: Expr
    right: Expr


@dataclass(frozen=True)
class Cogroup(Expr):
    """Group two bags of pairs by key, one output per key."""

    left: Expr
    right: Expr


@dataclass(frozen=True)
class Fixpoint(Expr):
    """Iterate ``body`` from ``seed`` until the accumulated bag is stable.

    ``delta`` is the aggregation applied between iterations; the default
    deduplicates, which is what makes loops over cyclic data terminate.
    """

    seed: Expr
    body: Expr
    delta: Aggregator = DISTINCT


@dataclass(frozen=True)
class Dist(Expr):
    """Mark a bag as distributed over the cluster's partitions."""

    source: Expr


@dataclass(frozen=True)
class Program:
    """Named, typed inputs plus the expression to evaluate over them."""

    inputs: Tuple[Tuple[str, TypeExpr], ...]
    body: Expr


EMPTY = Lit(Bag())
TRUE_E = Lit(TRUE)
FALSE_E = Lit(FALSE)


def lam(pattern: Pattern, body: Expr) -> Lambda:
    return Lambda(((pattern, body),))


def prim_call(name: str, *args: Expr) -> Expr:
    e: Expr = Prim(name)
    for a in args:
        e = Apply(e, a)
    return e


def make_if(cond: Expr, then: Expr, els: Expr) -> Expr:
    """Branch on a boolean by applying a two-case function to it."""
    return Apply(Lambda(((PCons("True"), then), (PCons("False"), els))), cond)


def as_if(e: Expr) -> Optional[Tuple[Expr, Expr, Expr]]:
    """Recognize the branching shape; returns (cond, then, else)."""
    if not (isinstance(e, Apply) and isinstance(e.func, Lambda)):
        return None
    cases = e.func.cases
    if len(cases) != 2:
        return None
    by_name = {}
    for pat, body in cases:
        if not (isinstance(pat, PCons) and not pat.args):
            return None
        by_name[pat.name] = body
    if by_name.keys() != {"True", "False"}:
        return None
    return e.arg, by_name["True"], by_name["False"]


def children(e: Expr) -> Tuple[Expr, ...]:
    """Immediate subexpressions, including case bodies and the fixpoint
    aggregation's operator."""
    if isinstance(e, (Lit, Var, Prim)):
        return ()
    if isinstance(e, Singleton):
        return (e.item,)
    if isinstance(e, Construct):
        return e.args
    if isinstance(e, Lambda):
        return tuple(body for _, body in e.cases)
    if isinstance(e, Apply):
        return (e.func, e.arg)
    if isinstance(e, Let):
        return (e.bound, e.body)
    if isinstance(e, Flatmap):
        return (e.func, e.source)
    if isinstance(e, Reduce):
        return (e.op, e.zero, e.source)
    if isinstance(e, ReduceByKey):
        return (e.op, e.source)
    if isinstance(e, (Join, Cogroup)):
        return (e.left, e.right)
    if isinstance(e, Fixpoint):
        extra = () if e.delta.op is None else (e.delta.op,)
        return (e.seed, e.body) + extra
    if isinstance(e, Dist):
        return (e.source,)
    raise MalformedTermError(f"unknown expression node {type(e).__name__}")


def map_children(e: Expr, f: Callable[[Expr], Expr]) -> Expr:
    """Rebuild ``e`` with ``f`` applied to each immediate subexpression.

    Returns ``e`` itself when nothing changed, so shared subtrees stay
    shared.
    """
    if isinstance(e, (Lit, Var, Prim)):
        return e
    if isinstance(e, Singleton):
        item = f(e.item)
        return e if item is e.item else Singleton(item)
    if isinstance(e, Construct):
        args = tuple(f(a) for a in e.args)
        return e if args == e.args else Construct(e.name, args)
    if isinstance(e, Lambda):
        cases = tuple((p, f(b)) for p, b in e.cases)
        return e if cases == e.cases else Lambda(cases)
    if isinstance(e, Apply):
        func, arg = f(e.func), f(e.arg)
        return e if (func is e.func and arg is e.arg) else Apply(func, arg)
    if isinstance(e, Let):
        bound, body = f(e.bound), f(e.body)
        if bound is e.bound and body is e.body:
            return e
        return Let(e.name, bound, body)
    if isinstance(e, Flatmap):
        func, source = f(e.func), f(e.source)
        if func is e.func and source is e.source:
            return e
        return Flatmap(func, source)
    if isinstance(e, Reduce):
        op, zero, source = f(e.op), f(e.zero), f(e.source)
        if op is e.op and zero is e.zero and source is e.source:
            return e
        return Reduce(op, zero, source)
    if isinstance(e, ReduceByKey):
        op, source = f(e.op), f(e.source)
        if op is e.op and source is e.source:
            return e
        return ReduceByKey(op, source, e.compat)
    if isinstance(e, Join):
        left, right = f(e.left), f(e.right)
        return e if (left is e.left and right is e.right) else Join(left, right)
    if isinstance(e, Cogroup):
        left, right = f(e.left), f(e.right)
        return e if (left is e.left and right is e.right) else Cogroup(left, right)
    if isinstance(e, Fixpoint):
        seed, body = f(e.seed), f(e.body)
        delta = e.delta
        if delta.op is not None:
            op = f(delta.op)
            if op is not delta.op:
                delta = Aggregator(delta.kind, op)
        if seed is e.seed and body is e.body and delta is e.delta:
            return e
        return Fixpoint(seed, body, delta)
    if isinstance(e, Dist):
        source = f(e.source)
        return e if source is e.source else Dist(source)
    raise MalformedTermError(f"unknown expression node {type(e).__name__}")


def walk(e: Expr) -> Iterator[Expr]:
    """Every subexpression, outermost first."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def free_vars(e: Expr) -> FrozenSet[str]:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Lambda):
        out: FrozenSet[str] = frozenset()
        for pat, body in e.cases:
            out |= free_vars(body) - set(pattern_vars(pat))
        return out
    if isinstance(e, Let):
        return free_vars(e.bound) | (free_vars(e.body) - {e.name})
    out = frozenset()
    for c in children(e):
        out |= free_vars(c)
    return out


def fresh_name(base: str, used) -> str:
    if base not in used:
        return base
    i = 2
    while f"{base}_{i}" in used:
        i += 1
    return f"{base}_{i}"


def rename_pattern(p: Pattern, renaming: Mapping[str, str]) -> Pattern:
    if isinstance(p, PVar):
        return PVar(renaming.get(p.name, p.name))
    assert isinstance(p, PCons)
    return PCons(p.name, tuple(rename_pattern(a, renaming) for a in p.args))


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace free variables by expressions, renaming binders that
    would capture a variable of a replacement."""
    mapping = {k: v for k, v in mapping.items() if k in free_vars(e)}
    if not mapping:
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Lambda):
        return Lambda(tuple(_subst_case(p, b, mapping) for p, b in e.cases))
    if isinstance(e, Let):
        bound = substitute(e.bound, mapping)
        pat, body = _subst_case(PVar(e.name), e.body, mapping)
        assert isinstance(pat, PVar)
        return Let(pat.name, bound, body)
    return map_children(e, lambda c: substitute(c, mapping))


def _subst_case(pat: Pattern, body: Expr, mapping: Mapping[str, Expr]):
    bound = set(pattern_vars(pat))
    active = {
        k: v for k, v in mapping.items() if k not in bound and k in free_vars(body)
    }
    if not active:
        return pat, body
    incoming: FrozenSet[str] = frozenset()
    for repl in active.values():
        incoming |= free_vars(repl)
    captured = sorted(bound & incoming)
    if captured:
        avoid = set(free_vars(body)) | bound | set(incoming) | set(active)
        renaming: Dict[str, str] = {}
        for name in captured:
            fresh = fresh_name(name, avoid)
            avoid.add(fresh)
            renaming[name] = fresh
        pat = rename_pattern(pat, renaming)
        body = substitute(body, {old: Var(new) for old, new in renaming.items()})
    return pat, substitute(body, active)


def inline_lets(e: Expr) -> Expr:
    """Remove every let by substituting its definition into its body."""
    e = map_children(e, inline_lets)
    if isinstance(e, Let):
        return substitute(e.body, {e.name: e.bound})
    return e


def normalize_literals(e: Expr) -> Expr:
    """Fold constructors and singletons over constants into literals.

    The parser applies the same folding, so a printed tree in this form
    parses back to an equal tree.
    """
    e = map_children(e, normalize_literals)
    if isinstance(e, Construct) and all(isinstance(a, Lit) for a in e.args):
        return Lit(Constructed(e.name, tuple(a.value for a in e.args)))
    if isinstance(e, Singleton) and isinstance(e.item, Lit):
        return Lit(Bag((e.item.value,)))
    return e


def pattern_to_expr(p: Pattern) -> Expr:
    """The expression that rebuilds exactly what a pattern matches."""
    if isinstance(p, PVar):
        return Var(p.name)
    assert isinstance(p, PCons)
    return normalize_literals(
        Construct(p.name, tuple(pattern_to_expr(a) for a in p.args))
    )


# Printing. The grammar below mirrors the parser: binding strength
# grows from lambda/let/if (0) through or/and, comparisons, additive
# and multiplicative operators up to application and atoms (7).

_BINOPS = {
    "==": 3,
    "!=": 3,
    "<": 3,
    "<=": 3,
    ">": 3,
    ">=": 3,
    "+": 4,
    "-": 4,
    "++": 4,
    "*": 5,
    "/": 5,
}

_NONASSOC = {"==", "!=", "<", "<=", ">", ">="}


def format_pattern(p: Pattern) -> str:
    if isinstance(p, PVar):
        return p.name
    assert isinstance(p, PCons)
    if p.name == "Tuple" and len(p.args) >= 2:
        return "(" + ", ".join(format_pattern(a) for a in p.args) + ")"
    if not p.args:
        return p.name
    return f"{p.name}({', '.join(format_pattern(a) for a in p.args)})"


def format_expr(e: Expr) -> str:
    return _fmt(e, 0)


def format_program(p: Program) -> str:
    lines = [f"input {name} : {format_type(t)}" for name, t in p.inputs]
    if lines:
        lines.append("")
    lines.append(format_expr(p.body))
    return "\n".join(lines) + "\n"


def _wrap(text: str, prec: int, level: int) -> str:
    return f"({text})" if prec > level else text


def _spine(e: Expr):
    args = []
    while isinstance(e, Apply):
        args.append(e.arg)
        e = e.func
    return e, list(reversed(args))


def _trailing_lambda(e: Expr) -> bool:
    """Whether the printed form of ``e`` ends inside a case body, where
    a following ``|`` would be mis-attached."""
    if isinstance(e, Lambda):
        return True
    if isinstance(e, Let):
        return _trailing_lambda(e.body)
    shape = as_if(e)
    if shape is not None:
        return _trailing_lambda(shape[2])
    return False


def _fmt_call(name: str, *parts: Expr) -> str:
    return f"{name}({', '.join(_fmt(p, 0) for p in parts)})"


def _fmt(e: Expr, prec: int) -> str:
    if isinstance(e, Lit):
        v = e.value
        if isinstance(v, Constructed) and v.name == "Tuple" and len(v.args) >= 2:
            return "(" + ", ".join(format_value(a) for a in v.args) + ")"
        return format_value(v)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Prim):
        return e.name if e.name.isidentifier() else f"({e.name})"
    if isinstance(e, Singleton):
        return "{" + _fmt(e.item, 0) + "}"
    if isinstance(e, Construct):
        if e.name == "Tuple" and len(e.args) >= 2:
            return "(" + ", ".join(_fmt(a, 0) for a in e.args) + ")"
        if not e.args:
            return e.name
        return _fmt_call(e.name, *e.args)
    if isinstance(e, Lambda):
        parts = []
        last = len(e.cases) - 1
        for i, (pat, body) in enumerate(e.cases):
            text = _fmt(body, 0)
            if i != last and _trailing_lambda(body):
                text = f"({text})"
            parts.append(f"{format_pattern(pat)} -> {text}")
        return _wrap("\\" + " | ".join(parts), prec, 0)
    if isinstance(e, Apply):
        shape = as_if(e)
        if shape is not None:
            cond, then, els = shape
            text = f"if {_fmt(cond, 0)} then {_fmt(then, 0)} else {_fmt(els, 0)}"
            return _wrap(text, prec, 0)
        head, args = _spine(e)
        if isinstance(head, Prim):
            level = _BINOPS.get(head.name)
            if level is not None and len(args) == 2:
                left_min = level + 1 if head.name in _NONASSOC else level
                text = (
                    f"{_fmt(args[0], left_min)} {head.name} {_fmt(args[1], level + 1)}"
                )
                return _wrap(text, prec, level)
            if head.name == "not" and len(args) == 1:
                return _wrap(f"not {_fmt(args[0], 6)}", prec, 6)
        return _fmt_call(_fmt(head, 7), *args)
    if isinstance(e, Let):
        text = f"let {e.name} = {_fmt(e.bound, 0)} in {_fmt(e.body, 0)}"
        return _wrap(text, prec, 0)
    if isinstance(e, Flatmap):
        return _fmt_call("flatmap", e.func, e.source)
    if isinstance(e, Reduce):
        return _fmt_call("reduce", e.op, e.zero, e.source)
    if isinstance(e, ReduceByKey):
        name = "reduceByKey!" if e.compat else "reduceByKey"
        return _fmt_call(name, e.op, e.source)
    if isinstance(e, Join):
        return _fmt_call("join", e.left, e.right)
    if isinstance(e, Cogroup):
        return _fmt_call("cogroup", e.left, e.right)
    if isinstance(e, Fixpoint):
        if e.delta == DISTINCT:
            return _fmt_call("fixpoint", e.seed, e.body)
        return f"fixpoint[{e.delta.describe()}]({_fmt(e.seed, 0)}, {_fmt(e.body, 0)})"
    if isinstance(e, Dist):
        return _fmt_call("dist", e.source)
    raise MalformedTermError(f"unknown expression node {type(e).__name__}")
