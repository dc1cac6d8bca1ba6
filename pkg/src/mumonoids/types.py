"""Types for collection programs and the operations that combine them.

The interesting types are sums of constructor cases (tuples are the
one-case sum named Tuple, booleans the two-case sum False | True) and
bags, which carry a locality marker: a local bag lives on one machine,
a distributed bag is spread over a cluster. Distributed bags never nest.

Two types can be merged with :func:`sum_combine`, which unions the case
lists of sums and otherwise requires equality. Subtyping is derived from
it: ``a`` is a subtype of ``b`` exactly when combining them gives ``b``.

Rigid types are opaque placeholders used to test whether a function can
possibly depend on some part of its input. A rigid type combines only
with itself, so any attempt to compute with it fails to typecheck.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, Optional, Tuple

from .errors import IncompatibleTypesError, TypeCheckError
from .values import PCons, Pattern, PVar, pattern_vars


class TypeExpr:
    __slots__ = ()


@dataclass(frozen=True)
class Basic(TypeExpr):
    """A scalar type: Int, Float or String."""

    name: str


@dataclass(frozen=True)
class Sum(TypeExpr):
    """A union of constructor cases, each with a parameter list.

    Cases are kept sorted by constructor name so that equality is
    insensitive to the order they were written in.
    """

    cases: Tuple[Tuple[str, Tuple[TypeExpr, ...]], ...]

    def __post_init__(self):
        cases = tuple(sorted(self.cases, key=lambda c: c[0]))
        names = [c[0] for c in cases]
        if len(set(names)) != len(names):
            raise TypeCheckError(
                f"sum type repeats a constructor: {names}", rule="sum-formation"
            )
        object.__setattr__(self, "cases", cases)

    def case(self, name: str) -> Optional[Tuple[TypeExpr, ...]]:
        for cname, params in self.cases:
            if cname == name:
                return params
        return None


@dataclass(frozen=True)
class LocalBag(TypeExpr):
    elem: TypeExpr


@dataclass(frozen=True)
class DistBag(TypeExpr):
    elem: TypeExpr

    def __post_init__(self):
        if contains_dist(self.elem):
            raise TypeCheckError(
                "distributed bags cannot nest inside another distributed bag",
                rule="bag-nesting",
            )


@dataclass(frozen=True)
class Func(TypeExpr):
    dom: TypeExpr
    cod: TypeExpr


@dataclass(frozen=True)
class Rigid(TypeExpr):
    """An opaque type variable that unifies only with itself."""

    name: str


@dataclass(frozen=True)
class Bottom(TypeExpr):
    """The element type of the empty bag. Combines with anything."""


INT = Basic("Int")
FLOAT = Basic("Float")
STRING = Basic("String")
BOOL = Sum((("False", ()), ("True", ())))
BOTTOM = Bottom()

_rigid_counter = itertools.count()


def fresh_rigid() -> Rigid:
    return Rigid(f"a{next(_rigid_counter)}")


def tuple_t(*parts: TypeExpr) -> Sum:
    return Sum((("Tuple", tuple(parts)),))


def sum_case(name: str, *params: TypeExpr) -> Sum:
    return Sum(((name, tuple(params)),))


def is_bag(t: TypeExpr) -> bool:
    return isinstance(t, (LocalBag, DistBag))


def same_bag(t: TypeExpr, elem: TypeExpr) -> TypeExpr:
    """A bag with the same locality as ``t`` but element type ``elem``."""
    if isinstance(t, LocalBag):
        return LocalBag(elem)
    if isinstance(t, DistBag):
        return DistBag(elem)
    raise TypeCheckError(f"not a bag type: {format_type(t)}")


def pair_elem(t: TypeExpr) -> Optional[Tuple[TypeExpr, TypeExpr]]:
    """The two components if ``t`` is exactly a pair type."""
    if isinstance(t, Sum) and len(t.cases) == 1:
        name, params = t.cases[0]
        if name == "Tuple" and len(params) == 2:
            return params[0], params[1]
    return None


def contains_dist(t: TypeExpr) -> bool:
    if isinstance(t, DistBag):
        return True
    if isinstance(t, LocalBag):
        return contains_dist(t.elem)
    if isinstance(t, Sum):
        return any(contains_dist(p) for _, params in t.cases for p in params)
    if isinstance(t, Func):
        return contains_dist(t.dom) or contains_dist(t.cod)
    return False


def contains_rigid(t: TypeExpr) -> bool:
    if isinstance(t, Rigid):
        return True
    if isinstance(t, (LocalBag, DistBag)):
        return contains_rigid(t.elem)
    if isinstance(t, Sum):
        return any(contains_rigid(p) for _, params in t.cases for p in params)
    if isinstance(t, Func):
        return contains_rigid(t.dom) or contains_rigid(t.cod)
    return False


def contains_func(t: TypeExpr) -> bool:
    if isinstance(t, Func):
        return True
    if isinstance(t, (LocalBag, DistBag)):
        return contains_func(t.elem)
    if isinstance(t, Sum):
        return any(contains_func(p) for _, params in t.cases for p in params)
    return False


def sum_combine(a: TypeExpr, b: TypeExpr) -> TypeExpr:
    """Merge two types into their least common shape.

    Sums union their case lists; a constructor shared by both sides must
    agree on arity and its parameters are merged recursively. Bags merge
    element-wise when their locality matches. Anything else must be
    equal. Raises IncompatibleTypesError when no merge exists.
    """
    if a == b:
        return a
    if isinstance(a, Bottom):
        return b
    if isinstance(b, Bottom):
        return a
    if isinstance(a, LocalBag) and isinstance(b, LocalBag):
        return LocalBag(sum_combine(a.elem, b.elem))
    if isinstance(a, DistBag) and isinstance(b, DistBag):
        return DistBag(sum_combine(a.elem, b.elem))
    if isinstance(a, Sum) and isinstance(b, Sum):
        merged: Dict[str, Tuple[TypeExpr, ...]] = {n: p for n, p in a.cases}
        for name, params in b.cases:
            if name not in merged:
                merged[name] = params
                continue
            mine = merged[name]
            if len(mine) != len(params):
                raise IncompatibleTypesError(
                    f"constructor {name} used with arities {len(mine)} and {len(params)}",
                    rule="sum-combine",
                )
            merged[name] = tuple(
                sum_combine(x, y) for x, y in zip(mine, params)
            )
        return Sum(tuple(merged.items()))
    raise IncompatibleTypesError(
        f"cannot combine {format_type(a)} with {format_type(b)}", rule="sum-combine"
    )


def subtype(a: TypeExpr, b: TypeExpr) -> bool:
    """True when every value of ``a`` is also a value of ``b``."""
    try:
        return sum_combine(a, b) == b
    except IncompatibleTypesError:
        return False


class TypeEnv:
    """An immutable mapping from variable names to types."""

    __slots__ = ("_bindings",)

    def __init__(self, bindings: Optional[Dict[str, TypeExpr]] = None):
        self._bindings = dict(bindings or {})

    def lookup(self, name: str) -> TypeExpr:
        try:
            return self._bindings[name]
        except KeyError:
            raise TypeCheckError(f"unbound variable {name!r}", rule="var")

    def __contains__(self, name: str) -> bool:
        return name in self._bindings

    def names(self):
        return self._bindings.keys()

    def disjoint_union(self, other: "TypeEnv") -> "TypeEnv":
        """Combine two environments that must not share names."""
        overlap = self._bindings.keys() & other._bindings.keys()
        if overlap:
            raise TypeCheckError(
                f"environments both bind {sorted(overlap)}", rule="env-union"
            )
        merged = dict(self._bindings)
        merged.update(other._bindings)
        return TypeEnv(merged)

    def extend(self, bindings: Dict[str, TypeExpr]) -> "TypeEnv":
        """Layer new bindings over this environment; new names win."""
        merged = dict(self._bindings)
        merged.update(bindings)
        return TypeEnv(merged)

    def __repr__(self):
        inner = ", ".join(
            f"{k}: {format_type(v)}" for k, v in sorted(self._bindings.items())
        )
        return "{" + inner + "}"


def match_type(pattern: Pattern, t: TypeExpr) -> Dict[str, TypeExpr]:
    """Types of the variables a pattern binds when matched against ``t``."""
    if isinstance(pattern, PVar):
        return {pattern.name: t}
    assert isinstance(pattern, PCons)
    if not isinstance(t, Sum):
        raise TypeCheckError(
            f"pattern {pattern!r} cannot match a {format_type(t)}",
            rule="pattern-type",
        )
    params = t.case(pattern.name)
    if params is None:
        raise TypeCheckError(
            f"type {format_type(t)} has no constructor {pattern.name}",
            rule="pattern-type",
        )
    if len(params) != len(pattern.args):
        raise TypeCheckError(
            f"constructor {pattern.name} has {len(params)} parameters, "
            f"pattern binds {len(pattern.args)}",
            rule="pattern-type",
        )
    bindings: Dict[str, TypeExpr] = {}
    for sub, pt in zip(pattern.args, params):
        found = match_type(sub, pt)
        dup = bindings.keys() & found.keys()
        if dup:
            raise TypeCheckError(
                f"pattern binds {sorted(dup)} more than once", rule="pattern-type"
            )
        bindings.update(found)
    return bindings


def slice_type(pattern: Pattern, hint: Optional[TypeExpr]) -> TypeExpr:
    """The input type a single function case accepts.

    A variable pattern accepts exactly the hinted type. A constructor
    pattern accepts the hinted case when the hint provides one, and is
    otherwise reconstructed bottom-up, which only works when every leaf
    under it is a nullary constructor.
    """
    if isinstance(pattern, PVar):
        if hint is None:
            raise TypeCheckError(
                f"cannot infer a type for parameter {pattern.name!r} here",
                rule="lambda-param",
            )
        return hint
    assert isinstance(pattern, PCons)
    params = hint.case(pattern.name) if isinstance(hint, Sum) else None
    if params is not None and len(params) != len(pattern.args):
        raise TypeCheckError(
            f"constructor {pattern.name} has {len(params)} parameters, "
            f"pattern binds {len(pattern.args)}",
            rule="pattern-type",
        )
    subs = []
    for i, sub in enumerate(pattern.args):
        subs.append(slice_type(sub, params[i] if params is not None else None))
    return Sum(((pattern.name, tuple(subs)),))


def pattern_path(pattern: Pattern, var: str) -> Tuple[int, ...]:
    """Child indices leading from the pattern root to a bound variable."""
    if isinstance(pattern, PVar):
        if pattern.name == var:
            return ()
        raise TypeCheckError(f"pattern does not bind {var!r}")
    for i, sub in enumerate(pattern.args):
        if var in pattern_vars(sub):
            return (i,) + pattern_path(sub, var)
    raise TypeCheckError(f"pattern does not bind {var!r}")


def build_param_type(c: TypeExpr, path: Iterable[int], alpha: Optional[TypeExpr] = None) -> TypeExpr:
    """Replace the node of ``c`` addressed by ``path`` with a rigid type.

    Paths address constructor parameters: each step descends into one
    parameter of a single-case sum. The empty path replaces the whole
    type. Returns the probe type; pass ``alpha`` to control the
    replacement, otherwise a fresh rigid type is used.
    """
    if alpha is None:
        alpha = fresh_rigid()

    def replace(t: TypeExpr, steps: Tuple[int, ...]) -> TypeExpr:
        if not steps:
            return alpha
        if not (isinstance(t, Sum) and len(t.cases) == 1):
            raise TypeCheckError(
                f"path enters {format_type(t)}, which has no addressable children"
            )
        name, params = t.cases[0]
        i = steps[0]
        if not (0 <= i < len(params)):
            raise TypeCheckError(f"path index {i} out of range for {name}")
        new_params = list(params)
        new_params[i] = replace(params[i], steps[1:])
        return Sum(((name, tuple(new_params)),))

    return replace(c, tuple(path))


def replace_at_pattern_var(
    t: TypeExpr, pattern: Pattern, var: str, alpha: TypeExpr
) -> TypeExpr:
    """Replace the part of ``t`` that pattern variable ``var`` binds.

    Walks the pattern and the type together, so constructor cases are
    selected by name rather than by child index.
    """
    if isinstance(pattern, PVar):
        if pattern.name == var:
            return alpha
        return t
    assert isinstance(pattern, PCons)
    if not isinstance(t, Sum):
        raise TypeCheckError(
            f"pattern {pattern!r} cannot match a {format_type(t)}",
            rule="pattern-type",
        )
    params = t.case(pattern.name)
    if params is None or len(params) != len(pattern.args):
        raise TypeCheckError(
            f"type {format_type(t)} does not fit pattern {pattern!r}",
            rule="pattern-type",
        )
    new_params = list(params)
    for i, sub in enumerate(pattern.args):
        if var in pattern_vars(sub):
            new_params[i] = replace_at_pattern_var(params[i], sub, var, alpha)
    return Sum(((pattern.name, tuple(new_params)),))


def preorder_paths(t: TypeExpr) -> Iterator[Tuple[int, ...]]:
    """All addressable paths into a type, root first, children in order."""
    yield ()
    if isinstance(t, Sum) and len(t.cases) == 1:
        _, params = t.cases[0]
        for i, p in enumerate(params):
            for sub in preorder_paths(p):
                yield (i,) + sub


def format_type(t: TypeExpr) -> str:
    if isinstance(t, Basic):
        return t.name
    if isinstance(t, Bottom):
        return "Empty"
    if isinstance(t, Rigid):
        return t.name
    if isinstance(t, LocalBag):
        return "{" + format_type(t.elem) + "}"
    if isinstance(t, DistBag):
        return "dist {" + format_type(t.elem) + "}"
    if isinstance(t, Func):
        dom = format_type(t.dom)
        if isinstance(t.dom, Func):
            dom = f"({dom})"
        return f"{dom} -> {format_type(t.cod)}"
    if isinstance(t, Sum):
        if t == BOOL:
            return "Bool"
        if len(t.cases) == 1 and t.cases[0][0] == "Tuple":
            inner = ", ".join(format_type(p) for p in t.cases[0][1])
            return f"({inner})"
        parts = []
        for name, params in t.cases:
            if params:
                parts.append(f"{name}({', '.join(format_type(p) for p in params)})")
            else:
                parts.append(name)
        return "|".join(parts)
    raise TypeCheckError(f"unknown type node {t!r}")
