"""The primitive functions: arithmetic, comparisons, bag utilities.

Each builtin knows its arity, how to pick a signature from the types of
its arguments, and how to compute. Signature resolution serves the
typechecker; the evaluator only calls ``impl``.

``rigid_ok`` marks the builtins that are transparent to filtering: they
may be applied to values whose type has been made opaque on purpose.
Deduplication and union only move elements around, so a filter slides
past them; anything that inspects a value, compares it or counts it
does not get the flag, and an opaque type stops it in the typechecker.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Sequence, Tuple

from .errors import BuiltinError, TypeCheckError
from .types import (
    BOOL,
    BOTTOM,
    DistBag,
    FLOAT,
    INT,
    LocalBag,
    STRING,
    TypeExpr,
    contains_func,
    format_type,
    is_bag,
    same_bag,
    sum_combine,
)
from .values import Bag, Constant, Value, bag_union, bool_v, distinct, float_v, int_v, str_v

Signature = Tuple[Tuple[TypeExpr, ...], TypeExpr]
Resolver = Callable[[Sequence[TypeExpr]], Signature]


@dataclass(frozen=True)
class Builtin:
    name: str
    arity: int
    resolve: Resolver
    impl: Callable[..., Value]
    rigid_ok: bool = False


BUILTINS: Dict[str, Builtin] = {}


def _register(name, arity, resolve, impl, rigid_ok=False):
    BUILTINS[name] = Builtin(name, arity, resolve, impl, rigid_ok)


def is_builtin(name: str) -> bool:
    return name in BUILTINS


def _fixed(name: str, *sigs: Signature) -> Resolver:
    """Pick among fixed signatures by the type of the first argument."""

    def resolve(args: Sequence[TypeExpr]) -> Signature:
        if not args:
            if len(sigs) == 1:
                return sigs[0]
            raise TypeCheckError(
                f"{name} is overloaded; apply it to arguments", rule="builtin"
            )
        for doms, cod in sigs:
            try:
                if sum_combine(args[0], doms[0]) == doms[0]:
                    return doms, cod
            except TypeCheckError:
                continue
        raise TypeCheckError(
            f"{name} is not defined at {format_type(args[0])}", rule="builtin"
        )

    return resolve


# Arithmetic. Both operands must be ints or both floats.


def _num_impl(name, int_fn, float_fn):
    def impl(a: Value, b: Value) -> Value:
        if isinstance(a, Constant) and isinstance(b, Constant):
            if a.kind == "int" and b.kind == "int":
                return int_v(int_fn(a.payload, b.payload))
            if a.kind == "float" and b.kind == "float":
                return float_v(float_fn(a.payload, b.payload))
        raise BuiltinError(f"{name} expects two ints or two floats")

    return impl


def _int_div(a, b):
    if b == 0:
        raise BuiltinError("division by zero")
    return a // b


def _float_div(a, b):
    if b == 0.0:
        raise BuiltinError("division by zero")
    return a / b


def _cmp_impl(name, fn):
    def impl(a: Value, b: Value) -> Value:
        if isinstance(a, Constant) and isinstance(b, Constant) and a.kind == b.kind:
            return bool_v(fn(a.payload, b.payload))
        raise BuiltinError(f"{name} expects two values of the same scalar type")

    return impl


_NUM_SIGS = (((INT, INT), INT), ((FLOAT, FLOAT), FLOAT))
_CMP_SIGS = (((INT, INT), BOOL), ((FLOAT, FLOAT), BOOL), ((STRING, STRING), BOOL))

_register("+", 2, _fixed("+", *_NUM_SIGS), _num_impl("+", lambda a, b: a + b, lambda a, b: a + b))
_register("-", 2, _fixed("-", *_NUM_SIGS), _num_impl("-", lambda a, b: a - b, lambda a, b: a - b))
_register("*", 2, _fixed("*", *_NUM_SIGS), _num_impl("*", lambda a, b: a * b, lambda a, b: a * b))
_register("/", 2, _fixed("/", *_NUM_SIGS), _num_impl("/", _int_div, _float_div))

_register("<", 2, _fixed("<", *_CMP_SIGS), _cmp_impl("<", lambda a, b: a < b))
_register("<=", 2, _fixed("<=", *_CMP_SIGS), _cmp_impl("<=", lambda a, b: a <= b))
_register(">", 2, _fixed(">", *_CMP_SIGS), _cmp_impl(">", lambda a, b: a > b))
_register(">=", 2, _fixed(">=", *_CMP_SIGS), _cmp_impl(">=", lambda a, b: a >= b))


# Structural equality on any first-order data.


def _eq_resolve(args: Sequence[TypeExpr]) -> Signature:
    if not args:
        raise TypeCheckError("apply == to its arguments", rule="builtin")
    t: TypeExpr = BOTTOM
    for a in args:
        t = sum_combine(t, a)
    if contains_func(t):
        raise TypeCheckError("functions cannot be compared", rule="builtin")
    return (t, t), BOOL


_register("==", 2, _eq_resolve, lambda a, b: bool_v(a == b))
_register("!=", 2, _eq_resolve, lambda a, b: bool_v(a != b))


def _not_impl(a: Value) -> Value:
    from .values import FALSE, TRUE

    if a == TRUE:
        return FALSE
    if a == FALSE:
        return TRUE
    raise BuiltinError("not expects a boolean")


_register("not", 1, _fixed("not", ((BOOL,), BOOL)), _not_impl)


# Strings.


def _str2(name, fn):
    def impl(a: Value, b: Value) -> Value:
        if (
            isinstance(a, Constant)
            and isinstance(b, Constant)
            and a.kind == b.kind == "string"
        ):
            return fn(a.payload, b.payload)
        raise BuiltinError(f"{name} expects two strings")

    return impl


_register(
    "concat",
    2,
    _fixed("concat", ((STRING, STRING), STRING)),
    _str2("concat", lambda a, b: str_v(a + b)),
)
_register(
    "contains",
    2,
    _fixed("contains", ((STRING, STRING), BOOL)),
    _str2("contains", lambda s, sub: bool_v(sub in s)),
)


# Bags.


def _union_resolve(args: Sequence[TypeExpr]) -> Signature:
    if not args:
        raise TypeCheckError("apply ++ to its arguments", rule="builtin")
    for a in args:
        if not is_bag(a):
            raise TypeCheckError(
                f"++ expects bags, got {format_type(a)}", rule="builtin"
            )
    elem: TypeExpr = BOTTOM
    for a in args:
        elem = sum_combine(elem, a.elem)
    doms = tuple(same_bag(a, elem) for a in args)
    if len(doms) == 1:
        doms = (doms[0], doms[0])
    cod = DistBag(elem) if any(isinstance(a, DistBag) for a in args) else LocalBag(elem)
    return doms, cod


def _union_impl(a: Value, b: Value) -> Value:
    if isinstance(a, Bag) and isinstance(b, Bag):
        return bag_union(a, b)
    raise BuiltinError("++ expects two bags")


_register("++", 2, _union_resolve, _union_impl, rigid_ok=True)


def _distinct_resolve(args: Sequence[TypeExpr]) -> Signature:
    if not args or not is_bag(args[0]):
        raise TypeCheckError("distinct expects a bag", rule="builtin")
    return (args[0],), args[0]


def _distinct_impl(a: Value) -> Value:
    if isinstance(a, Bag):
        return distinct(a)
    raise BuiltinError("distinct expects a bag")


_register("distinct", 1, _distinct_resolve, _distinct_impl, rigid_ok=True)


def _member_resolve(args: Sequence[TypeExpr]) -> Signature:
    if not args:
        raise TypeCheckError("apply member to its arguments", rule="builtin")
    elem = args[0]
    if len(args) == 2:
        if not isinstance(args[1], LocalBag):
            raise TypeCheckError(
                f"member expects a local bag, got {format_type(args[1])}",
                rule="builtin",
            )
        elem = sum_combine(elem, args[1].elem)
    if contains_func(elem):
        raise TypeCheckError("functions cannot be compared", rule="builtin")
    return (elem, LocalBag(elem)), BOOL


def _member_impl(x: Value, b: Value) -> Value:
    if isinstance(b, Bag):
        return bool_v(x in b)
    raise BuiltinError("member expects a bag")


_register("member", 2, _member_resolve, _member_impl)


def _size_resolve(args: Sequence[TypeExpr]) -> Signature:
    if not args or not is_bag(args[0]):
        raise TypeCheckError("size expects a bag", rule="builtin")
    return (args[0],), INT


def _size_impl(a: Value) -> Value:
    if isinstance(a, Bag):
        return int_v(a.size)
    raise BuiltinError("size expects a bag")


_register("size", 1, _size_resolve, _size_impl)
