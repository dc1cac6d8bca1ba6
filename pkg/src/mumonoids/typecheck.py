"""Bidirectional typechecking for collection programs.

Function parameters never carry annotations. Instead, every place a
function can appear also supplies the type its argument will have: an
application supplies the type of its argument, flatmap supplies the
element type of its source, folds supply the accumulator type, and a
fixpoint supplies the type of the loop bag. The pushed type is sliced
through each pattern case, so a case only sees the constructors it can
actually match. A function with nothing pushed into it cannot be typed
and is reported as an error.

Bag locality follows the operators: flatmap preserves the locality of
its source (and its function must return a local bag), join and cogroup
of two equally-located bags stay put while a mixed pair becomes
distributed, and folds bring results back to one machine.

The module also answers a question the optimizer asks: does a loop body
move some component of the loop's elements around without ever looking
at it? The component's type is replaced by an opaque placeholder and
the body is rechecked; every primitive that would inspect the value
refuses the placeholder, so success means the body is oblivious to it.
"""

from __future__ import annotations

from typing import Optional, Sequence, Tuple

from .builtins import BUILTINS
from .errors import TypeCheckError
from .expr import (
    Apply,
    Cogroup,
    Construct,
    Dist,
    Expr,
    Fixpoint,
    Flatmap,
    Join,
    Lambda,
    Let,
    Lit,
    Prim,
    Program,
    Reduce,
    ReduceByKey,
    Singleton,
    Var,
    inline_lets,
)
from .types import (
    BOTTOM,
    Bottom,
    DistBag,
    FLOAT,
    Func,
    INT,
    LocalBag,
    STRING,
    Sum,
    TypeEnv,
    TypeExpr,
    contains_dist,
    contains_func,
    contains_rigid,
    format_type,
    fresh_rigid,
    is_bag,
    match_type,
    pair_elem,
    build_param_type,
    replace_at_pattern_var,
    same_bag,
    slice_type,
    subtype,
    sum_combine,
    tuple_t,
)
from .values import Bag, Constant, Constructed, Pattern, Value

_KIND_TYPES = {"int": INT, "float": FLOAT, "string": STRING}


def type_of_value(v: Value) -> TypeExpr:
    if isinstance(v, Constant):
        return _KIND_TYPES[v.kind]
    if isinstance(v, Constructed):
        return Sum(((v.name, tuple(type_of_value(a) for a in v.args)),))
    if isinstance(v, Bag):
        elem: TypeExpr = BOTTOM
        for x in v.support():
            elem = sum_combine(elem, type_of_value(x))
        return LocalBag(elem)
    raise TypeCheckError(f"not a data value: {type(v).__name__}")


def _pair_or_empty(t: TypeExpr) -> Optional[Tuple[TypeExpr, TypeExpr]]:
    if isinstance(t, Bottom):
        return BOTTOM, BOTTOM
    return pair_elem(t)


def _unwind(e: Expr):
    args = []
    while isinstance(e, Apply):
        args.append(e.arg)
        e = e.func
    return e, list(reversed(args))


def _data_type(t: TypeExpr, what: str) -> TypeExpr:
    if contains_func(t):
        raise TypeCheckError(f"{what} cannot contain functions", rule="data")
    return t


def typecheck(e: Expr, env: TypeEnv) -> TypeExpr:
    if isinstance(e, Lit):
        return type_of_value(e.value)
    if isinstance(e, Var):
        return env.lookup(e.name)
    if isinstance(e, Prim):
        builtin = BUILTINS.get(e.name)
        if builtin is None:
            raise TypeCheckError(f"unknown primitive {e.name!r}", rule="builtin")
        doms, cod = builtin.resolve(())
        t: TypeExpr = cod
        for d in reversed(doms):
            t = Func(d, t)
        return t
    if isinstance(e, Singleton):
        t = _data_type(typecheck(e.item, env), "bag elements")
        if contains_dist(t):
            raise TypeCheckError(
                "a distributed bag cannot be an element of a bag", rule="bag-nesting"
            )
        return LocalBag(t)
    if isinstance(e, Construct):
        args = tuple(
            _data_type(typecheck(a, env), "constructor arguments") for a in e.args
        )
        for t in args:
            if contains_dist(t):
                raise TypeCheckError(
                    "a distributed bag cannot sit inside a value", rule="bag-nesting"
                )
        return Sum(((e.name, args),))
    if isinstance(e, Lambda):
        raise TypeCheckError(
            "cannot infer parameter types for a function that is never applied",
            rule="lambda",
        )
    if isinstance(e, Apply):
        head, args = _unwind(e)
        arg_types = [typecheck(a, env) for a in args]
        if isinstance(head, Prim):
            return _check_builtin(head.name, arg_types)
        if isinstance(head, Lambda):
            return check_function(env, head, arg_types)
        t = typecheck(head, env)
        for got in arg_types:
            if not isinstance(t, Func):
                raise TypeCheckError(
                    f"applying a non-function of type {format_type(t)}", rule="apply"
                )
            if not subtype(got, t.dom):
                raise TypeCheckError(
                    f"argument has type {format_type(got)}, "
                    f"expected {format_type(t.dom)}",
                    rule="apply",
                )
            t = t.cod
        return t
    if isinstance(e, Let):
        bound = typecheck(e.bound, env)
        return typecheck(e.body, env.extend({e.name: bound}))
    if isinstance(e, Flatmap):
        src = typecheck(e.source, env)
        if not is_bag(src):
            raise TypeCheckError(
                f"flatmap needs a bag, got {format_type(src)}", rule="flatmap"
            )
        out = check_function(env, e.func, (src.elem,))
        if not isinstance(out, LocalBag):
            raise TypeCheckError(
                f"a flatmap function must return a local bag, got {format_type(out)}",
                rule="flatmap",
            )
        return same_bag(src, out.elem)
    if isinstance(e, Reduce):
        src = typecheck(e.source, env)
        if not is_bag(src):
            raise TypeCheckError(
                f"reduce needs a bag, got {format_type(src)}", rule="reduce"
            )
        acc = _data_type(sum_combine(typecheck(e.zero, env), src.elem), "reduce")
        out = check_function(env, e.op, (acc, acc))
        if not subtype(out, acc):
            raise TypeCheckError(
                f"reduce operator returns {format_type(out)}, "
                f"expected {format_type(acc)}",
                rule="reduce",
            )
        return acc
    if isinstance(e, ReduceByKey):
        src = typecheck(e.source, env)
        if not is_bag(src):
            raise TypeCheckError(
                f"reduceByKey needs a bag, got {format_type(src)}", rule="reduce-by-key"
            )
        kv = _pair_or_empty(src.elem)
        if kv is None:
            raise TypeCheckError(
                f"reduceByKey needs key-value pairs, got {format_type(src.elem)}",
                rule="reduce-by-key",
            )
        key, val = kv
        if contains_rigid(key):
            raise TypeCheckError(
                "cannot group on an opaque key", rule="rigid"
            )
        out = check_function(env, e.op, (val, val))
        if not subtype(out, val):
            raise TypeCheckError(
                f"reduceByKey operator returns {format_type(out)}, "
                f"expected {format_type(val)}",
                rule="reduce-by-key",
            )
        return same_bag(src, tuple_t(key, val))
    if isinstance(e, (Join, Cogroup)):
        return _check_join(e, env)
    if isinstance(e, Fixpoint):
        return _check_fixpoint(e, env)
    if isinstance(e, Dist):
        src = typecheck(e.source, env)
        if not isinstance(src, LocalBag):
            raise TypeCheckError(
                f"dist expects a local bag, got {format_type(src)}", rule="dist"
            )
        return DistBag(src.elem)
    raise TypeCheckError(f"unknown expression node {type(e).__name__}")


def _check_builtin(name: str, arg_types: Sequence[TypeExpr]) -> TypeExpr:
    builtin = BUILTINS.get(name)
    if builtin is None:
        raise TypeCheckError(f"unknown primitive {name!r}", rule="builtin")
    if len(arg_types) > builtin.arity:
        raise TypeCheckError(
            f"{name} takes {builtin.arity} arguments, got {len(arg_types)}",
            rule="builtin",
        )
    if not builtin.rigid_ok and any(contains_rigid(t) for t in arg_types):
        raise TypeCheckError(
            f"{name} would inspect an opaque value", rule="rigid"
        )
    doms, cod = builtin.resolve(arg_types)
    for got, want in zip(arg_types, doms):
        if not subtype(got, want):
            raise TypeCheckError(
                f"{name} expects {format_type(want)}, got {format_type(got)}",
                rule="builtin",
            )
    t: TypeExpr = cod
    for d in reversed(doms[len(arg_types) :]):
        t = Func(d, t)
    return t


def check_function(env: TypeEnv, f: Expr, doms: Sequence[TypeExpr]) -> TypeExpr:
    """The type of applying ``f`` to arguments of the given types.

    Pattern cases slice the pushed type, and together the cases must
    cover it, so no well-typed call can fall off the end of a function.
    """
    if not doms:
        return typecheck(f, env)
    if isinstance(f, Lambda):
        pushed = doms[0]
        covered: TypeExpr = BOTTOM
        result: TypeExpr = BOTTOM
        for pat, body in f.cases:
            sl = slice_type(pat, pushed)
            bindings = match_type(pat, sl)
            out = check_function(env.extend(bindings), body, doms[1:])
            result = sum_combine(result, out)
            covered = sum_combine(covered, sl)
        if not subtype(pushed, covered):
            raise TypeCheckError(
                f"cases cover {format_type(covered)} "
                f"but the argument has type {format_type(pushed)}",
                rule="coverage",
            )
        return result
    t = typecheck(f, env)
    for d in doms:
        if not isinstance(t, Func):
            raise TypeCheckError(
                f"expected a function, got {format_type(t)}", rule="apply"
            )
        if not subtype(d, t.dom):
            raise TypeCheckError(
                f"argument has type {format_type(d)}, expected {format_type(t.dom)}",
                rule="apply",
            )
        t = t.cod
    return t


def _check_join(e: Expr, env: TypeEnv) -> TypeExpr:
    word = "join" if isinstance(e, Join) else "cogroup"
    tl = typecheck(e.left, env)
    tr = typecheck(e.right, env)
    for t in (tl, tr):
        if not is_bag(t):
            raise TypeCheckError(
                f"{word} needs bags, got {format_type(t)}", rule=word
            )
    lkv = _pair_or_empty(tl.elem)
    rkv = _pair_or_empty(tr.elem)
    if lkv is None or rkv is None:
        raise TypeCheckError(
            f"{word} needs bags of key-value pairs, got {format_type(tl.elem)} "
            f"and {format_type(tr.elem)}",
            rule=word,
        )
    key = sum_combine(lkv[0], rkv[0])
    if contains_rigid(key):
        raise TypeCheckError(f"cannot {word} on an opaque key", rule="rigid")
    if contains_func(key):
        raise TypeCheckError(f"cannot {word} on a function key", rule=word)
    if isinstance(e, Join):
        elem = tuple_t(key, tuple_t(lkv[1], rkv[1]))
    else:
        elem = tuple_t(key, tuple_t(LocalBag(lkv[1]), LocalBag(rkv[1])))
    if type(tl) is type(tr):
        return same_bag(tl, elem)
    return DistBag(elem)


def _check_fixpoint(e: Fixpoint, env: TypeEnv) -> TypeExpr:
    t = typecheck(e.seed, env)
    if not is_bag(t):
        raise TypeCheckError(
            f"fixpoint needs a bag seed, got {format_type(t)}", rule="fixpoint"
        )
    for _ in range(50):
        r = check_function(env, e.body, (t,))
        if not is_bag(r):
            raise TypeCheckError(
                f"a loop body must return a bag, got {format_type(r)}",
                rule="fixpoint",
            )
        elem = sum_combine(t.elem, r.elem)
        new_t: TypeExpr = (
            DistBag(elem)
            if isinstance(t, DistBag) or isinstance(r, DistBag)
            else LocalBag(elem)
        )
        if new_t == t:
            break
        t = new_t
    else:
        raise TypeCheckError(
            "the loop element type keeps growing and never settles", rule="fixpoint"
        )
    if e.delta.kind == "reduce_by_key":
        kv = _pair_or_empty(t.elem)
        if kv is None:
            raise TypeCheckError(
                "a keyed loop aggregation needs key-value pair elements",
                rule="fixpoint",
            )
        key, val = kv
        if contains_rigid(key):
            raise TypeCheckError("cannot group on an opaque key", rule="rigid")
        out = check_function(env, e.delta.op, (val, val))
        if not subtype(out, val):
            raise TypeCheckError(
                f"loop aggregation operator returns {format_type(out)}, "
                f"expected {format_type(val)}",
                rule="fixpoint",
            )
    return t


def typecheck_program(program: Program) -> TypeExpr:
    env = TypeEnv(dict(program.inputs))
    return typecheck(inline_lets(program.body), env)


def body_preserves_positions(
    env: TypeEnv,
    body: Expr,
    loop_t: TypeExpr,
    pattern: Pattern,
    var_names: Sequence[str],
) -> bool:
    """Whether a loop body is oblivious to the given element components.

    Each named component of the loop's element type, located by where
    the pattern binds it, is replaced with an opaque placeholder, and
    the body is rechecked from placeholder elements to placeholder
    elements. Success means the body can only carry those components
    along unchanged, so dropping elements by a test on them commutes
    with the body.
    """
    if not is_bag(loop_t):
        return False
    probe = loop_t.elem
    try:
        for name in var_names:
            probe = replace_at_pattern_var(probe, pattern, name, fresh_rigid())
        probe_bag = same_bag(loop_t, probe)
        out = check_function(env, body, (probe_bag,))
    except TypeCheckError:
        return False
    return subtype(out, probe_bag)


def body_preserves_path(
    env: TypeEnv, body: Expr, loop_t: TypeExpr, path: Sequence[int]
) -> bool:
    """Like body_preserves_positions, but the component is named by a
    path into the element type rather than by a pattern variable."""
    if not is_bag(loop_t):
        return False
    try:
        probe = build_param_type(loop_t.elem, tuple(path), fresh_rigid())
        probe_bag = same_bag(loop_t, probe)
        out = check_function(env, body, (probe_bag,))
    except TypeCheckError:
        return False
    return subtype(out, probe_bag)
