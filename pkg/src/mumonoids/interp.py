"""The reference evaluator.

Everything here is deliberately literal: bags are in-memory multisets,
folds run in canonical element order, and the fixpoint runs exactly its
defining loop. Aggregate the seed, then repeatedly apply the body to
the previous round's contribution, aggregate it, and merge it into the
accumulator, stopping when the accumulator stops changing. No
incremental evaluation happens here; faster execution strategies are
checked against this evaluator, not the other way around.

Two limits guard against runaway programs. A loop that has not
stabilized after ``max_fixpoint_iterations`` rounds raises
IterationLimitError, and a single operator result larger than
``max_bag_cardinality`` elements raises CardinalityLimitError. The
iteration cap defaults to the MUMONOIDS_MAX_ITER environment variable,
read when the loop runs, or 1000 when unset.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Tuple

from .aggregates import fold_by_key
from .builtins import BUILTINS
from .errors import (
    CardinalityLimitError,
    DataError,
    IterationLimitError,
    MalformedTermError,
    MatchFailureError,
)
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
)
from .values import (
    NO_MATCH,
    Bag,
    Constructed,
    PVar,
    Value,
    bag_union,
    format_value,
    pair_parts,
    pattern_match,
    sorted_elements,
    tuple_v,
)

DEFAULT_MAX_ITER = 1000
ITER_ENV_VAR = "MUMONOIDS_MAX_ITER"


@dataclass
class EvalLimits:
    """Caps on loop rounds and intermediate bag sizes.

    ``max_fixpoint_iterations`` of None defers to the MUMONOIDS_MAX_ITER
    environment variable at the moment a loop runs.
    """

    max_fixpoint_iterations: Optional[int] = None
    max_bag_cardinality: int = 10_000_000

    def iteration_cap(self) -> int:
        if self.max_fixpoint_iterations is not None:
            return self.max_fixpoint_iterations
        raw = os.environ.get(ITER_ENV_VAR)
        if raw is None:
            return DEFAULT_MAX_ITER
        try:
            cap = int(raw)
        except ValueError:
            raise DataError(f"{ITER_ENV_VAR} must be an integer, got {raw!r}")
        if cap < 1:
            raise DataError(f"{ITER_ENV_VAR} must be positive, got {cap}")
        return cap


@dataclass
class FixpointTrace:
    """What one fixpoint execution did: one size per round, after the
    round's aggregation, plus the final accumulator size."""

    node: Fixpoint
    iterations: int = 0
    step_sizes: List[int] = field(default_factory=list)
    result_size: int = 0


class Closure:
    """A function value: pattern cases plus the environment they closed
    over."""

    __slots__ = ("cases", "env")

    def __init__(self, cases, env):
        self.cases = cases
        self.env = env

    def __repr__(self):
        return f"<function of {len(self.cases)} case(s)>"


class BuiltinRef:
    """A primitive, possibly partially applied."""

    __slots__ = ("name", "args")

    def __init__(self, name: str, args: Tuple = ()):
        self.name = name
        self.args = args

    def __repr__(self):
        return f"<builtin {self.name}>"


Env = Dict[str, object]
FixpointHook = Callable[[Fixpoint, Env, "Runner"], Optional[Bag]]


class Runner:
    def __init__(
        self,
        limits: Optional[EvalLimits] = None,
        trace: Optional[List[FixpointTrace]] = None,
        fixpoint_hook: Optional[FixpointHook] = None,
    ):
        self.limits = limits or EvalLimits()
        self.trace = trace
        self.fixpoint_hook = fixpoint_hook

    def _guard(self, size: int) -> None:
        if size > self.limits.max_bag_cardinality:
            raise CardinalityLimitError(size, self.limits.max_bag_cardinality)

    def eval(self, e: Expr, env: Env) -> object:
        if isinstance(e, Lit):
            return e.value
        if isinstance(e, Var):
            try:
                return env[e.name]
            except KeyError:
                raise MalformedTermError(f"unbound variable {e.name!r}")
        if isinstance(e, Prim):
            if e.name not in BUILTINS:
                raise MalformedTermError(f"unknown primitive {e.name!r}")
            return BuiltinRef(e.name)
        if isinstance(e, Lambda):
            return Closure(e.cases, env)
        if isinstance(e, Apply):
            return self.apply(self.eval(e.func, env), self.eval(e.arg, env))
        if isinstance(e, Let):
            bound = self.eval(e.bound, env)
            return self.eval(e.body, {**env, e.name: bound})
        if isinstance(e, Singleton):
            item = self.eval(e.item, env)
            if not isinstance(item, Value):
                raise MalformedTermError("bags hold data values, not functions")
            return Bag((item,))
        if isinstance(e, Construct):
            args = tuple(self.eval(a, env) for a in e.args)
            return Constructed(e.name, args)
        if isinstance(e, Flatmap):
            return self._flatmap(e, env)
        if isinstance(e, Reduce):
            return self._reduce(e, env)
        if isinstance(e, ReduceByKey):
            op = self.eval(e.op, env)
            src = self._eval_bag(e.source, env, "reduceByKey")
            return fold_by_key(src, lambda a, b: self._data(self.apply2(op, a, b)))
        if isinstance(e, Join):
            return self._join(e, env)
        if isinstance(e, Cogroup):
            return self._cogroup(e, env)
        if isinstance(e, Fixpoint):
            return self._fixpoint(e, env)
        if isinstance(e, Dist):
            return self._eval_bag(e.source, env, "dist")
        raise MalformedTermError(f"unknown expression node {type(e).__name__}")

    def apply(self, f: object, a: object) -> object:
        if isinstance(f, Closure):
            for pat, body in f.cases:
                if isinstance(a, Value):
                    bound = pattern_match(a, pat)
                elif isinstance(pat, PVar):
                    # Function arguments bind through a bare variable.
                    bound = {pat.name: a}
                else:
                    continue
                if bound is NO_MATCH:
                    continue
                return self.eval(body, {**f.env, **bound})
            shown = format_value(a) if isinstance(a, Value) else repr(a)
            raise MatchFailureError(f"no case matches {shown}")
        if isinstance(f, BuiltinRef):
            builtin = BUILTINS[f.name]
            args = f.args + (a,)
            if len(args) == builtin.arity:
                return builtin.impl(*args)
            return BuiltinRef(f.name, args)
        raise MalformedTermError(f"cannot apply a non-function: {f!r}")

    def apply2(self, f: object, a: object, b: object) -> object:
        return self.apply(self.apply(f, a), b)

    def _data(self, v: object) -> Value:
        if isinstance(v, Value):
            return v
        raise MalformedTermError("expected a data value, got a function")

    def _eval_bag(self, e: Expr, env: Env, what: str) -> Bag:
        v = self.eval(e, env)
        if not isinstance(v, Bag):
            shown = format_value(v) if isinstance(v, Value) else repr(v)
            raise MalformedTermError(f"{what} needs a bag, got {shown}")
        return v

    def _flatmap(self, e: Flatmap, env: Env) -> Bag:
        f = self.eval(e.func, env)
        src = self._eval_bag(e.source, env, "flatmap")
        counts: Dict[Value, int] = {}
        total = 0
        for v, n in src.items():
            out = self.apply(f, v)
            if not isinstance(out, Bag):
                raise MalformedTermError("a flatmap function must return a bag")
            for w, m in out.items():
                counts[w] = counts.get(w, 0) + n * m
                total += n * m
            self._guard(total)
        return Bag._from_counts(counts)

    def _reduce(self, e: Reduce, env: Env) -> Value:
        op = self.eval(e.op, env)
        acc = self.eval(e.zero, env)
        src = self._eval_bag(e.source, env, "reduce")
        for v in sorted_elements(src):
            acc = self.apply2(op, acc, v)
        return self._data(acc)

    def _join(self, e: Join, env: Env) -> Bag:
        left = self._eval_bag(e.left, env, "join")
        right = self._eval_bag(e.right, env, "join")
        index: Dict[Value, List[Tuple[Value, int]]] = {}
        for v, n in right.items():
            k, w = pair_parts(v)
            index.setdefault(k, []).append((w, n))
        counts: Dict[Value, int] = {}
        total = 0
        for v, n in left.items():
            k, x = pair_parts(v)
            for w, m in index.get(k, ()):
                out = tuple_v(k, tuple_v(x, w))
                counts[out] = counts.get(out, 0) + n * m
                total += n * m
            self._guard(total)
        return Bag._from_counts(counts)

    def _cogroup(self, e: Cogroup, env: Env) -> Bag:
        left = self._eval_bag(e.left, env, "cogroup")
        right = self._eval_bag(e.right, env, "cogroup")
        groups: Dict[Value, Tuple[Dict[Value, int], Dict[Value, int]]] = {}
        for side, bag in ((0, left), (1, right)):
            for v, n in bag.items():
                k, w = pair_parts(v)
                if k not in groups:
                    groups[k] = ({}, {})
                half = groups[k][side]
                half[w] = half.get(w, 0) + n
        out = [
            tuple_v(k, tuple_v(Bag._from_counts(gl), Bag._from_counts(gr)))
            for k, (gl, gr) in groups.items()
        ]
        return Bag(out)

    def _fixpoint(self, e: Fixpoint, env: Env) -> Bag:
        if self.fixpoint_hook is not None:
            short = self.fixpoint_hook(e, env, self)
            if short is not None:
                return short
        seed = self._eval_bag(e.seed, env, "fixpoint")
        body = self.eval(e.body, env)
        record = FixpointTrace(node=e)
        cap = self.limits.iteration_cap()

        r = e.delta.apply(seed)
        s = r
        iterations = 0
        while True:
            if iterations >= cap:
                raise IterationLimitError(cap)
            iterations += 1
            stepped = self.apply(body, r)
            if not isinstance(stepped, Bag):
                raise MalformedTermError("a loop body must return a bag")
            self._guard(stepped.size)
            r = e.delta.apply(stepped)
            record.step_sizes.append(r.size)
            new_s = e.delta.combine(s, r)
            self._guard(new_s.size)
            if new_s == s:
                break
            s = new_s
        record.iterations = iterations
        record.result_size = s.size
        if self.trace is not None:
            self.trace.append(record)
        return s


def evaluate(
    e: Expr,
    env: Optional[Mapping[str, object]] = None,
    limits: Optional[EvalLimits] = None,
    trace: Optional[List[FixpointTrace]] = None,
    fixpoint_hook: Optional[FixpointHook] = None,
) -> object:
    runner = Runner(limits=limits, trace=trace, fixpoint_hook=fixpoint_hook)
    return runner.eval(e, dict(env or {}))


def run_program(
    program: Program,
    inputs: Mapping[str, Value],
    limits: Optional[EvalLimits] = None,
    trace: Optional[List[FixpointTrace]] = None,
    fixpoint_hook: Optional[FixpointHook] = None,
) -> Value:
    """Bind data to the program's declared inputs and evaluate its body.

    Every declared input must be supplied with a value of (a subtype
    of) its declared type, and nothing else may be supplied.
    """
    from .typecheck import type_of_value
    from .types import DistBag, LocalBag, format_type, subtype

    declared = dict(program.inputs)
    for name in inputs:
        if name not in declared:
            raise DataError(f"undeclared input {name!r}")
    env: Env = {}
    for name, want in declared.items():
        if name not in inputs:
            raise DataError(f"missing input {name!r}")
        v = inputs[name]
        got = type_of_value(v)
        # Loaded data is a plain bag even when the program declares the
        # input distributed; only the contents are checked.
        want_shape = LocalBag(want.elem) if isinstance(want, DistBag) else want
        if not subtype(got, want_shape):
            raise DataError(
                f"input {name!r} has type {format_type(got)}, "
                f"declared {format_type(want)}"
            )
        env[name] = v
    result = evaluate(
        program.body, env, limits=limits, trace=trace, fixpoint_hook=fixpoint_hook
    )
    if isinstance(result, Value):
        return result
    raise MalformedTermError("the program result is a function, not data")
