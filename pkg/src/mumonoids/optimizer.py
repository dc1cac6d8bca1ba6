"""Source-to-source rewrites that shrink what a fixpoint loop computes.

Three rewrite rules work on the tree, in this order:

* filter-pushdown moves a filter written over a loop's result into the
  loop's seed, so the loop never derives elements the filter would drop;
* join-pushdown restricts a loop joined against another bag to the seed
  elements whose key actually occurs in that bag (a semi-join);
* aggregation-pushdown moves a trailing distinct or keyed reduction
  inside the loop, so every iteration works on the compressed bag.

A fourth pass, plan-selection, does not change the tree. It decides how
each loop should execute on partitioned data and emits directives the
simulator consumes.

Every rewrite is guarded. The structural guard asks whether the loop
body is built only from flatmap and join around the loop variable, which
makes it a bag homomorphism. The positional guard ("condition (C)") asks
whether the body carries some element component through unchanged; it is
answered by retyping the body with that component's type made opaque.
The aggregation guards are randomized probes that can veto a claimed
compatibility but never approve one on their own; the programmer's
annotation stays authoritative. Each rule records, per candidate site,
either what it did or which guard failed, in a printable trace.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .aggregates import DISTINCT, Aggregator, reduce_by_key_agg
from .errors import (
    InternalSoundnessError,
    MumonoidsError,
    ProbeError,
    TypeCheckError,
)
from .expr import (
    Apply,
    Cogroup,
    Construct,
    EMPTY,
    Expr,
    FALSE_E,
    Fixpoint,
    Flatmap,
    Join,
    Lambda,
    Lit,
    Prim,
    Program,
    ReduceByKey,
    Singleton,
    Var,
    as_if,
    children,
    format_expr,
    free_vars,
    fresh_name,
    inline_lets,
    make_if,
    map_children,
    pattern_to_expr,
    prim_call,
)
from .interp import evaluate
from .sampling import sample_bag, sample_env
from .types import TypeEnv, TypeExpr, is_bag, pair_elem, preorder_paths
from .typecheck import (
    body_preserves_path,
    body_preserves_positions,
    typecheck,
    typecheck_program,
)
from .values import Bag, PCons, PVar, Pattern, bag_union, distinct, int_v, pattern_vars, ptuple


@dataclass(frozen=True)
class RewriteStep:
    """One trace line: what a rule did (or refused to do) at one site."""

    rule: str
    applied: bool
    reason: str
    before: str = ""
    after: str = ""


@dataclass(frozen=True)
class PlanDirective:
    """How one fixpoint should run on partitioned data."""

    fixpoint: Fixpoint
    plan: str  # "p1" | "p2" | "p2-repartitioned"
    key_path: Optional[Tuple[int, ...]]
    reason: str


@dataclass
class OptimizeResult:
    program: Program
    trace: List[RewriteStep]
    directives: List[PlanDirective]

    @property
    def expr(self) -> Expr:
        return self.program.body


def format_trace(steps: Sequence[RewriteStep]) -> str:
    lines = []
    for s in steps:
        tag = "applied" if s.applied else "skipped"
        lines.append(f"[{tag}] {s.rule}: {s.reason}")
        if s.before:
            lines.append(f"    before: {s.before}")
        if s.after:
            lines.append(f"    after:  {s.after}")
    return "\n".join(lines)


def _frag(e: Expr, limit: int = 72) -> str:
    s = " ".join(format_expr(e).split())
    return s if len(s) <= limit else s[: limit - 3] + "..."


# --- structural homomorphism check -----------------------------------

def is_syntactic_homomorphism(f: Expr) -> bool:
    """Whether a one-argument function is a bag homomorphism by shape.

    The recognized bodies are the grammar H ::= X | flatmap(g, H) with X
    not free in g | join(H, A) or join(A, H) with X not free in A, for X
    the function's argument. Anything in this grammar distributes over
    bag union, so it can run per partition. The check is sound but not
    complete: bodies outside the grammar may still be homomorphisms.
    """
    if not isinstance(f, Lambda) or len(f.cases) != 1:
        return False
    pat, body = f.cases[0]
    if not isinstance(pat, PVar):
        return False
    return _in_h(body, pat.name)


def _in_h(e: Expr, x: str) -> bool:
    if isinstance(e, Var):
        return e.name == x
    if isinstance(e, Flatmap):
        return x not in free_vars(e.func) and _in_h(e.source, x)
    if isinstance(e, Join):
        if _in_h(e.left, x) and x not in free_vars(e.right):
            return True
        if _in_h(e.right, x) and x not in free_vars(e.left):
            return True
    return False


# --- filter shapes ----------------------------------------------------

@dataclass(frozen=True)
class FilterShape:
    """A flatmap that only ever keeps or drops its elements whole."""

    pattern: Pattern
    cond: Expr
    source: Expr


def _singleton_expr(e: Expr) -> Expr:
    if isinstance(e, Lit):
        return Lit(Bag((e.value,)))
    return Singleton(e)


def as_filter(e: Expr) -> Optional[FilterShape]:
    if not isinstance(e, Flatmap):
        return None
    f = e.func
    if not isinstance(f, Lambda) or len(f.cases) != 1:
        return None
    pat, body = f.cases[0]
    shape = as_if(body)
    if shape is None:
        return None
    cond, then_branch, else_branch = shape
    if else_branch != EMPTY:
        return None
    if then_branch != _singleton_expr(pattern_to_expr(pat)):
        return None
    return FilterShape(pat, cond, e.source)


def make_filter(pattern: Pattern, cond: Expr, source: Expr) -> Flatmap:
    keep = _singleton_expr(pattern_to_expr(pattern))
    return Flatmap(Lambda(((pattern, make_if(cond, keep, EMPTY)),)), source)


def split_conjuncts(cond: Expr) -> List[Expr]:
    shape = as_if(cond)
    if shape is not None:
        c, t, f = shape
        if f == FALSE_E:  # the shape `and` desugars to
            return split_conjuncts(c) + split_conjuncts(t)
    return [cond]


def join_conjuncts(conjuncts: Sequence[Expr]) -> Expr:
    out = conjuncts[0]
    for c in conjuncts[1:]:
        out = make_if(out, c, FALSE_E)
    return out


# --- the rewrite rules ------------------------------------------------

@dataclass
class _Outcome:
    applied: bool
    reason: str
    replacement: Optional[Expr] = None


def _typed_or_veto(env: TypeEnv, e: Expr) -> Optional[str]:
    try:
        typecheck(e, env)
    except TypeCheckError as err:
        return str(err)
    return None


class _FilterPushdown:
    name = "filter-pushdown"
    no_site_reason = "no filter over a fixpoint"

    def attempt(self, env: TypeEnv, e: Expr) -> Optional[_Outcome]:
        flt = as_filter(e)
        if flt is None or not isinstance(flt.source, Fixpoint):
            return None
        fix = flt.source
        if not fix.delta.is_distinct:
            return _Outcome(False, "the loop aggregation is not distinct")
        if not is_syntactic_homomorphism(fix.body):
            return _Outcome(False, "the loop body is not a recognized homomorphism")
        loop_t = typecheck(fix, env)
        bound = set(pattern_vars(flt.pattern))
        pushed: List[Expr] = []
        kept: List[Expr] = []
        failing: set = set()
        for c in split_conjuncts(flt.cond):
            used = sorted(free_vars(c) & bound)
            if body_preserves_positions(env, fix.body, loop_t, flt.pattern, used):
                pushed.append(c)
            else:
                kept.append(c)
                failing.update(used)
        if not pushed:
            return _Outcome(
                False, f"condition (C) fails for {', '.join(sorted(failing))}"
            )
        new_fix = Fixpoint(
            make_filter(flt.pattern, join_conjuncts(pushed), fix.seed),
            fix.body,
            fix.delta,
        )
        replacement: Expr = new_fix
        if kept:
            replacement = make_filter(flt.pattern, join_conjuncts(kept), new_fix)
        problem = _typed_or_veto(env, replacement)
        if problem is not None:
            return _Outcome(False, f"the pushed filter would not typecheck ({problem})")
        used_all = sorted(
            set().union(*(free_vars(c) for c in pushed)) & bound
        )
        if not kept:
            if used_all:
                reason = (
                    f"condition (C) holds for {', '.join(used_all)}; "
                    "filter pushed into the seed"
                )
            else:
                reason = (
                    "the condition ignores the loop elements; "
                    "filter pushed into the seed"
                )
        else:
            reason = (
                f"split the condition: pushed the part on {', '.join(used_all)}, "
                f"kept the part where condition (C) fails "
                f"for {', '.join(sorted(failing))}"
            )
        return _Outcome(True, reason, replacement)


def _semijoin_seed(seed: Expr, other: Expr) -> Expr:
    """Restrict ``seed`` to elements whose key has a match in ``other``.

    Built as one cogroup pass: group both bags by key, and for each key
    with a nonempty right group, re-emit the left group's pairs.
    """
    used = set(free_vars(seed) | free_vars(other))
    k = fresh_name("k", used)
    used.add(k)
    vs = fresh_name("vs", used)
    used.add(vs)
    ws = fresh_name("ws", used)
    used.add(ws)
    v = fresh_name("v", used)
    return _semijoin_with_names(seed, other, k, vs, ws, v)


def _semijoin_with_names(
    seed: Expr, other: Expr, k: str, vs: str, ws: str, v: str
) -> Expr:
    reemit = Flatmap(
        Lambda(((PVar(v), Singleton(Construct("Tuple", (Var(k), Var(v))))),)),
        Var(vs),
    )
    guard = prim_call(">", prim_call("size", Var(ws)), Lit(int_v(0)))
    case_pattern = ptuple(PVar(k), ptuple(PVar(vs), PVar(ws)))
    func = Lambda(((case_pattern, make_if(guard, reemit, EMPTY)),))
    return Flatmap(func, Cogroup(seed, other))


def _is_semijoin_of(seed: Expr, other: Expr) -> bool:
    """Whether ``seed`` is already the semi-join of something by ``other``."""
    if not (isinstance(seed, Flatmap) and isinstance(seed.source, Cogroup)):
        return False
    if seed.source.right != other:
        return False
    f = seed.func
    if not isinstance(f, Lambda) or len(f.cases) != 1:
        return False
    pat, body = f.cases[0]
    if not (
        isinstance(pat, PCons)
        and pat.name == "Tuple"
        and len(pat.args) == 2
        and isinstance(pat.args[0], PVar)
        and isinstance(pat.args[1], PCons)
        and pat.args[1].name == "Tuple"
        and len(pat.args[1].args) == 2
        and all(isinstance(a, PVar) for a in pat.args[1].args)
    ):
        return False
    k = pat.args[0].name
    vs = pat.args[1].args[0].name
    ws = pat.args[1].args[1].name
    shape = as_if(body)
    if shape is None:
        return False
    _, then_branch, _ = shape
    if not (
        isinstance(then_branch, Flatmap)
        and isinstance(then_branch.func, Lambda)
        and len(then_branch.func.cases) == 1
        and isinstance(then_branch.func.cases[0][0], PVar)
    ):
        return False
    v = then_branch.func.cases[0][0].name
    return seed == _semijoin_with_names(seed.source.left, other, k, vs, ws, v)


class _SemijoinPushdown:
    name = "join-pushdown"
    no_site_reason = "no join with a fixpoint input"

    def attempt(self, env: TypeEnv, e: Expr) -> Optional[_Outcome]:
        if not isinstance(e, Join):
            return None
        sides = []
        if isinstance(e.right, Fixpoint):
            sides.append("right")
        if isinstance(e.left, Fixpoint):
            sides.append("left")
        if not sides:
            return None
        first: Optional[_Outcome] = None
        for side in sides:
            out = self._attempt_side(env, e, side)
            if out.applied:
                return out
            first = first or out
        return first

    def _attempt_side(self, env: TypeEnv, e: Join, side: str) -> _Outcome:
        fix = e.right if side == "right" else e.left
        other = e.left if side == "right" else e.right
        assert isinstance(fix, Fixpoint)
        if not fix.delta.is_distinct:
            return _Outcome(False, "the loop aggregation is not distinct")
        if not is_syntactic_homomorphism(fix.body):
            return _Outcome(False, "the loop body is not a recognized homomorphism")
        if _is_semijoin_of(fix.seed, other):
            return _Outcome(
                False, "the seed already keeps only keys that occur in the other side"
            )
        loop_t = typecheck(fix, env)
        if pair_elem(loop_t.elem) is None:
            return _Outcome(False, "the loop elements are not key-value pairs")
        key_pat = ptuple(PVar("k"), PVar("v"))
        if not body_preserves_positions(env, fix.body, loop_t, key_pat, ["k"]):
            return _Outcome(False, "condition (C) fails for the join key")
        new_fix = Fixpoint(_semijoin_seed(fix.seed, other), fix.body, fix.delta)
        replacement = (
            Join(other, new_fix) if side == "right" else Join(new_fix, other)
        )
        problem = _typed_or_veto(env, replacement)
        if problem is not None:
            return _Outcome(False, f"the semi-join would not typecheck ({problem})")
        return _Outcome(
            True,
            "condition (C) holds for the join key; the seed now keeps only "
            "keys that occur in the other side",
            replacement,
        )


def probe_compatibility(
    env: TypeEnv,
    delta: Aggregator,
    body: Expr,
    loop_elem: TypeExpr,
    rng: random.Random,
    samples: int = 24,
) -> Optional[str]:
    """Try to refute that aggregating between iterations is harmless.

    Checks delta(body(delta(a))) = delta(body(a)) on random bags, with
    random values for the body's other inputs. Returns a refutation
    message, or None when every sample agreed. None is evidence, not
    proof: the guard still requires the programmer's annotation.
    """
    try:
        needed = {name: env.lookup(name) for name in sorted(free_vars(body))}
    except TypeCheckError as err:
        return f"the probe could not run ({err})"
    for _ in range(samples):
        try:
            values = sample_env(rng, needed)
            a = sample_bag(rng, loop_elem)
            compressed = delta.apply(_apply_to_bag(body, delta.apply(a), values))
            plain = delta.apply(_apply_to_bag(body, a, values))
        except MumonoidsError as err:
            return f"the probe could not run ({err})"
        if compressed != plain:
            return (
                "aggregating before the loop body changes its output "
                f"on a sampled bag of {a.size} elements"
            )
    return None


def probe_duplicate_sensitive(
    delta: Aggregator,
    loop_elem: TypeExpr,
    rng: random.Random,
    samples: int = 16,
) -> Optional[str]:
    """Try to refute that the aggregation ignores duplicate occurrences.

    Needed when the aggregation replaces a loop's distinct: the loop
    will then feed it bags whose duplicates distinct used to remove.
    """
    for _ in range(samples):
        try:
            a = sample_bag(rng, loop_elem)
            doubled = bag_union(a, a)
            if delta.apply(distinct(a)) != delta.apply(a) or delta.apply(
                doubled
            ) != delta.apply(a):
                return "the aggregation distinguishes duplicate occurrences"
        except MumonoidsError as err:
            return f"the probe could not run ({err})"
    return None


def _apply_to_bag(body: Expr, bag: Bag, values) -> Bag:
    out = evaluate(Apply(body, Lit(bag)), values)
    if not isinstance(out, Bag):
        raise ProbeError("the loop body returned a non-bag")
    return out


class _AggregationPushdown:
    name = "aggregation-pushdown"
    no_site_reason = "no aggregation over a fixpoint"

    def __init__(self, rng: random.Random):
        self.rng = rng

    def attempt(self, env: TypeEnv, e: Expr) -> Optional[_Outcome]:
        if (
            isinstance(e, Apply)
            and e.func == Prim("distinct")
            and isinstance(e.arg, Fixpoint)
        ):
            return self._distinct_site(env, e.arg)
        if isinstance(e, ReduceByKey) and isinstance(e.source, Fixpoint):
            return self._keyed_site(env, e)
        return None

    def _distinct_site(self, env: TypeEnv, fix: Fixpoint) -> _Outcome:
        if fix.delta.is_identity:
            if not is_syntactic_homomorphism(fix.body):
                return _Outcome(
                    False, "the loop body is not a recognized homomorphism"
                )
            return _Outcome(
                True,
                "deduplication moved into the loop",
                Fixpoint(fix.seed, fix.body, DISTINCT),
            )
        return _Outcome(
            True, "the loop's aggregation already leaves no duplicates", fix
        )

    def _keyed_site(self, env: TypeEnv, e: ReduceByKey) -> _Outcome:
        fix = e.source
        assert isinstance(fix, Fixpoint)
        if fix.delta.kind == "reduce_by_key":
            if fix.delta.op == e.op:
                return _Outcome(False, "the loop already applies this aggregation")
            return _Outcome(
                False, "the loop already carries a different keyed aggregation"
            )
        if not e.compat:
            return _Outcome(
                False,
                "no compatibility evidence: the keyed aggregation carries "
                "no annotation",
            )
        loop_t = typecheck(fix, env)
        delta = reduce_by_key_agg(e.op)
        refutation = probe_compatibility(env, delta, fix.body, loop_t.elem, self.rng)
        if refutation is not None:
            return _Outcome(
                False, f"the compatibility annotation is refuted: {refutation}"
            )
        if fix.delta.is_distinct:
            refutation = probe_duplicate_sensitive(delta, loop_t.elem, self.rng)
            if refutation is not None:
                return _Outcome(
                    False,
                    "cannot replace the loop's distinct: " + refutation,
                )
        new_fix = Fixpoint(fix.seed, fix.body, delta)
        problem = _typed_or_veto(env, new_fix)
        if problem is not None:
            return _Outcome(
                False, f"the pushed aggregation would not typecheck ({problem})"
            )
        return _Outcome(True, "keyed aggregation moved into the loop", new_fix)


# --- plan selection ----------------------------------------------------

def find_repartition_key(env: TypeEnv, fix: Fixpoint) -> Optional[Tuple[int, ...]]:
    """The first element component, outermost first, that the loop body
    provably carries through unchanged, or None.

    Partitioning the seed by such a component makes per-partition loop
    results disjoint, so their union needs no final deduplication.
    """
    try:
        loop_t = typecheck(fix, env)
    except TypeCheckError:
        return None
    if not is_bag(loop_t):
        return None
    for path in preorder_paths(loop_t.elem):
        if body_preserves_path(env, fix.body, loop_t, path):
            return path
    return None


def describe_path(path: Tuple[int, ...]) -> str:
    if not path:
        return "the whole element"
    return "component " + ".".join(str(i) for i in path)


def select_plan(env: TypeEnv, fix: Fixpoint) -> PlanDirective:
    if not is_syntactic_homomorphism(fix.body):
        return PlanDirective(
            fix,
            "p1",
            None,
            "the loop body is not a recognized homomorphism, so the loop "
            "runs globally with a merge per iteration",
        )
    if fix.delta.is_distinct:
        path = find_repartition_key(env, fix)
        if path is not None:
            return PlanDirective(
                fix,
                "p2-repartitioned",
                path,
                "per-partition loops over a seed partitioned by "
                f"{describe_path(path)}; results are disjoint, so no final "
                "deduplication is needed",
            )
        tail = "; no element component survives the body, so results must be merged"
    else:
        tail = "; skipping repartitioning, which needs a distinct loop"
    return PlanDirective(
        fix, "p2", None, "per-partition loops with one final merge" + tail
    )


# --- the driver ---------------------------------------------------------

_MAX_PASSES = 50


def _rewrite_once(env: TypeEnv, root: Expr, rule):
    """Apply ``rule`` at the first matching site, scanning outside
    function bodies, outermost first. Returns the new tree, the applied
    step or None, and the skip steps for refused sites."""
    applied: List[RewriteStep] = []
    skips: List[RewriteStep] = []

    def scan(e: Expr) -> Expr:
        if not applied:
            out = rule.attempt(env, e)
            if out is not None:
                if out.applied:
                    applied.append(
                        RewriteStep(
                            rule.name,
                            True,
                            out.reason,
                            _frag(e),
                            _frag(out.replacement),
                        )
                    )
                    return out.replacement
                skips.append(RewriteStep(rule.name, False, out.reason, _frag(e)))
        if isinstance(e, Lambda):
            return e
        return map_children(e, scan)

    new_root = scan(root)
    return new_root, (applied[0] if applied else None), skips


def _run_rule(env: TypeEnv, body: Expr, rule, trace: List[RewriteStep]) -> Expr:
    for _ in range(_MAX_PASSES):
        body, step, skips = _rewrite_once(env, body, rule)
        if step is None:
            if skips:
                trace.extend(skips)
            else:
                any_for_rule = any(s.rule == rule.name for s in trace)
                if not any_for_rule:
                    trace.append(
                        RewriteStep(rule.name, False, rule.no_site_reason)
                    )
            return body
        trace.append(step)
        try:
            typecheck(body, env)
        except TypeCheckError as err:
            raise InternalSoundnessError(
                f"{rule.name} produced an ill-typed term: {err}"
            )
    raise InternalSoundnessError(
        f"{rule.name} kept firing after {_MAX_PASSES} passes"
    )


def _toplevel_fixpoints(e: Expr) -> List[Fixpoint]:
    found: List[Fixpoint] = []
    seen: set = set()

    def scan(node: Expr) -> None:
        if isinstance(node, Fixpoint) and id(node) not in seen:
            seen.add(id(node))
            found.append(node)
        if isinstance(node, Lambda):
            return
        for c in children(node):
            scan(c)

    scan(e)
    return found


def optimize(program: Program, seed: int = 0) -> OptimizeResult:
    """Rewrite a program and decide an execution plan per loop.

    Filters are pushed first and semi-joins second, because both shrink
    the seed every later decision works from; aggregations go third
    because they change the loop aggregation that plan selection reads.
    The input must typecheck; each rewrite is re-typechecked, and a
    failure there is a bug in the rule, not in the program.
    """
    typecheck_program(program)
    body = inline_lets(program.body)
    env = TypeEnv(dict(program.inputs))
    rng = random.Random(seed)
    trace: List[RewriteStep] = []
    for rule in (
        _FilterPushdown(),
        _SemijoinPushdown(),
        _AggregationPushdown(rng),
    ):
        body = _run_rule(env, body, rule, trace)
    directives = []
    for fix in _toplevel_fixpoints(body):
        d = select_plan(env, fix)
        directives.append(d)
        trace.append(
            RewriteStep("plan-selection", True, d.reason, _frag(fix), d.plan)
        )
    return OptimizeResult(Program(program.inputs, body), trace, directives)
