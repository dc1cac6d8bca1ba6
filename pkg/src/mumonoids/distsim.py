"""Partitioned execution of fixpoint loops, with a record-transfer model.

The simulator runs a loop against data split into partitions and counts
how many records would cross the network, without modeling latency or
wall time. Sizes are record counts. Three plans exist:

* P1 keeps one global loop. Every iteration ends in a global merge of
  the accumulated bag, charged at N times its size, because a
  distinct-style merge needs every partition to see every record.
* P2 runs the whole loop to completion inside each partition and merges
  once at the end. Bags the loop body reads besides the iterate must
  first be copied to every partition, charged at (N - 1) times their
  size. The final merge ships each partition's result past the other
  N - 1 partitions. With one partition nothing moves.
* P2-repartitioned additionally pre-hashes the seed by an element
  component the body provably preserves. Per-partition results are then
  pairwise disjoint, so the final deduplicating merge disappears
  entirely; the results simply sit side by side. This variant is only
  valid for distinct loops, and the disjointness it relies on is
  asserted at run time.

Per-partition loops in P2 avoid re-deriving from the whole accumulator:
each round applies the body only to the elements that changed in the
previous round. That matches the plain loop for distinct and for folds
that absorb re-derived values (min, max); the test suite checks it
against the reference evaluator on every benchmark.

The per-iteration charge model and the static one in
``account_join_shapes`` deliberately follow the same convention: a
deduplicating merge costs N times the bag's size even on one partition,
which keeps the worked formulas exact; only P2's final merge scales with
N - 1, since its whole point is that one partition needs no merge.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .aggregates import Aggregator
from .errors import (
    CardinalityLimitError,
    DataError,
    InternalSoundnessError,
    IterationLimitError,
    MalformedTermError,
    PlanError,
)
from .expr import Expr, Lit, free_vars, walk
from .interp import EvalLimits, Runner
from .values import Bag, Constructed, Value, bag_union, format_value, sorted_elements


# --- partitioning -------------------------------------------------------

@dataclass(frozen=True)
class RoundRobin:
    """Deal elements out evenly, in a seed-shuffled order."""

    seed: int = 0

    def describe(self) -> str:
        return f"round-robin(seed={self.seed})"


@dataclass(frozen=True)
class ByKeyHash:
    """Co-locate elements whose component at ``path`` hashes alike."""

    path: Tuple[int, ...] = ()

    def describe(self) -> str:
        shown = ".".join(str(i) for i in self.path) if self.path else "element"
        return f"by-key-hash({shown})"


@dataclass(frozen=True)
class Explicit:
    """Partition contents were supplied directly."""

    def describe(self) -> str:
        return "explicit"


Partitioner = Union[RoundRobin, ByKeyHash, Explicit]


@dataclass(frozen=True)
class PartitionedBag:
    partitions: Tuple[Bag, ...]
    partitioner: Partitioner

    def __post_init__(self):
        if len(self.partitions) < 1:
            raise DataError("a partitioned bag needs at least one partition")

    @property
    def count(self) -> int:
        return len(self.partitions)

    def logical(self) -> Bag:
        out = Bag()
        for part in self.partitions:
            out = bag_union(out, part)
        return out


def stable_hash(v: Value) -> int:
    """A hash of a value's canonical text, identical across runs."""
    digest = hashlib.blake2b(
        format_value(v).encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def value_at_path(v: Value, path: Sequence[int]) -> Value:
    for i in path:
        if not (isinstance(v, Constructed) and 0 <= i < len(v.args)):
            raise DataError(
                f"element {format_value(v)} has no component at "
                + ".".join(str(j) for j in path)
            )
        v = v.args[i]
    return v


def _assign(strategy: ByKeyHash, v: Value, p: int) -> int:
    return stable_hash(value_at_path(v, strategy.path)) % p


def partition(b: Bag, p: int, strategy: Optional[Partitioner] = None) -> PartitionedBag:
    """Split a bag into ``p`` partitions whose union is the input."""
    if p < 1:
        raise DataError(f"cannot split into {p} partitions")
    if strategy is None:
        strategy = RoundRobin(0)
    if isinstance(strategy, RoundRobin):
        elements = sorted_elements(b)
        random.Random(strategy.seed).shuffle(elements)
        chunks: List[List[Value]] = [[] for _ in range(p)]
        for i, v in enumerate(elements):
            chunks[i % p].append(v)
        return PartitionedBag(tuple(Bag(c) for c in chunks), strategy)
    if isinstance(strategy, ByKeyHash):
        grouped: List[List[Value]] = [[] for _ in range(p)]
        for v, n in b.items():
            grouped[_assign(strategy, v, p)].extend([v] * n)
        return PartitionedBag(tuple(Bag(c) for c in grouped), strategy)
    raise DataError(f"cannot build partitions with strategy {strategy!r}")


def explicit_partitions(bags: Sequence[Bag]) -> PartitionedBag:
    return PartitionedBag(tuple(bags), Explicit())


# --- transfer reports ----------------------------------------------------

@dataclass
class TransferReport:
    """How many records each phase of a plan moved."""

    plan: str
    partitions: int
    iterations: int = 0
    seed_distribution: int = 0
    iteration_merge: int = 0
    final_merge: int = 0

    @property
    def records_shuffled(self) -> int:
        return self.seed_distribution + self.iteration_merge + self.final_merge

    def lines(self) -> List[str]:
        return [
            f"plan: {self.plan}",
            f"partitions: {self.partitions}",
            f"iterations: {self.iterations}",
            f"seed-distribution: {self.seed_distribution}",
            f"per-iteration-merge: {self.iteration_merge}",
            f"final-merge: {self.final_merge}",
            f"records-shuffled: {self.records_shuffled}",
        ]


def format_report(r: TransferReport) -> str:
    return "\n".join(r.lines())


# --- running the plans ----------------------------------------------------

def _step(runner: Runner, fn, bag: Bag, limits: EvalLimits) -> Bag:
    out = runner.apply(fn, bag)
    if not isinstance(out, Bag):
        raise MalformedTermError("a loop body must return a bag")
    if out.size > limits.max_bag_cardinality:
        raise CardinalityLimitError(out.size, limits.max_bag_cardinality)
    return out


def _broadcast_charge(body: Expr, env: Dict[str, object], n: int) -> int:
    """Records copied so each partition can read the loop body's other
    inputs locally: (n - 1) copies of every referenced bag."""
    if n <= 1:
        return 0
    total = 0
    for name in sorted(free_vars(body)):
        v = env.get(name)
        if isinstance(v, Bag):
            total += v.size
    for node in walk(body):
        if isinstance(node, Lit) and isinstance(node.value, Bag):
            total += node.value.size
    return (n - 1) * total


def _support_minus(a: Bag, b: Bag) -> Bag:
    return Bag(v for v in a.support() if b.multiplicity(v) == 0)


def _local_fixpoint(
    seed: Bag,
    body: Expr,
    delta: Aggregator,
    env: Dict[str, object],
    limits: EvalLimits,
) -> Tuple[Bag, int]:
    """One partition's complete loop. Identity loops replay the plain
    round structure, since duplicates accumulate; the others iterate on
    the per-round change set only."""
    runner = Runner(limits=limits)
    fn = runner.eval(body, dict(env))
    cap = limits.iteration_cap()
    s = delta.apply(seed)
    iterations = 0
    if delta.is_identity:
        r = s
        while True:
            if iterations >= cap:
                raise IterationLimitError(cap)
            iterations += 1
            r = delta.apply(_step(runner, fn, r, limits))
            new_s = delta.combine(s, r)
            if new_s.size > limits.max_bag_cardinality:
                raise CardinalityLimitError(new_s.size, limits.max_bag_cardinality)
            if new_s == s:
                break
            s = new_s
        return s, iterations
    frontier = s
    while True:
        if iterations >= cap:
            raise IterationLimitError(cap)
        iterations += 1
        new_s = delta.combine(s, _step(runner, fn, frontier, limits))
        if new_s.size > limits.max_bag_cardinality:
            raise CardinalityLimitError(new_s.size, limits.max_bag_cardinality)
        if new_s == s:
            break
        frontier = _support_minus(new_s, s)
        s = new_s
    return s, iterations


def run_plan_p1(
    pr: PartitionedBag,
    body: Expr,
    delta: Aggregator,
    env: Optional[Dict[str, object]] = None,
    limits: Optional[EvalLimits] = None,
) -> Tuple[Bag, TransferReport]:
    """One global loop over the union of all partitions.

    The body may be applied partition by partition when it distributes
    over union, but the accumulated bag must be re-merged globally after
    every round, and that is what dominates: each round is charged at
    N times the merged size.
    """
    limits = limits or EvalLimits()
    env = dict(env or {})
    report = TransferReport("P1", pr.count)
    runner = Runner(limits=limits)
    fn = runner.eval(body, env)
    cap = limits.iteration_cap()
    r = delta.apply(pr.logical())
    s = r
    iterations = 0
    while True:
        if iterations >= cap:
            raise IterationLimitError(cap)
        iterations += 1
        r = delta.apply(_step(runner, fn, r, limits))
        new_s = delta.combine(s, r)
        if new_s.size > limits.max_bag_cardinality:
            raise CardinalityLimitError(new_s.size, limits.max_bag_cardinality)
        report.iteration_merge += pr.count * new_s.size
        if new_s == s:
            break
        s = new_s
    report.iterations = iterations
    return s, report


def _resolve_schedule(n: int, schedule: Optional[Sequence[int]]) -> List[int]:
    if schedule is None:
        return list(range(n))
    order = list(schedule)
    if sorted(order) != list(range(n)):
        raise PlanError(
            f"schedule {order} is not a permutation of the {n} partitions"
        )
    return order


def run_plan_p2(
    pr: PartitionedBag,
    body: Expr,
    delta: Aggregator,
    env: Optional[Dict[str, object]] = None,
    limits: Optional[EvalLimits] = None,
    schedule: Optional[Sequence[int]] = None,
) -> Tuple[Bag, TransferReport]:
    """Per-partition loops, one final merge.

    Valid when the body distributes over bag union, which the optimizer
    establishes before selecting this plan. ``schedule`` reorders the
    independent partition tasks; results and reports do not depend on
    it, and the merge always runs in partition-index order.
    """
    limits = limits or EvalLimits()
    env = dict(env or {})
    report = TransferReport("P2", pr.count)
    report.seed_distribution = _broadcast_charge(body, env, pr.count)
    results: Dict[int, Bag] = {}
    most_rounds = 0
    for i in _resolve_schedule(pr.count, schedule):
        results[i], rounds = _local_fixpoint(
            pr.partitions[i], body, delta, env, limits
        )
        most_rounds = max(most_rounds, rounds)
    report.iterations = most_rounds
    report.final_merge = (pr.count - 1) * sum(
        results[i].size for i in range(pr.count)
    )
    merged = Bag()
    for i in range(pr.count):
        merged = delta.combine(merged, results[i])
    return merged, report


def run_plan_p2_repartitioned(
    pr: PartitionedBag,
    body: Expr,
    delta: Aggregator,
    key_path: Sequence[int],
    env: Optional[Dict[str, object]] = None,
    limits: Optional[EvalLimits] = None,
    schedule: Optional[Sequence[int]] = None,
) -> Tuple[Bag, TransferReport]:
    """Per-partition loops over a key-hashed seed, no final merge at all.

    Requires a distinct loop and a key component the body preserves;
    per-partition results are then disjoint and their plain union is the
    answer. If the seed is not already hashed by the key, it is
    repartitioned first, charging one move per record that changes
    partition. Overlapping results mean the preservation analysis lied,
    which is reported as an internal error, never papered over.
    """
    if not delta.is_distinct:
        raise PlanError("a repartitioned loop needs the distinct aggregation")
    limits = limits or EvalLimits()
    env = dict(env or {})
    report = TransferReport("P2-repartitioned", pr.count)
    wanted = ByKeyHash(tuple(key_path))
    if pr.partitioner != wanted:
        moved, pr = _repartition(pr, wanted)
        report.seed_distribution += moved
    report.seed_distribution += _broadcast_charge(body, env, pr.count)
    results: Dict[int, Bag] = {}
    most_rounds = 0
    for i in _resolve_schedule(pr.count, schedule):
        results[i], rounds = _local_fixpoint(
            pr.partitions[i], body, delta, env, limits
        )
        most_rounds = max(most_rounds, rounds)
    report.iterations = most_rounds
    for i in range(pr.count):
        for j in range(i + 1, pr.count):
            overlap = [
                v for v in results[i].support() if results[j].multiplicity(v) > 0
            ]
            if overlap:
                raise InternalSoundnessError(
                    f"partitions {i} and {j} both produced "
                    f"{format_value(overlap[0])}; the preserved-key analysis "
                    "was wrong"
                )
    out = Bag()
    for i in range(pr.count):
        out = bag_union(out, results[i])
    return out, report


def _repartition(
    pr: PartitionedBag, strategy: ByKeyHash
) -> Tuple[int, PartitionedBag]:
    n = pr.count
    moved = 0
    chunks: List[List[Value]] = [[] for _ in range(n)]
    for i, part in enumerate(pr.partitions):
        for v, count in part.items():
            j = _assign(strategy, v, n)
            if j != i:
                moved += count
            chunks[j].extend([v] * count)
    return moved, PartitionedBag(tuple(Bag(c) for c in chunks), strategy)


# --- the static shape model ------------------------------------------------

@dataclass(frozen=True)
class CostLeaf:
    """An input of known size; reading it where it lies is free."""

    size: int


@dataclass(frozen=True)
class CostJoin:
    left: "CostShape"
    right: "CostShape"
    size: int = 0


@dataclass(frozen=True)
class CostCogroup:
    left: "CostShape"
    right: "CostShape"
    size: int = 0


@dataclass(frozen=True)
class CostGroupBy:
    source: "CostShape"
    size: int = 0


@dataclass(frozen=True)
class CostDistinct:
    source: "CostShape"
    size: int = 0


@dataclass(frozen=True)
class CostFixpoint:
    """A loop run with the global plan; ``size`` is its result size."""

    seed: "CostShape"
    size: int


CostShape = Union[
    CostLeaf, CostJoin, CostCogroup, CostGroupBy, CostDistinct, CostFixpoint
]


def account_join_shapes(shape: CostShape, partitions: int) -> int:
    """Records shuffled by a tree of non-local operators, by the static
    model: joins and cogroups ship both inputs, a grouping ships its
    input, and a deduplication or a globally looped fixpoint ships N
    copies of its output so every partition sees every record."""
    n = partitions
    if isinstance(shape, CostLeaf):
        return 0
    if isinstance(shape, (CostJoin, CostCogroup)):
        return (
            account_join_shapes(shape.left, n)
            + account_join_shapes(shape.right, n)
            + shape.left.size
            + shape.right.size
        )
    if isinstance(shape, CostGroupBy):
        return account_join_shapes(shape.source, n) + shape.source.size
    if isinstance(shape, CostDistinct):
        return account_join_shapes(shape.source, n) + n * shape.source.size
    if isinstance(shape, CostFixpoint):
        return account_join_shapes(shape.seed, n) + n * shape.size
    raise DataError(f"not a cost shape: {shape!r}")
