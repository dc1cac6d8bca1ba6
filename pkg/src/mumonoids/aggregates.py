"""Aggregations that compress bags between fixpoint iterations.

An aggregation maps a bag to a smaller bag while keeping the part the
surrounding program cares about: ``distinct`` drops repeated elements,
a keyed reduction keeps one combined value per key. Both satisfy the
two laws the fixpoint loop relies on, namely that aggregating the empty
bag gives the empty bag and that aggregating a union may first
aggregate each side.

Whether an aggregation may additionally be pulled inside a particular
loop body is a separate question, answered by the optimizer, not here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Dict, Optional

from .errors import MalformedTermError
from .values import Bag, Value, bag_union, distinct, pair_parts, sorted_elements, tuple_v

if TYPE_CHECKING:
    from .expr import Expr


def fold_by_key(bag: Bag, combine2: Callable[[Value, Value], Value]) -> Bag:
    """Fold the values of a bag of pairs, one result pair per key.

    Occurrences are folded left to right in canonical element order,
    each repeated by its multiplicity, so the result is deterministic
    and duplicates count.
    """
    acc: Dict[Value, Value] = {}
    for element in sorted_elements(bag):
        key, val = pair_parts(element)
        if key in acc:
            acc[key] = combine2(acc[key], val)
        else:
            acc[key] = val
    return Bag(tuple_v(k, v) for k, v in acc.items())


def _op_callable(op: "Expr") -> Callable[[Value, Value], Value]:
    from .expr import Apply, Lit
    from .interp import evaluate

    def combine2(a: Value, b: Value) -> Value:
        return evaluate(Apply(Apply(op, Lit(a)), Lit(b)))

    return combine2


@dataclass(frozen=True)
class Aggregator:
    """A bag-to-bag compressor a fixpoint applies after each iteration.

    ``kind`` is "identity", "distinct" or "reduce_by_key"; the last one
    carries the binary combining function as an expression so plans stay
    printable and comparable. Identity keeps every occurrence, which
    means a loop with it terminates only when the body eventually stops
    producing elements.
    """

    kind: str
    op: Optional["Expr"] = None

    def __post_init__(self):
        if self.kind not in ("identity", "distinct", "reduce_by_key"):
            raise MalformedTermError(f"unknown aggregation kind {self.kind!r}")
        if (self.op is None) != (self.kind != "reduce_by_key"):
            raise MalformedTermError(
                "only reduce_by_key takes a combining function, and it needs one"
            )

    @property
    def is_distinct(self) -> bool:
        return self.kind == "distinct"

    @property
    def is_identity(self) -> bool:
        return self.kind == "identity"

    def apply(self, bag: Bag) -> Bag:
        if self.kind == "identity":
            return bag
        if self.kind == "distinct":
            return distinct(bag)
        return fold_by_key(bag, _op_callable(self.op))

    def combine(self, a: Bag, b: Bag) -> Bag:
        """Merge two already-aggregated bags into one aggregated bag."""
        return self.apply(bag_union(a, b))

    def describe(self) -> str:
        if self.kind != "reduce_by_key":
            return self.kind
        from .expr import format_expr

        return f"reduceByKey!({format_expr(self.op)})"


DISTINCT = Aggregator("distinct")
IDENTITY = Aggregator("identity")


def reduce_by_key_agg(op: "Expr") -> Aggregator:
    return Aggregator("reduce_by_key", op)
