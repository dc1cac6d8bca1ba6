"""Laws the fixpoint loop relies on, checked on random bags.

Every aggregation d must satisfy d({}) = {} and d(a union b) =
d(d(a) union d(b)); distinct additionally ignores duplicates entirely.
"""

import random

import pytest

from conftest import bag_counts, from_py
from mumonoids.aggregates import (
    DISTINCT,
    IDENTITY,
    Aggregator,
    fold_by_key,
    reduce_by_key_agg,
)
from mumonoids.errors import MalformedTermError
from mumonoids.expr import Var, lam, make_if, prim_call
from mumonoids.values import Bag, bag_union, int_v, tuple_v
from mumonoids.values import PVar


PLUS = lam(PVar("a"), lam(PVar("b"), prim_call("+", Var("a"), Var("b"))))
MIN = lam(
    PVar("a"),
    lam(
        PVar("b"),
        make_if(prim_call("<", Var("a"), Var("b")), Var("a"), Var("b")),
    ),
)
MAX = lam(
    PVar("a"),
    lam(
        PVar("b"),
        make_if(prim_call("<", Var("a"), Var("b")), Var("b"), Var("a")),
    ),
)

AGGREGATORS = [
    DISTINCT,
    reduce_by_key_agg(PLUS),
    reduce_by_key_agg(MIN),
    reduce_by_key_agg(MAX),
]


def random_pair_bag(rng: random.Random, max_size: int = 12) -> Bag:
    n = rng.randrange(max_size + 1)
    return Bag(
        tuple_v(int_v(rng.randrange(4)), int_v(rng.randrange(10))) for _ in range(n)
    )


@pytest.mark.parametrize("agg", AGGREGATORS, ids=lambda a: a.describe())
def test_empty_bag_law(agg):
    assert agg.apply(Bag()) == Bag()


@pytest.mark.parametrize("agg", AGGREGATORS, ids=lambda a: a.describe())
def test_union_law_on_random_bags(agg):
    rng = random.Random(11)
    for _ in range(500):
        a = random_pair_bag(rng)
        b = random_pair_bag(rng)
        whole = agg.apply(bag_union(a, b))
        halves = agg.apply(bag_union(agg.apply(a), agg.apply(b)))
        assert whole == halves, (bag_counts(a), bag_counts(b))


@pytest.mark.parametrize("agg", AGGREGATORS, ids=lambda a: a.describe())
def test_idempotence(agg):
    rng = random.Random(12)
    for _ in range(200):
        a = random_pair_bag(rng)
        once = agg.apply(a)
        assert agg.apply(once) == once


def test_distinct_ignores_duplicates():
    rng = random.Random(13)
    for _ in range(500):
        a = random_pair_bag(rng)
        assert DISTINCT.apply(bag_union(a, a)) == DISTINCT.apply(a)


def test_folding_aggregations_see_duplicates():
    """sumByKey is the canonical duplicate-sensitive aggregation: the
    optimizer leans on this distinction, so pin it here."""
    a = from_py([(1, 5)])
    doubled = reduce_by_key_agg(PLUS).apply(bag_union(a, a))
    assert bag_counts(doubled) == {(1, 10): 1}
    # min does not care how often a value shows up
    assert reduce_by_key_agg(MIN).apply(bag_union(a, a)) == a


def test_identity_changes_nothing():
    rng = random.Random(14)
    for _ in range(100):
        a = random_pair_bag(rng)
        assert IDENTITY.apply(a) == a
        b = random_pair_bag(rng)
        assert IDENTITY.combine(a, b) == bag_union(a, b)


def test_fold_by_key_matches_a_dict_oracle():
    rng = random.Random(15)
    for _ in range(300):
        pairs = [
            (rng.randrange(5), rng.randrange(20)) for _ in range(rng.randrange(15))
        ]
        bag = from_py(pairs)
        got = bag_counts(fold_by_key(bag, lambda a, b: int_v(a.payload + b.payload)))
        want = {}
        for k, v in sorted(pairs):
            want[k] = want.get(k, 0) + v
        assert got == {(k, v): 1 for k, v in want.items()}


def test_fold_by_key_order_is_canonical_not_insertion():
    forward = Bag([tuple_v(int_v(1), int_v(2)), tuple_v(int_v(1), int_v(9))])
    backward = Bag([tuple_v(int_v(1), int_v(9)), tuple_v(int_v(1), int_v(2))])
    sub = lam(PVar("a"), lam(PVar("b"), prim_call("-", Var("a"), Var("b"))))
    agg = reduce_by_key_agg(sub)
    assert agg.apply(forward) == agg.apply(backward)


def test_combine_merges_aggregated_halves():
    agg = reduce_by_key_agg(PLUS)
    a = agg.apply(from_py([(1, 2), (1, 3)]))
    b = agg.apply(from_py([(1, 10), (2, 7)]))
    assert bag_counts(agg.combine(a, b)) == {(1, 15): 1, (2, 7): 1}


def test_aggregator_validation():
    with pytest.raises(MalformedTermError):
        Aggregator("median")
    with pytest.raises(MalformedTermError):
        Aggregator("distinct", PLUS)
    with pytest.raises(MalformedTermError):
        Aggregator("reduce_by_key")


def test_describe_is_printable():
    assert DISTINCT.describe() == "distinct"
    assert IDENTITY.describe() == "identity"
    assert "reduceByKey!" in reduce_by_key_agg(PLUS).describe()
