import random

import pytest

from conftest import bag_counts, bag_of, from_py
from mumonoids.errors import MalformedTermError
from mumonoids.values import (
    NO_MATCH,
    Bag,
    PCons,
    PVar,
    bag_minus,
    bag_union,
    distinct,
    format_value,
    int_v,
    pattern_match,
    pattern_vars,
    ptuple,
    sorted_elements,
    str_v,
    tuple_v,
    value_key,
)


def test_bag_counts_multiplicities():
    b = Bag([int_v(1), int_v(1), int_v(2)])
    assert b.size == 3
    assert b.multiplicity(int_v(1)) == 2
    assert b.multiplicity(int_v(2)) == 1
    assert b.multiplicity(int_v(9)) == 0
    assert set(b.support()) == {int_v(1), int_v(2)}


def test_bag_equality_ignores_construction_order():
    a = Bag([int_v(2), int_v(1), int_v(1)])
    b = Bag([int_v(1), int_v(2), int_v(1)])
    assert a == b
    assert hash(a) == hash(b)


def test_empty_bag_is_union_identity():
    b = bag_of([("x", 1), ("x", 1), ("y", 2)])
    assert bag_union(b, Bag()) == b
    assert bag_union(Bag(), b) == b


def test_union_adds_multiplicities():
    a = Bag([int_v(1), int_v(1)])
    b = Bag([int_v(1), int_v(3)])
    u = bag_union(a, b)
    assert u.multiplicity(int_v(1)) == 3
    assert u.multiplicity(int_v(3)) == 1


def test_union_laws_on_random_bags():
    """Union is associative and commutative with the empty bag as unit."""
    rng = random.Random(11)

    def rand_bag():
        return Bag(int_v(rng.randint(0, 4)) for _ in range(rng.randint(0, 6)))

    for _ in range(300):
        a, b, c = rand_bag(), rand_bag(), rand_bag()
        assert bag_union(a, b) == bag_union(b, a)
        assert bag_union(bag_union(a, b), c) == bag_union(a, bag_union(b, c))
        assert bag_union(a, Bag()) == a


def test_distinct_collapses_to_support():
    b = Bag([int_v(5), int_v(5), int_v(7)])
    d = distinct(b)
    assert d.size == 2
    assert d.multiplicity(int_v(5)) == 1
    assert distinct(d) == d


def test_bag_minus():
    a = Bag([int_v(1), int_v(1), int_v(2)])
    b = Bag([int_v(1), int_v(2), int_v(3)])
    assert bag_counts(bag_minus(a, b)) == {1: 1}
    assert bag_minus(b, b) == Bag()


def test_sorted_elements_is_canonical_and_total():
    b = bag_of([3, 1, 2, 1])
    assert [v.payload for v in sorted_elements(b)] == [1, 1, 2, 3]
    mixed = Bag([tuple_v(int_v(1), int_v(2)), int_v(9), str_v("a")])
    keys = [value_key(v) for v in sorted_elements(mixed)]
    assert keys == sorted(keys)


def test_format_value_prints_bags_sorted():
    b = bag_of([2, 1, 1])
    assert format_value(b) == "{1, 1, 2}"
    assert format_value(from_py((1, "a"))) == '(1, "a")'


def test_tuple_values_compare_structurally():
    assert tuple_v(int_v(1), int_v(2)) == tuple_v(int_v(1), int_v(2))
    assert tuple_v(int_v(1), int_v(2)) != tuple_v(int_v(2), int_v(1))


def test_bags_nest():
    outer = Bag([Bag([int_v(1)]), Bag([int_v(1)]), Bag()])
    assert outer.multiplicity(Bag([int_v(1)])) == 2
    assert outer.multiplicity(Bag()) == 1


def test_pattern_match_binds_tuple_parts():
    pat = ptuple(PVar("a"), PVar("b"))
    got = pattern_match(tuple_v(int_v(1), int_v(2)), pat)
    assert got == {"a": int_v(1), "b": int_v(2)}


def test_pattern_match_nested():
    pat = ptuple(PVar("k"), ptuple(PVar("x"), PVar("y")))
    v = tuple_v(int_v(7), tuple_v(str_v("s"), int_v(3)))
    got = pattern_match(v, pat)
    assert got["k"] == int_v(7) and got["x"] == str_v("s")


def test_pattern_match_on_scalar_is_malformed_not_a_mismatch():
    # A constructor pattern poking at a scalar means the term escaped
    # typechecking; that is an error, not a quiet non-match.
    pat = ptuple(PVar("k"), PVar("v"))
    with pytest.raises(MalformedTermError):
        pattern_match(int_v(7), pat)


def test_pattern_match_constructor_name_and_arity():
    assert pattern_match(tuple_v(int_v(1), int_v(2)), PCons("Pair", (PVar("a"), PVar("b")))) is NO_MATCH
    assert pattern_match(from_py(True), PCons("True")) == {}
    assert pattern_match(from_py(False), PCons("True")) is NO_MATCH


def test_pattern_vars_in_order():
    pat = ptuple(PVar("b"), ptuple(PVar("a"), PVar("c")))
    assert list(pattern_vars(pat)) == ["b", "a", "c"]


def test_value_key_rejects_non_values():
    with pytest.raises(MalformedTermError):
        value_key(object())
