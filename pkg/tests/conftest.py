"""Shared helpers: bridging plain Python data and interpreter values."""

from typing import Dict, Iterable, Tuple

from mumonoids.values import Bag, Constant, Constructed, Value, bool_v, float_v, int_v, str_v, tuple_v


def from_py(x) -> Value:
    """Build an interpreter value from nested Python data."""
    if isinstance(x, bool):
        return bool_v(x)
    if isinstance(x, int):
        return int_v(x)
    if isinstance(x, float):
        return float_v(x)
    if isinstance(x, str):
        return str_v(x)
    if isinstance(x, tuple):
        return tuple_v(*(from_py(a) for a in x))
    if isinstance(x, (frozenset, set, list)):
        return Bag(from_py(a) for a in x)
    raise TypeError(f"no value encoding for {type(x).__name__}")


def to_py(v: Value):
    """Collapse an interpreter value back to plain Python data."""
    if isinstance(v, Constant):
        return v.payload
    if isinstance(v, Constructed):
        if v.name == "Tuple":
            return tuple(to_py(a) for a in v.args)
        if v.name == "True":
            return True
        if v.name == "False":
            return False
        return (v.name, tuple(to_py(a) for a in v.args))
    if isinstance(v, Bag):
        return bag_counts(v)
    raise TypeError(f"no Python encoding for {type(v).__name__}")


def bag_counts(b: Bag) -> Dict[object, int]:
    """A bag as {python value: multiplicity}."""
    out: Dict[object, int] = {}
    for v, n in b.items():
        out[to_py(v)] = out.get(to_py(v), 0) + n
    return out


def bag_of(xs: Iterable) -> Bag:
    return Bag(from_py(x) for x in xs)


def support_set(b: Bag) -> set:
    return set(bag_counts(b))


def pairs_of(b: Bag) -> set:
    """A bag of 2-tuples as a set of Python pairs (multiplicities dropped)."""
    return {x for x in support_set(b)}
