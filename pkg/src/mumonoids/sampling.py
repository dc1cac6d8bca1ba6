"""Random data values driven by a type.

Used wherever the package needs throwaway inputs of a known shape:
compatibility probes in the optimizer, law checks in the test suite,
and random program instances for rewrite soundness. Pools are kept
deliberately small so sampled bags contain collisions, which is what
exercises aggregation behaviour.
"""

from __future__ import annotations

import random
from typing import Dict, Mapping

from .errors import ProbeError
from .types import (
    Basic,
    Bottom,
    DistBag,
    Func,
    LocalBag,
    Rigid,
    Sum,
    TypeExpr,
    format_type,
)
from .values import (
    Bag,
    Constructed,
    Value,
    bag_of,
    float_v,
    int_v,
    str_v,
)

_INT_POOL = range(0, 5)
_FLOAT_POOL = (0.0, 0.5, 1.0, 1.5, 2.0, 3.0)
_STRING_POOL = ("a", "b", "c", "d")


def sample_value(rng: random.Random, t: TypeExpr, depth: int = 0) -> Value:
    """One random value of type ``t``, drawn from small pools."""
    if isinstance(t, Basic):
        if t.name == "Int":
            return int_v(rng.choice(_INT_POOL))
        if t.name == "Float":
            return float_v(rng.choice(_FLOAT_POOL))
        if t.name == "String":
            return str_v(rng.choice(_STRING_POOL))
        raise ProbeError(f"cannot sample a {t.name}")
    if isinstance(t, Sum):
        name, params = rng.choice(t.cases)
        return Constructed(
            name, tuple(sample_value(rng, p, depth + 1) for p in params)
        )
    if isinstance(t, (LocalBag, DistBag)):
        return sample_bag(rng, t.elem, depth=depth + 1)
    if isinstance(t, Bottom):
        raise ProbeError("no values inhabit the empty element type")
    if isinstance(t, (Func, Rigid)):
        raise ProbeError(f"cannot sample a value of type {format_type(t)}")
    raise ProbeError(f"cannot sample {format_type(t)}")


def sample_bag(
    rng: random.Random, elem: TypeExpr, max_size: int = 5, depth: int = 0
) -> Bag:
    """A random bag of up to ``max_size`` elements of type ``elem``.

    An empty element type yields the empty bag, the one bag it has.
    Nesting shrinks the size budget so deep types stay small.
    """
    if isinstance(elem, Bottom):
        return Bag()
    cap = max(0, max_size - depth)
    return bag_of(*(sample_value(rng, elem, depth) for _ in range(rng.randint(0, cap))))


def sample_env(
    rng: random.Random, types: Mapping[str, TypeExpr]
) -> Dict[str, Value]:
    """Random bindings for every name in ``types``, in name order so the
    draw sequence is reproducible."""
    return {name: sample_value(rng, types[name]) for name in sorted(types)}
