"""Deterministic dataset builders and a small table-file loader.

Everything here is seeded: the same (seed, parameters) pair always
yields the same bag, so simulator runs and benchmark numbers are
reproducible across machines.
"""

from __future__ import annotations

import math
import random
from typing import List

from .errors import DataError
from .values import (
    Bag,
    Constructed,
    Value,
    float_v,
    format_value,
    int_v,
    sorted_elements,
    str_v,
    tuple_v,
)


def _check_graph_params(n: int, p: float) -> None:
    if not isinstance(n, int) or n < 0:
        raise DataError(f"node count must be a non-negative integer, got {n!r}")
    if not (isinstance(p, (int, float)) and math.isfinite(p)):
        raise DataError(f"edge probability must be a finite number, got {p!r}")


def _sampled_indices(rng: random.Random, total: int, p: float) -> List[int]:
    """Indices of a length-``total`` space kept under independent Bernoulli(p).

    Uses geometric skipping so sparse graphs cost time proportional to
    the number of edges produced, not to ``total``.
    """
    if p <= 0.0 or total == 0:
        return []
    if p >= 1.0:
        return list(range(total))
    out = []
    log_q = math.log1p(-p)
    idx = -1
    while True:
        skip = int(math.log(1.0 - rng.random()) / log_q)
        idx += skip + 1
        if idx >= total:
            return out
        out.append(idx)


def gen_erdos_renyi(n: int, p: float, seed: int, weighted: bool = False) -> Bag:
    """Random directed graph: each of the n*(n-1) ordered pairs is an
    edge independently with probability p.

    Returns a bag of (src, dst) pairs, or (src, dst, weight) triples
    with weights drawn uniformly from 0..5 when ``weighted`` is set.
    """
    _check_graph_params(n, p)
    rng = random.Random(seed)
    edges = []
    for idx in _sampled_indices(rng, n * (n - 1), p):
        src = idx // (n - 1)
        off = idx % (n - 1)
        dst = off if off < src else off + 1
        if weighted:
            w = rng.randint(0, 5)
            edges.append(tuple_v(int_v(src), int_v(dst), int_v(w)))
        else:
            edges.append(tuple_v(int_v(src), int_v(dst)))
    return Bag(edges)


def gen_dag(n: int, p: float, seed: int, weighted: bool = False) -> Bag:
    """Random DAG: each pair (i, j) with i < j is an edge with
    probability p, always oriented low-to-high. Weighted edges carry a
    uniform 1..5 cost.

    Acyclic inputs keep shortest-path style loops finite even before
    the optimizer prunes them, which makes these graphs the safe choice
    for weighted-path workloads.
    """
    _check_graph_params(n, p)
    rng = random.Random(seed)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                if weighted:
                    edges.append(tuple_v(int_v(i), int_v(j), int_v(rng.randint(1, 5))))
                else:
                    edges.append(tuple_v(int_v(i), int_v(j)))
    return Bag(edges)


def gen_flights(airports: int, count: int, seed: int) -> Bag:
    """Random flight table: ``count`` rows of (src, dst, dtime, atime)
    with src != dst, departures in 0..95 and durations in 1..12.
    """
    if airports < 2:
        raise DataError("a flight table needs at least two airports")
    if count < 0:
        raise DataError(f"flight count must be non-negative, got {count!r}")
    rng = random.Random(seed)
    rows = []
    for _ in range(count):
        src = rng.randrange(airports)
        dst = rng.randrange(airports - 1)
        if dst >= src:
            dst += 1
        dtime = rng.randint(0, 95)
        atime = dtime + rng.randint(1, 12)
        rows.append(tuple_v(int_v(src), int_v(dst), int_v(dtime), int_v(atime)))
    return Bag(rows)


def gen_int_set(n: int, k: int, seed: int) -> Bag:
    """A bag of k distinct integers drawn from 0..n-1."""
    if k < 0 or k > n:
        raise DataError(f"cannot pick {k} distinct values out of {n}")
    rng = random.Random(seed)
    return Bag(int_v(v) for v in rng.sample(range(n), k))


# --- table files ---------------------------------------------------------


def _parse_field(text: str) -> Value:
    try:
        return int_v(int(text))
    except ValueError:
        pass
    try:
        return float_v(float(text))
    except ValueError:
        return str_v(text)


def read_table(path: str) -> Bag:
    """Load a bag from a tab-separated text file.

    Each non-blank, non-``#`` line becomes one element: a bare value
    for one column, a tuple for several. Fields parse as int, then
    float, then fall back to string.
    """
    rows = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                fields = [_parse_field(f) for f in line.split("\t")]
                rows.append(fields[0] if len(fields) == 1 else tuple_v(*fields))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return Bag(rows)


def write_table(path: str, bag: Bag) -> None:
    """Write a bag of rows to a tab-separated file, repeating elements
    by multiplicity, in canonical order."""
    with open(path, "w", encoding="utf-8") as fh:
        for v in sorted_elements(bag):
            if isinstance(v, Constructed) and v.name == "Tuple":
                fh.write("\t".join(_field_text(a) for a in v.args))
            else:
                fh.write(_field_text(v))
            fh.write("\n")


def _field_text(v: Value) -> str:
    text = format_value(v)
    if text.startswith('"') and text.endswith('"'):
        return text[1:-1]
    return text
