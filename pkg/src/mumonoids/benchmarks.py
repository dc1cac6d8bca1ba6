"""Ready-made workloads: program text plus seeded input builders.

Each entry pairs a surface-syntax program with a generator for inputs
of a requested size, so the command line and the test suite can run
the same workloads reproducibly. The ``n`` knob scales the dataset,
``p`` its density; the exact meaning of each is noted per entry.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Dict, Optional

from .errors import DataError
from .expr import Program
from .generators import gen_dag, gen_erdos_renyi, gen_flights, gen_int_set
from .parser import parse_program
from .values import Bag, int_v, tuple_v

Inputs = Dict[str, Bag]


@dataclass(frozen=True)
class Benchmark:
    name: str
    title: str
    source: str
    default_n: int
    default_p: float
    sizes: str
    builder: Callable[[int, int, float], Inputs]

    def parse(self) -> Program:
        return parse_program(self.source)

    def make_inputs(
        self, seed: int = 0, n: Optional[int] = None, p: Optional[float] = None
    ) -> Inputs:
        n = self.default_n if n is None else n
        p = self.default_p if p is None else p
        return self.builder(seed, n, p)


TRANSITIVE_CLOSURE = r"""input r : dist {(Int, Int)}

fixpoint(r, \x ->
  flatmap(\(m, (a, b)) -> {(a, b)},
    join(flatmap(\(a, b) -> {(b, a)}, x), r)))
"""

SHORTEST_PATHS = r"""input e : dist {(Int, Int, Int)}

let r = flatmap(\(s, d, w) -> {((s, d), w)}, e) in
minByKey!(fixpoint(r, \x ->
  flatmap(\(m, ((s, w1), (d, w2))) -> {((s, d), w1 + w2)},
    join(flatmap(\((s, d), w) -> {(d, (s, w))}, x),
         flatmap(\((s, d), w) -> {(s, (d, w))}, r)))))
"""

REACHABLE_FROM = r"""input r : dist {(Int, Int)}
input starts : {Int}

flatmap(\(a, b) -> if member(a, starts) then {(a, b)} else {},
  fixpoint(r, \x ->
    flatmap(\(m, (a, b)) -> {(a, b)},
      join(flatmap(\(a, b) -> {(b, a)}, x), r))))
"""

SHORTEST_FROM = r"""input e : dist {(Int, Int, Int)}
input starts : {Int}

let r = flatmap(\(s, d, w) -> {((s, d), w)}, e) in
minByKey!(flatmap(\((s, d), w) -> if member(s, starts) then {((s, d), w)} else {},
  fixpoint(r, \x ->
    flatmap(\(m, ((s, w1), (d, w2))) -> {((s, d), w1 + w2)},
      join(flatmap(\((s, d), w) -> {(d, (s, w))}, x),
           flatmap(\((s, d), w) -> {(s, (d, w))}, r))))))
"""

CLOSURE_JOIN = r"""input r : dist {(Int, Int)}
input tagged : dist {(Int, Int)}

join(tagged, fixpoint(r, \x ->
  flatmap(\(m, (a, b)) -> {(a, b)},
    join(flatmap(\(a, b) -> {(b, a)}, x), r))))
"""

CONNECTIONS = r"""input fl : dist {(Int, Int, Int, Int)}

fixpoint(fl, \x ->
  flatmap(\(h, ((s1, d1, t1, a1), (s2, d2, t2, a2))) ->
      if a1 < t2 then {(s1, d2, t1, a2)} else {},
    join(flatmap(\(s, d, t, a) -> {(d, (s, d, t, a))}, x),
         flatmap(\(s, d, t, a) -> {(s, (s, d, t, a))}, fl))))
"""

FEWEST_HOPS = r"""input roads : dist {(Int, Int)}
input start : {Int}
input dest : {Int}

minByKey!(flatmap(\(c, k) -> if member(c, dest) then {(c, k)} else {},
  fixpoint(flatmap(\s -> {(s, 0)}, start),
    \x -> flatmap(\(c, (k, c2)) -> {(c2, k + 1)}, join(x, roads)))))
"""

RECOMMENDATIONS = r"""input sim : dist {(Int, Int)}
input liked : {Int}

fixpoint(liked, \x ->
  flatmap(\(k, (m, m2)) -> {m2},
    join(flatmap(\m -> {(m, m)}, x), sim)))
"""

WORD_CHAINS = r"""input chars : {String}

fixpoint(chars, \x ->
  flatmap(\w -> flatmap(\c -> if contains(w, c) then {} else {concat(w, c)}, chars), x))
"""


def _tc_inputs(seed: int, n: int, p: float) -> Inputs:
    return {"r": gen_erdos_renyi(n, p, seed)}


def _sp_inputs(seed: int, n: int, p: float) -> Inputs:
    return {"e": gen_dag(n, p, seed, weighted=True)}


def _tc_filter_inputs(seed: int, n: int, p: float) -> Inputs:
    return {
        "r": gen_erdos_renyi(n, p, seed),
        "starts": gen_int_set(n, max(1, n // 10), seed + 1),
    }


def _sp_filter_inputs(seed: int, n: int, p: float) -> Inputs:
    return {
        "e": gen_dag(n, p, seed, weighted=True),
        "starts": gen_int_set(n, max(1, n // 8), seed + 1),
    }


def closure_join_inputs(seed: int, n: int, p: float) -> Inputs:
    """Inputs for CLOSURE_JOIN, which is not a registry entry but is
    handy for exercising the seed-narrowing rewrite."""
    rng = random.Random(seed + 1)
    keys = rng.sample(range(n), max(1, n // 6))
    return {
        "r": gen_erdos_renyi(n, p, seed),
        "tagged": Bag(tuple_v(int_v(k), int_v(k * 10)) for k in keys),
    }


def _flights_inputs(seed: int, n: int, p: float) -> Inputs:
    return {"fl": gen_flights(n, int(round(40 * n * p)), seed)}


def _hops_inputs(seed: int, n: int, p: float) -> Inputs:
    return {
        "roads": gen_dag(n, p, seed),
        "start": Bag((int_v(0),)),
        "dest": Bag((int_v(n - 1),)),
    }


def _rec_inputs(seed: int, n: int, p: float) -> Inputs:
    return {
        "sim": gen_erdos_renyi(n, p, seed),
        "liked": gen_int_set(n, max(1, n // 8), seed + 1),
    }


BENCHMARKS: Dict[str, Benchmark] = {
    b.name: b
    for b in (
        Benchmark(
            "tc",
            "transitive closure of a directed graph",
            TRANSITIVE_CLOSURE,
            30,
            0.06,
            "n nodes, each ordered pair an edge with probability p",
            _tc_inputs,
        ),
        Benchmark(
            "sp",
            "cheapest path weight between every connected pair",
            SHORTEST_PATHS,
            16,
            0.3,
            "n-node weighted DAG, density p",
            _sp_inputs,
        ),
        Benchmark(
            "tc-filter",
            "closure restricted to selected source nodes",
            REACHABLE_FROM,
            30,
            0.06,
            "n nodes, density p; sources = n/10 sampled nodes",
            _tc_filter_inputs,
        ),
        Benchmark(
            "sp-filter",
            "cheapest paths from selected source nodes",
            SHORTEST_FROM,
            16,
            0.3,
            "n-node weighted DAG, density p; sources = n/8 sampled nodes",
            _sp_filter_inputs,
        ),
        Benchmark(
            "flights",
            "multi-leg connections with feasible layovers",
            CONNECTIONS,
            12,
            0.1,
            "n airports, round(40*n*p) flights",
            _flights_inputs,
        ),
        Benchmark(
            "pathplanning",
            "fewest road segments from a start city to a destination",
            FEWEST_HOPS,
            18,
            0.25,
            "n-city road DAG, density p; start 0, destination n-1",
            _hops_inputs,
        ),
        Benchmark(
            "movierec",
            "movies transitively similar to a liked set",
            RECOMMENDATIONS,
            25,
            0.08,
            "n movies, similarity density p; n/8 liked seeds",
            _rec_inputs,
        ),
    )
}


def get_benchmark(name: str) -> Benchmark:
    """Look a benchmark up by name, case-insensitively."""
    key = name.lower()
    try:
        return BENCHMARKS[key]
    except KeyError:
        known = ", ".join(sorted(BENCHMARKS))
        raise DataError(f"unknown benchmark {name!r} (choose from: {known})") from None
