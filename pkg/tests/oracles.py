"""Brute-force reference computations the tests compare against.

Everything here is deliberately naive and independent of the package:
plain dicts, sets, and triple loops. If an implementation disagrees
with one of these, the implementation is wrong.
"""

from itertools import permutations
from typing import Dict, Iterable, List, Set, Tuple

Edge = Tuple[int, int]


def warshall(edges: Iterable[Edge]) -> Set[Edge]:
    """All pairs connected by a path of one or more edges."""
    edges = set(edges)
    nodes = sorted({a for a, _ in edges} | {b for _, b in edges})
    reach = {(i, j): (i, j) in edges for i in nodes for j in nodes}
    for k in nodes:
        for i in nodes:
            for j in nodes:
                if reach[(i, k)] and reach[(k, j)]:
                    reach[(i, j)] = True
    return {p for p, ok in reach.items() if ok}


def floyd_warshall(wedges: Iterable[Tuple[int, int, int]]) -> Dict[Edge, int]:
    """Cheapest path weight for every pair connected by >= 1 edge."""
    best: Dict[Edge, int] = {}
    for s, d, w in wedges:
        if (s, d) not in best or w < best[(s, d)]:
            best[(s, d)] = w
    nodes = sorted({a for a, _ in best} | {b for _, b in best})
    for k in nodes:
        for i in nodes:
            for j in nodes:
                ik = best.get((i, k))
                kj = best.get((k, j))
                if ik is None or kj is None:
                    continue
                if (i, j) not in best or ik + kj < best[(i, j)]:
                    best[(i, j)] = ik + kj
    return best


def distinct_words(letters: List[str]) -> Set[str]:
    """Every word using each given letter at most once, length >= 1."""
    out: Set[str] = set()
    for k in range(1, len(letters) + 1):
        for combo in permutations(letters, k):
            out.add("".join(combo))
    return out


def bfs_hops(edges: Iterable[Edge], starts: Iterable[int]) -> Dict[int, int]:
    """Fewest edges from any start to each reachable node (starts at 0)."""
    adj: Dict[int, List[int]] = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
    dist = {s: 0 for s in starts}
    frontier = sorted(dist)
    while frontier:
        nxt = []
        for a in frontier:
            for b in adj.get(a, ()):
                if b not in dist:
                    dist[b] = dist[a] + 1
                    nxt.append(b)
        frontier = nxt
    return dist


def connection_closure(
    flights: Iterable[Tuple[int, int, int, int]]
) -> Set[Tuple[int, int, int, int]]:
    """Flights plus every multi-leg trip with strictly feasible layovers.

    A trip (s1, d1, t1, a1) extends with a flight (s2, d2, t2, a2) when
    d1 == s2 and a1 < t2, giving (s1, d2, t1, a2).
    """
    base = set(flights)
    trips = set(base)
    while True:
        grown = set(trips)
        for (s1, d1, t1, a1) in trips:
            for (s2, d2, t2, a2) in base:
                if d1 == s2 and a1 < t2:
                    grown.add((s1, d2, t1, a2))
        if grown == trips:
            return trips
        trips = grown


def reachable_set(edges: Iterable[Edge], seeds: Iterable[int]) -> Set[int]:
    """Seeds plus everything reachable from them along edges."""
    adj: Dict[int, List[int]] = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
    seen = set(seeds)
    frontier = sorted(seen)
    while frontier:
        nxt = []
        for a in frontier:
            for b in adj.get(a, ()):
                if b not in seen:
                    seen.add(b)
                    nxt.append(b)
        frontier = nxt
    return seen


def path_length_pairs(edges: Iterable[Edge], starts: Iterable[int]) -> Set[Edge]:
    """Every (node, k) where some start reaches node in exactly k hops.

    Only safe on acyclic graphs; includes (start, 0). This mirrors a
    loop that tracks hop counts rather than just reachability.
    """
    adj: Dict[int, List[int]] = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
    pairs = {(s, 0) for s in starts}
    frontier = set(pairs)
    while frontier:
        nxt = set()
        for c, k in frontier:
            for b in adj.get(c, ()):
                if (b, k + 1) not in pairs:
                    pairs.add((b, k + 1))
                    nxt.add((b, k + 1))
        frontier = nxt
    return pairs
