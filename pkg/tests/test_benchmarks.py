import pytest

from conftest import from_py, support_set
from oracles import (
    bfs_hops,
    connection_closure,
    distinct_words,
    floyd_warshall,
    reachable_set,
    warshall,
)
from mumonoids.benchmarks import (
    BENCHMARKS,
    WORD_CHAINS,
    closure_join_inputs,
    get_benchmark,
)
from mumonoids.errors import DataError
from mumonoids.interp import run_program
from mumonoids.parser import parse_program
from mumonoids.typecheck import typecheck_program


EXPECTED_IDS = {"tc", "sp", "tc-filter", "sp-filter", "flights", "pathplanning", "movierec"}


def run_small(name, seed, n, p):
    bench = BENCHMARKS[name]
    inputs = bench.make_inputs(seed, n=n, p=p)
    return inputs, run_program(bench.parse(), inputs)


def test_registry_contents():
    assert set(BENCHMARKS) == EXPECTED_IDS
    for bench in BENCHMARKS.values():
        assert bench.title and bench.sizes
        typecheck_program(bench.parse())


def test_inputs_are_reproducible():
    for bench in BENCHMARKS.values():
        assert bench.make_inputs(3) == bench.make_inputs(3)
    a = BENCHMARKS["tc"].make_inputs(1)["r"]
    b = BENCHMARKS["tc"].make_inputs(2)["r"]
    assert a != b


def test_lookup_ignores_case():
    assert get_benchmark("TC") is BENCHMARKS["tc"]
    assert get_benchmark("Flights") is BENCHMARKS["flights"]
    with pytest.raises(DataError) as info:
        get_benchmark("nope")
    assert "choose from" in str(info.value)


def test_closure_join_inputs_shape():
    inputs = closure_join_inputs(seed=0, n=12, p=0.2)
    tagged = support_set(inputs["tagged"])
    assert tagged and all(v == k * 10 for k, v in tagged)
    assert len({k for k, _ in tagged}) == len(tagged)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_closure_matches_warshall(seed):
    inputs, got = run_small("tc", seed, n=10, p=0.2)
    assert support_set(got) == warshall(support_set(inputs["r"]))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_cheapest_paths_match_floyd_warshall(seed):
    inputs, got = run_small("sp", seed, n=10, p=0.4)
    best = floyd_warshall(support_set(inputs["e"]))
    assert support_set(got) == {(sd, w) for sd, w in best.items()}


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_filtered_closure_keeps_chosen_sources(seed):
    inputs, got = run_small("tc-filter", seed, n=10, p=0.2)
    starts = support_set(inputs["starts"])
    full = warshall(support_set(inputs["r"]))
    assert support_set(got) == {(a, b) for a, b in full if a in starts}


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_filtered_paths_keep_chosen_sources(seed):
    inputs, got = run_small("sp-filter", seed, n=10, p=0.4)
    starts = support_set(inputs["starts"])
    best = floyd_warshall(support_set(inputs["e"]))
    assert support_set(got) == {
        ((s, d), w) for (s, d), w in best.items() if s in starts
    }


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_flight_connections_match_the_closure(seed):
    inputs, got = run_small("flights", seed, n=5, p=0.1)
    assert support_set(got) == connection_closure(support_set(inputs["fl"]))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_fewest_hops_matches_breadth_first_search(seed):
    inputs, got = run_small("pathplanning", seed, n=12, p=0.3)
    hops = bfs_hops(support_set(inputs["roads"]), support_set(inputs["start"]))
    (dest,) = support_set(inputs["dest"])
    want = {(dest, hops[dest])} if dest in hops else set()
    assert support_set(got) == want


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_recommendations_match_reachability(seed):
    inputs, got = run_small("movierec", seed, n=12, p=0.15)
    want = reachable_set(support_set(inputs["sim"]), support_set(inputs["liked"]))
    assert support_set(got) == want


@pytest.mark.parametrize("letters", [["a", "b", "c"], ["a", "b", "c", "d"]])
def test_word_chains_enumerate_every_word(letters):
    pr = parse_program(WORD_CHAINS)
    got = run_program(pr, {"chars": from_py(letters)})
    assert support_set(got) == distinct_words(letters)
