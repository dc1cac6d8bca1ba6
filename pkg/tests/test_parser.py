import random

import pytest

from mumonoids.aggregates import DISTINCT, IDENTITY, reduce_by_key_agg
from mumonoids.benchmarks import BENCHMARKS, CLOSURE_JOIN
from mumonoids.errors import ParseError, PatternError
from mumonoids.expr import (
    Cogroup,
    Construct,
    Dist,
    Fixpoint,
    Flatmap,
    Join,
    Let,
    Lit,
    Reduce,
    ReduceByKey,
    Singleton,
    Var,
    as_if,
    format_expr,
    format_program,
    lam,
    make_if,
    normalize_literals,
    prim_call,
)
from mumonoids.parser import parse_expr, parse_program
from mumonoids.values import Bag, PCons, PVar, int_v, ptuple, str_v, tuple_v


def test_ground_terms_become_literals():
    assert parse_expr("{1, 1, 2}") == Lit(Bag([int_v(1), int_v(1), int_v(2)]))
    assert parse_expr("(1, 2)") == Lit(tuple_v(int_v(1), int_v(2)))
    assert parse_expr("Some(3)") == Lit(
        parse_expr("Some(3)").value
    )  # stays a literal, not a Construct node
    assert isinstance(parse_expr("Some(x)"), Construct)


def test_bag_with_variables_becomes_a_union_of_singletons():
    e = parse_expr("{x, 1}")
    assert e == prim_call("++", Singleton(Var("x")), Lit(Bag([int_v(1)])))


def test_group_by_is_reduce_by_key_sugar():
    got = parse_expr("groupBy(e)")
    pat = ptuple(PVar("k"), PVar("v"))
    wrap = Flatmap(
        lam(pat, Singleton(Construct("Tuple", (Var("k"), Singleton(Var("v")))))),
        Var("e"),
    )
    merge = lam(PVar("a"), lam(PVar("b"), prim_call("++", Var("a"), Var("b"))))
    assert got == ReduceByKey(merge, wrap, False)


def test_keyed_fold_sugar_and_compat_marks():
    e = parse_expr("minByKey!(e)")
    assert isinstance(e, ReduceByKey) and e.compat
    assert parse_expr("sumByKey(e)").compat is False
    assert parse_expr("maxByKey(e)").op == parse_expr(
        r"\x -> \y -> if x > y then x else y"
    )
    direct = parse_expr(r"reduceByKey!(\a -> \b -> a + b, e)")
    assert isinstance(direct, ReduceByKey) and direct.compat


def test_boolean_operators_are_branch_sugar():
    e = parse_expr("a and b")
    assert as_if(e) == (Var("a"), Var("b"), parse_expr("False"))
    e = parse_expr("a or b")
    assert as_if(e) == (Var("a"), parse_expr("True"), Var("b"))
    assert parse_expr("if c then 1 else 2") == make_if(
        Var("c"), Lit(int_v(1)), Lit(int_v(2))
    )


def test_fixpoint_aggregation_brackets():
    assert parse_expr(r"fixpoint(e, \x -> x)").delta == DISTINCT
    assert parse_expr(r"fixpoint[identity](e, \x -> x)").delta == IDENTITY
    keyed = parse_expr(r"fixpoint[minByKey!](e, \x -> x)").delta
    assert keyed == reduce_by_key_agg(parse_expr(r"\x -> \y -> if x < y then x else y"))


def test_programs_declare_typed_inputs():
    pr = parse_program("input e : dist {(Int, Int)}\ninput s : {Int}\ne")
    assert [name for name, _ in pr.inputs] == ["e", "s"]
    assert pr.body == Var("e")


def test_benchmark_sources_round_trip():
    sources = [b.source for b in BENCHMARKS.values()] + [CLOSURE_JOIN]
    assert len(sources) == 8
    for src in sources:
        pr = parse_program(src)
        again = parse_program(format_program(pr))
        assert again == pr, src.splitlines()[0]


WORDS = ["ab", "zig", "q", "x y", "k9"]


def gen_pattern(rng, name_pool):
    roll = rng.random()
    a = name_pool.pop()
    if roll < 0.6:
        return PVar(a), [a]
    b = name_pool.pop()
    if roll < 0.85:
        return ptuple(PVar(a), PVar(b)), [a, b]
    return PCons("Some", (PVar(a),)), [a]


def gen_expr(rng, depth, scope):
    """A random term over the whole surface syntax. It need not
    typecheck; printing and reparsing is a purely syntactic affair."""
    if depth <= 0 or rng.random() < 0.25:
        roll = rng.randrange(6)
        if roll == 0:
            return Lit(int_v(rng.randrange(-9, 50)))
        if roll == 1:
            return Lit(str_v(rng.choice(WORDS)))
        if roll == 2 and scope:
            return Var(rng.choice(scope))
        if roll == 3:
            return parse_expr(rng.choice(["True", "False"]))
        if roll == 4:
            return Lit(int_v(0))
        return parse_expr(rng.choice(["{1, 2}", "{}", "(1, 2)", "{(1, 2)}"]))

    def sub():
        return gen_expr(rng, depth - 1, scope)

    def fn():
        pool = [f"v{len(scope)}", f"v{len(scope) + 1}", f"v{len(scope) + 2}"]
        pat, bound = gen_pattern(rng, pool)
        return lam(pat, gen_expr(rng, depth - 1, scope + bound))

    def binop_fn():
        a, b = f"v{len(scope)}", f"v{len(scope) + 1}"
        op = rng.choice(["+", "*"])
        return lam(PVar(a), lam(PVar(b), prim_call(op, Var(a), Var(b))))

    roll = rng.randrange(16)
    if roll == 0:
        return prim_call(rng.choice(["+", "-", "*", "/"]), sub(), sub())
    if roll == 1:
        return prim_call(rng.choice(["<", "<=", ">", ">=", "==", "!="]), sub(), sub())
    if roll == 2:
        return prim_call("++", sub(), sub())
    if roll == 3:
        return prim_call(rng.choice(["distinct", "size"]), sub())
    if roll == 4:
        return prim_call(rng.choice(["member", "contains", "concat"]), sub(), sub())
    if roll == 5:
        return Singleton(sub())
    if roll == 6:
        return Construct("Tuple", (sub(), sub()))
    if roll == 7:
        return Construct(rng.choice(["Some", "Edge"]), (sub(),))
    if roll == 8:
        return make_if(sub(), sub(), sub())
    if roll == 9:
        name = f"v{len(scope)}"
        return Let(name, sub(), gen_expr(rng, depth - 1, scope + [name]))
    if roll == 10:
        return Flatmap(fn(), sub())
    if roll == 11:
        return Reduce(binop_fn(), sub(), sub())
    if roll == 12:
        return ReduceByKey(binop_fn(), sub(), rng.random() < 0.5)
    if roll == 13:
        return rng.choice([Join, Cogroup])(sub(), sub())
    if roll == 14:
        delta = rng.choice([DISTINCT, IDENTITY, reduce_by_key_agg(binop_fn())])
        return Fixpoint(sub(), fn(), delta)
    return Dist(sub())


def test_random_terms_round_trip():
    rng = random.Random(99)
    for _ in range(300):
        t = normalize_literals(gen_expr(rng, 4, []))
        printed = format_expr(t)
        assert parse_expr(printed) == t, printed


def test_deep_nesting_round_trips():
    src = r"\x -> \y -> \z -> ((x + y) * z, {(x, (y, z))})"
    e = parse_expr(src)
    assert parse_expr(format_expr(e)) == e


@pytest.mark.parametrize(
    "src,line,col",
    [
        ("1 +", 1, 4),
        ("(1, 2", 1, 6),
        ("let x 3 in x", 1, 7),
        ("if 1 then 2", 1, 12),
        ("dist {1}", 1, 6),
        ("@", 1, 1),
        (r"fixpoint[median](e, \x -> x)", 1, 10),
    ],
)
def test_parse_errors_carry_positions(src, line, col):
    with pytest.raises(ParseError) as exc:
        parse_expr(src)
    assert (exc.value.line, exc.value.col) == (line, col)


def test_program_errors_carry_positions():
    with pytest.raises(ParseError) as exc:
        parse_program("input e : {Int}\n1 +")
    assert (exc.value.line, exc.value.col) == (2, 4)
    # input names follow the variable convention: lowercase only
    with pytest.raises(ParseError) as exc:
        parse_program("input R : {Int}\nr")
    assert (exc.value.line, exc.value.col) == (1, 7)


def test_duplicate_pattern_variable_fails_during_parse():
    with pytest.raises(PatternError):
        parse_expr(r"\(x, x) -> 1")


def test_reserved_words_cannot_be_variables():
    with pytest.raises(ParseError):
        parse_expr("let join = 3 in join")


def test_type_syntax():
    pr = parse_program("input e : dist {(Int, Int)}\ne")
    from mumonoids.types import INT, DistBag, tuple_t

    assert dict(pr.inputs)["e"] == DistBag(tuple_t(INT, INT))
    pr = parse_program("input o : {None | Some(Int)}\no")
    t = dict(pr.inputs)["o"]
    assert {n for n, _ in t.elem.cases} == {"None", "Some"}
