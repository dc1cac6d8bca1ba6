"""Parsing for the surface syntax.

The grammar mirrors the printer in expr.py level for level, so
``parse_expr(format_expr(e))`` gives back a tree equal to ``e`` for any
tree in normal form. Lambdas are written ``\\pat -> body`` with extra
cases separated by ``|``; ``|`` always attaches to the innermost
enclosing lambda. ``if``/``and``/``or`` are sugar for applying a
two-case boolean function, ``{a, b}`` is a bag display, ``(a, b)`` a
tuple, and displays over constants fold to literals at parse time.

A program file is a sequence of ``input NAME : TYPE`` declarations
followed by one expression. ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .aggregates import DISTINCT, IDENTITY, Aggregator
from .builtins import BUILTINS
from .errors import ParseError
from .expr import (
    Apply,
    Cogroup,
    Construct,
    Dist,
    EMPTY,
    Expr,
    FALSE_E,
    Fixpoint,
    Flatmap,
    Join,
    Lambda,
    Let,
    Lit,
    Prim,
    Program,
    Reduce,
    ReduceByKey,
    Singleton,
    TRUE_E,
    Var,
    lam,
    make_if,
    prim_call,
)
from .types import (
    BOOL,
    DistBag,
    FLOAT,
    INT,
    LocalBag,
    STRING,
    Sum,
    TypeExpr,
    sum_case,
    tuple_t,
)
from .values import (
    Bag,
    Constructed,
    PCons,
    Pattern,
    PVar,
    float_v,
    int_v,
    ptuple,
    str_v,
)

KEYWORDS = {"let", "in", "if", "then", "else", "and", "or", "not", "input", "dist"}

SPECIAL_FORMS = {
    "flatmap",
    "join",
    "cogroup",
    "reduce",
    "reduceByKey",
    "fixpoint",
    "groupBy",
    "minByKey",
    "maxByKey",
    "sumByKey",
}

_BUILTIN_IDENTS = {name for name in BUILTINS if name.isidentifier()} - KEYWORDS

RESERVED = KEYWORDS | SPECIAL_FORMS | _BUILTIN_IDENTS

_SECTIONABLE = {"+", "-", "*", "/", "==", "!=", "<", "<=", ">", ">=", "++"}

_CMP_OPS = {"==", "!=", "<", "<=", ">", ">="}

_SUGAR_OPS = {
    "minByKey": r"\x -> \y -> if x < y then x else y",
    "maxByKey": r"\x -> \y -> if x > y then x else y",
    "sumByKey": r"\x -> \y -> x + y",
}


@dataclass
class Token:
    kind: str  # INT, FLOAT, STRING, IDENT, UPIDENT, OP, EOF
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<WS>[ \t\r\n]+)
  | (?P<COMMENT>\#[^\n]*)
  | (?P<FLOAT>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<INT>\d+)
  | (?P<STRING>"(?:\\.|[^"\\\n])*")
  | (?P<OP>->|\+\+|==|!=|<=|>=|[+\-*/<>=(){}\[\],|\\!:])
  | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)

_UNESCAPE = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}


def _unescape(raw: str, line: int, col: int) -> str:
    inner = raw[1:-1]
    out = []
    i = 0
    while i < len(inner):
        ch = inner[i]
        if ch == "\\":
            i += 1
            esc = inner[i]
            if esc not in _UNESCAPE:
                raise ParseError(f"unknown escape \\{esc}", line, col)
            out.append(_UNESCAPE[esc])
        else:
            out.append(ch)
        i += 1
    return "".join(out)


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind not in ("WS", "COMMENT"):
            if kind == "IDENT" and lexeme[0].isupper():
                kind = "UPIDENT"
            tokens.append(Token(kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0

    # Token plumbing.

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.col)

    def at_op(self, text: str, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok.kind == "OP" and tok.text == text

    def at_kw(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and tok.text == word

    def eat_op(self, text: str) -> bool:
        if self.at_op(text):
            self.advance()
            return True
        return False

    def expect_op(self, text: str) -> Token:
        if not self.at_op(text):
            self.fail(f"expected {text!r}, found {self.peek().text!r}")
        return self.advance()

    def expect_kw(self, word: str) -> Token:
        if not self.at_kw(word):
            self.fail(f"expected {word!r}, found {self.peek().text!r}")
        return self.advance()

    def expect_name(self, what: str) -> str:
        tok = self.peek()
        if tok.kind != "IDENT":
            self.fail(f"expected {what}, found {tok.text!r}")
        if tok.text in RESERVED:
            self.fail(f"{tok.text!r} is reserved and cannot name {what}")
        self.advance()
        return tok.text

    # Expressions.

    def expr(self) -> Expr:
        if self.at_op("\\"):
            return self.lambda_()
        if self.at_kw("let"):
            self.advance()
            name = self.expect_name("a let binding")
            self.expect_op("=")
            bound = self.expr()
            self.expect_kw("in")
            return Let(name, bound, self.expr())
        if self.at_kw("if"):
            self.advance()
            cond = self.expr()
            self.expect_kw("then")
            then = self.expr()
            self.expect_kw("else")
            return make_if(cond, then, self.expr())
        return self.or_()

    def lambda_(self) -> Lambda:
        self.expect_op("\\")
        cases = [self.case_()]
        while self.eat_op("|"):
            cases.append(self.case_())
        return Lambda(tuple(cases))

    def case_(self) -> Tuple[Pattern, Expr]:
        pat = self.pattern()
        self.expect_op("->")
        return pat, self.expr()

    def pattern(self) -> Pattern:
        tok = self.peek()
        if tok.kind == "UPIDENT":
            self.advance()
            if self.eat_op("("):
                args = [self.pattern()]
                while self.eat_op(","):
                    args.append(self.pattern())
                self.expect_op(")")
                return PCons(tok.text, tuple(args))
            return PCons(tok.text)
        if tok.kind == "IDENT":
            return PVar(self.expect_name("a pattern variable"))
        if self.eat_op("("):
            first = self.pattern()
            if self.at_op(")"):
                self.advance()
                return first
            parts = [first]
            while self.eat_op(","):
                parts.append(self.pattern())
            self.expect_op(")")
            return ptuple(*parts)
        self.fail(f"expected a pattern, found {tok.text!r}")

    def or_(self) -> Expr:
        left = self.and_()
        while self.at_kw("or"):
            self.advance()
            left = make_if(left, TRUE_E, self.and_())
        return left

    def and_(self) -> Expr:
        left = self.cmp()
        while self.at_kw("and"):
            self.advance()
            left = make_if(left, self.cmp(), FALSE_E)
        return left

    def cmp(self) -> Expr:
        left = self.add()
        tok = self.peek()
        if tok.kind == "OP" and tok.text in _CMP_OPS:
            self.advance()
            return prim_call(tok.text, left, self.add())
        return left

    def add(self) -> Expr:
        left = self.mul()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in ("+", "-", "++"):
                self.advance()
                left = prim_call(tok.text, left, self.mul())
            else:
                return left

    def mul(self) -> Expr:
        left = self.unary()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in ("*", "/"):
                self.advance()
                left = prim_call(tok.text, left, self.unary())
            else:
                return left

    def unary(self) -> Expr:
        if self.at_kw("not"):
            self.advance()
            return prim_call("not", self.unary())
        if self.at_op("-"):
            minus = self.advance()
            tok = self.peek()
            if tok.kind == "INT":
                self.advance()
                return Lit(int_v(-int(tok.text)))
            if tok.kind == "FLOAT":
                self.advance()
                return Lit(float_v(-float(tok.text)))
            self.fail("a minus sign here must be followed by a number", minus)
        return self.postfix()

    def postfix(self) -> Expr:
        e = self.atom()
        while self.at_op("("):
            for arg in self.call_args():
                e = Apply(e, arg)
        return e

    def call_args(self) -> List[Expr]:
        self.expect_op("(")
        if self.at_op(")"):
            self.fail("a call needs at least one argument")
        args = [self.expr()]
        while self.eat_op(","):
            args.append(self.expr())
        self.expect_op(")")
        return args

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "INT":
            self.advance()
            return Lit(int_v(int(tok.text)))
        if tok.kind == "FLOAT":
            self.advance()
            return Lit(float_v(float(tok.text)))
        if tok.kind == "STRING":
            self.advance()
            return Lit(str_v(_unescape(tok.text, tok.line, tok.col)))
        if tok.kind == "UPIDENT":
            return self.constructor()
        if self.at_op("\\"):
            return self.lambda_()
        if self.at_op("("):
            return self.parens()
        if self.at_op("{"):
            return self.bag_display()
        if tok.kind == "IDENT":
            return self.ident()
        self.fail(f"unexpected {tok.text!r}")

    def constructor(self) -> Expr:
        name = self.advance().text
        args: List[Expr] = []
        if self.at_op("("):
            args = self.call_args()
        return _fold_construct(name, tuple(args))

    def parens(self) -> Expr:
        self.advance()
        nxt = self.peek()
        if nxt.kind == "OP" and nxt.text in _SECTIONABLE and self.at_op(")", 1):
            self.advance()
            self.advance()
            return Prim(nxt.text)
        if self.at_kw("not") and self.at_op(")", 1):
            self.advance()
            self.advance()
            return Prim("not")
        first = self.expr()
        if self.at_op(")"):
            self.advance()
            return first
        parts = [first]
        while self.eat_op(","):
            parts.append(self.expr())
        self.expect_op(")")
        return _fold_construct("Tuple", tuple(parts))

    def bag_display(self) -> Expr:
        self.advance()
        if self.eat_op("}"):
            return EMPTY
        elements = [self.expr()]
        while self.eat_op(","):
            elements.append(self.expr())
        self.expect_op("}")
        if all(isinstance(e, Lit) for e in elements):
            return Lit(Bag(tuple(e.value for e in elements)))
        out = _singleton(elements[0])
        for e in elements[1:]:
            out = prim_call("++", out, _singleton(e))
        return out

    def ident(self) -> Expr:
        tok = self.peek()
        name = tok.text
        if name == "dist":
            self.advance()
            (source,) = self.form_args(1, "dist")
            return Dist(source)
        if name in KEYWORDS:
            self.fail(f"unexpected keyword {name!r}")
        if name in SPECIAL_FORMS:
            return self.special_form()
        self.advance()
        if name in _BUILTIN_IDENTS:
            return Prim(name)
        return Var(name)

    def form_args(self, n: int, form: str) -> List[Expr]:
        args = self.call_args()
        if len(args) != n:
            self.fail(f"{form} takes {n} argument(s), got {len(args)}")
        return args

    def special_form(self) -> Expr:
        name = self.advance().text
        if name == "flatmap":
            f, source = self.form_args(2, name)
            return Flatmap(f, source)
        if name == "join":
            left, right = self.form_args(2, name)
            return Join(left, right)
        if name == "cogroup":
            left, right = self.form_args(2, name)
            return Cogroup(left, right)
        if name == "reduce":
            op, zero, source = self.form_args(3, name)
            return Reduce(op, zero, source)
        if name == "reduceByKey":
            compat = self.eat_op("!")
            op, source = self.form_args(2, name)
            return ReduceByKey(op, source, compat)
        if name == "fixpoint":
            delta = DISTINCT
            if self.eat_op("["):
                delta = self.aggregator()
                self.expect_op("]")
            seed, body = self.form_args(2, name)
            return Fixpoint(seed, body, delta)
        if name == "groupBy":
            (source,) = self.form_args(1, name)
            return _group_by(source)
        if name in _SUGAR_OPS:
            compat = self.eat_op("!")
            (source,) = self.form_args(1, name)
            return ReduceByKey(_sugar_op(name), source, compat)
        self.fail(f"unknown form {name!r}")

    def aggregator(self) -> Aggregator:
        tok = self.peek()
        if tok.kind != "IDENT":
            self.fail("expected an aggregation name")
        name = self.advance().text
        if name == "distinct":
            return DISTINCT
        if name == "identity":
            return IDENTITY
        if name == "reduceByKey":
            self.expect_op("!")
            (op,) = self.form_args(1, "the loop aggregation")
            return Aggregator("reduce_by_key", op)
        if name in _SUGAR_OPS:
            self.expect_op("!")
            return Aggregator("reduce_by_key", _sugar_op(name))
        self.fail(f"unknown aggregation {name!r}", tok)

    # Types.

    def type_(self) -> TypeExpr:
        alts = [self.type_alt()]
        while self.eat_op("|"):
            alts.append(self.type_alt())
        if len(alts) == 1:
            return alts[0]
        cases = []
        for alt in alts:
            if not (isinstance(alt, Sum) and len(alt.cases) == 1):
                self.fail("only constructor cases can be joined with |")
            cases.extend(alt.cases)
        return Sum(tuple(cases))

    def type_alt(self) -> TypeExpr:
        tok = self.peek()
        if self.eat_op("{"):
            inner = self.type_()
            self.expect_op("}")
            return LocalBag(inner)
        if self.at_kw("dist"):
            self.advance()
            self.expect_op("{")
            inner = self.type_()
            self.expect_op("}")
            return DistBag(inner)
        if self.eat_op("("):
            parts = [self.type_()]
            while self.eat_op(","):
                parts.append(self.type_())
            self.expect_op(")")
            if len(parts) == 1:
                return parts[0]
            return tuple_t(*parts)
        if tok.kind == "UPIDENT":
            self.advance()
            basic = {"Int": INT, "Float": FLOAT, "String": STRING, "Bool": BOOL}.get(
                tok.text
            )
            if basic is not None:
                return basic
            if self.at_op("("):
                self.advance()
                params = [self.type_()]
                while self.eat_op(","):
                    params.append(self.type_())
                self.expect_op(")")
                return sum_case(tok.text, *params)
            return sum_case(tok.text)
        self.fail(f"expected a type, found {tok.text!r}")

    # Programs.

    def program(self) -> Program:
        inputs: List[Tuple[str, TypeExpr]] = []
        seen = set()
        while self.at_kw("input"):
            self.advance()
            name = self.expect_name("an input")
            if name in seen:
                self.fail(f"input {name!r} declared twice")
            seen.add(name)
            self.expect_op(":")
            inputs.append((name, self.type_()))
        body = self.expr()
        return Program(tuple(inputs), body)

    def expect_eof(self):
        tok = self.peek()
        if tok.kind != "EOF":
            self.fail(f"unexpected {tok.text!r} after the expression")


def _fold_construct(name: str, args: Tuple[Expr, ...]) -> Expr:
    if all(isinstance(a, Lit) for a in args):
        return Lit(Constructed(name, tuple(a.value for a in args)))
    return Construct(name, args)


def _singleton(e: Expr) -> Expr:
    if isinstance(e, Lit):
        return Lit(Bag((e.value,)))
    return Singleton(e)


def _group_by(source: Expr) -> Expr:
    # groupBy(e) is sugar: wrap each value in a singleton bag, then merge
    # the bags per key with ++.
    pat = ptuple(PVar("k"), PVar("v"))
    wrap = Flatmap(
        lam(pat, Singleton(Construct("Tuple", (Var("k"), Singleton(Var("v")))))),
        source,
    )
    merge = lam(PVar("a"), lam(PVar("b"), prim_call("++", Var("a"), Var("b"))))
    return ReduceByKey(merge, wrap, False)


_SUGAR_CACHE = {}


def _sugar_op(name: str) -> Expr:
    if name not in _SUGAR_CACHE:
        _SUGAR_CACHE[name] = parse_expr(_SUGAR_OPS[name])
    return _SUGAR_CACHE[name]


def parse_expr(text: str) -> Expr:
    parser = _Parser(tokenize(text))
    e = parser.expr()
    parser.expect_eof()
    return e


def parse_program(text: str) -> Program:
    parser = _Parser(tokenize(text))
    program = parser.program()
    parser.expect_eof()
    return program
