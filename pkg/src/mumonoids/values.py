"""Runtime values: constants, constructed terms and bags, plus patterns.

A bag is a finite multiset of values. It is stored as a mapping from
element to positive multiplicity, so multiset equality is plain mapping
equality, union adds counts and duplicate elimination resets every count
to one. Bags nest freely (a bag is itself a value), which cogroup relies
on to pair each key with its two groups.

Values are immutable and hashable. A deterministic total order over
values (constants sort before constructed terms, which sort before bags)
gives bags a canonical printed form and makes fold orders reproducible.
"""

from __future__ import annotations

from typing import Dict, Iterable, Iterator, List, Optional, Tuple

from .errors import MalformedTermError, PatternError


class Value:
    """Base class for runtime data. Instances are immutable."""

    __slots__ = ()


class Constant(Value):
    """An opaque host constant. ``kind`` is one of int, float, string."""

    __slots__ = ("kind", "payload", "_hash")

    def __init__(self, kind: str, payload):
        if kind not in ("int", "float", "string"):
            raise MalformedTermError(f"unknown constant kind {kind!r}")
        self.kind = kind
        self.payload = payload
        self._hash = hash(("const", kind, payload))

    def __eq__(self, other):
        return (
            isinstance(other, Constant)
            and self.kind == other.kind
            and self.payload == other.payload
        )

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return format_value(self)


class Constructed(Value):
    """A constructor application such as Tuple(1, 2) or True."""

    __slots__ = ("name", "args", "_hash")

    def __init__(self, name: str, args: Iterable[Value] = ()):
        args = tuple(args)
        for a in args:
            if not isinstance(a, Value):
                raise MalformedTermError(
                    f"constructor {name} applied to a non-value ({type(a).__name__})"
                )
        self.name = name
        self.args = args
        self._hash = hash(("cons", name, args))

    def __eq__(self, other):
        return (
            isinstance(other, Constructed)
            and self.name == other.name
            and self.args == other.args
        )

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return format_value(self)


class Bag(Value):
    """A finite multiset of values.

    ``size`` counts elements with multiplicity. Iteration order of the
    underlying mapping is arbitrary; use :func:`sorted_elements` whenever
    order matters.
    """

    __slots__ = ("_counts", "size", "_hash")

    def __init__(self, elements: Iterable[Value] = ()):
        counts: Dict[Value, int] = {}
        for v in elements:
            if not isinstance(v, Value):
                raise MalformedTermError(
                    f"bags hold data values only, not {type(v).__name__}"
                )
            counts[v] = counts.get(v, 0) + 1
        self._counts = counts
        self.size = sum(counts.values())
        self._hash = None

    @classmethod
    def _from_counts(cls, counts: Dict[Value, int]) -> "Bag":
        bag = cls.__new__(cls)
        bag._counts = counts
        bag.size = sum(counts.values())
        bag._hash = None
        return bag

    def items(self) -> Iterator[Tuple[Value, int]]:
        return iter(self._counts.items())

    def elements(self) -> Iterator[Value]:
        """Every element, repeated by multiplicity, in arbitrary order."""
        for v, n in self._counts.items():
            for _ in range(n):
                yield v

    def support(self) -> Iterator[Value]:
        """Each distinct element once."""
        return iter(self._counts)

    def multiplicity(self, v: Value) -> int:
        return self._counts.get(v, 0)

    def __contains__(self, v: Value) -> bool:
        return v in self._counts

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other):
        return isinstance(other, Bag) and self._counts == other._counts

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(("bag", frozenset(self._counts.items())))
        return self._hash

    def __repr__(self):
        return format_value(self)


EMPTY_BAG = Bag()


def bag_of(*elements: Value) -> Bag:
    return Bag(elements)


def bag_union(a: Bag, b: Bag) -> Bag:
    """Additive multiset union: multiplicities add."""
    if not a._counts:
        return b
    if not b._counts:
        return a
    counts = dict(a._counts)
    for v, n in b._counts.items():
        counts[v] = counts.get(v, 0) + n
    return Bag._from_counts(counts)


def distinct(b: Bag) -> Bag:
    """Duplicate elimination: every multiplicity becomes one."""
    if all(n == 1 for n in b._counts.values()):
        return b
    return Bag._from_counts({v: 1 for v in b._counts})


def bag_minus(a: Bag, b: Bag) -> Bag:
    """Multiset difference, clamped at zero."""
    counts = {}
    for v, n in a._counts.items():
        m = n - b._counts.get(v, 0)
        if m > 0:
            counts[v] = m
    return Bag._from_counts(counts)


def value_key(v: Value):
    """A nested tuple that orders values deterministically.

    Constants order by (kind, payload), constructed terms by name then
    arguments, bags by their sorted (element, multiplicity) pairs.
    """
    if isinstance(v, Constant):
        return (0, v.kind, v.payload)
    if isinstance(v, Constructed):
        return (1, v.name, tuple(value_key(a) for a in v.args))
    if isinstance(v, Bag):
        return (2, tuple(sorted((value_key(x), n) for x, n in v._counts.items())))
    raise MalformedTermError(f"not a data value: {type(v).__name__}")


def sorted_elements(b: Bag) -> List[Value]:
    """Elements in canonical order, repeated by multiplicity."""
    out: List[Value] = []
    for v in sorted(b._counts, key=value_key):
        out.extend([v] * b._counts[v])
    return out


# Convenient constructors.

TRUE = Constructed("True")
FALSE = Constructed("False")


def int_v(n: int) -> Constant:
    return Constant("int", int(n))


def float_v(x: float) -> Constant:
    return Constant("float", float(x))


def str_v(s: str) -> Constant:
    return Constant("string", s)


def bool_v(b: bool) -> Constructed:
    return TRUE if b else FALSE


def tuple_v(*parts: Value) -> Constructed:
    return Constructed("Tuple", parts)


def const(py) -> Value:
    """Wrap a plain Python int, float, bool or str."""
    if isinstance(py, bool):
        return bool_v(py)
    if isinstance(py, int):
        return int_v(py)
    if isinstance(py, float):
        return float_v(py)
    if isinstance(py, str):
        return str_v(py)
    raise MalformedTermError(f"cannot wrap {type(py).__name__} as a value")


def pair_parts(v: Value) -> Tuple[Value, Value]:
    """Split a two-place Tuple into key and value."""
    if isinstance(v, Constructed) and v.name == "Tuple" and len(v.args) == 2:
        return v.args[0], v.args[1]
    raise MalformedTermError(f"expected a key-value pair, got {format_value(v)}")


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}


def quote_string(s: str) -> str:
    return '"' + "".join(_ESCAPES.get(ch, ch) for ch in s) + '"'


def format_value(v: Value) -> str:
    """Canonical text for a value. Bags print sorted, e.g. {1, 1, 2}."""
    if isinstance(v, Constant):
        if v.kind == "string":
            return quote_string(v.payload)
        return repr(v.payload)
    if isinstance(v, Constructed):
        if not v.args:
            return v.name
        body = ", ".join(format_value(a) for a in v.args)
        if v.name == "Tuple" and len(v.args) >= 2:
            return f"({body})"
        return f"{v.name}({body})"
    if isinstance(v, Bag):
        return "{" + ", ".join(format_value(x) for x in sorted_elements(v)) + "}"
    raise MalformedTermError(f"not a data value: {type(v).__name__}")


# Patterns and matching.


class Pattern:
    __slots__ = ()


class PVar(Pattern):
    """Binds the whole matched value to a name."""

    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    def __eq__(self, other):
        return isinstance(other, PVar) and self.name == other.name

    def __hash__(self):
        return hash(("pvar", self.name))

    def __repr__(self):
        return self.name


class PCons(Pattern):
    """Matches one constructor and destructures its arguments."""

    __slots__ = ("name", "args")

    def __init__(self, name: str, args: Iterable[Pattern] = ()):
        self.name = name
        self.args = tuple(args)
        seen = set()
        for var in pattern_vars(self):
            if var in seen:
                raise PatternError(f"pattern binds {var!r} more than once")
            seen.add(var)

    def __eq__(self, other):
        return (
            isinstance(other, PCons)
            and self.name == other.name
            and self.args == other.args
        )

    def __hash__(self):
        return hash(("pcons", self.name, self.args))

    def __repr__(self):
        if not self.args:
            return self.name
        return f"{self.name}({', '.join(map(repr, self.args))})"


def pattern_vars(p: Pattern) -> List[str]:
    """Variables bound by a pattern, left to right."""
    if isinstance(p, PVar):
        return [p.name]
    out: List[str] = []
    for sub in p.args:
        out.extend(pattern_vars(sub))
    return out


def ptuple(*parts: Pattern) -> PCons:
    return PCons("Tuple", parts)


class _NoMatch:
    __slots__ = ()

    def __repr__(self):
        return "<no match>"

    def __bool__(self):
        return False


NO_MATCH = _NoMatch()


def merge_bindings(a, b):
    """Union of two binding sets. A failed side absorbs the union."""
    if a is NO_MATCH or b is NO_MATCH:
        return NO_MATCH
    for name in b:
        if name in a:
            raise PatternError(f"conflicting bindings for {name!r}")
    merged = dict(a)
    merged.update(b)
    return merged


def pattern_match(value: Value, pattern: Pattern):
    """Match a value against a pattern.

    Returns a dict of bindings, or NO_MATCH when the value is built from
    a different constructor. A same-named constructor with a different
    arity is a malformed term, not a failed match: it means the term
    escaped typechecking.
    """
    if isinstance(pattern, PVar):
        return {pattern.name: value}
    if not isinstance(value, Constructed):
        raise MalformedTermError(
            f"constructor pattern {pattern!r} cannot inspect {format_value(value)}"
        )
    if value.name != pattern.name:
        return NO_MATCH
    if len(value.args) != len(pattern.args):
        raise MalformedTermError(
            f"constructor {value.name} has arity {len(value.args)}, "
            f"pattern expects {len(pattern.args)}"
        )
    bindings: dict = {}
    for arg, sub in zip(value.args, pattern.args):
        found = pattern_match(arg, sub)
        bindings = merge_bindings(bindings, found)
        if bindings is NO_MATCH:
            return NO_MATCH
    return bindings
