"""Monotypes, substitutions and first-order unification.

Types are immutable values: base constructors (``Float``, ``Bool``), numbered
variables (``t0``, ``t1``, ...) and right-associative arrows.  A substitution
is a plain ``dict`` mapping variable ids to types; every substitution built by
:func:`unify` is idempotent.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional

Subst = dict  # dict[int, Type]


class Type:
    __slots__ = ()

    def __str__(self) -> str:
        return format_type(self)


@dataclass(frozen=True, repr=False)
class Con(Type):
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True, repr=False)
class Var(Type):
    id: int

    def __repr__(self) -> str:
        return f"t{self.id}"


@dataclass(frozen=True, repr=False)
class Arrow(Type):
    param: Type
    result: Type

    def __repr__(self) -> str:
        return format_type(self)


FLOAT = Con("Float")
BOOL = Con("Bool")


def arrow(*types: Type) -> Type:
    """``arrow(a, b, c)`` is ``a -> b -> c``."""
    result = types[-1]
    for t in reversed(types[:-1]):
        result = Arrow(t, result)
    return result


def format_type(t: Type) -> str:
    if isinstance(t, Arrow):
        left = format_type(t.param)
        if isinstance(t.param, Arrow):
            left = f"({left})"
        return f"{left} -> {format_type(t.result)}"
    return repr(t)


_TYPE_TOKEN = re.compile(r"\s*(->|\(|\)|[A-Za-z_][A-Za-z0-9_]*)")


def parse_type(text: str) -> Type:
    """Parse ``Float -> t0 -> Bool``; lowercase ``t<n>`` names are variables."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TYPE_TOKEN.match(text, pos)
        if m is None:
            raise ValueError(f"bad type syntax at {text[pos:]!r}")
        tokens.append(m.group(1))
        pos = m.end()
    if not tokens:
        raise ValueError("empty type")

    def parse_arrow(i: int) -> tuple[Type, int]:
        left, i = parse_atom(i)
        if i < len(tokens) and tokens[i] == "->":
            right, i = parse_arrow(i + 1)
            return Arrow(left, right), i
        return left, i

    def parse_atom(i: int) -> tuple[Type, int]:
        if i >= len(tokens):
            raise ValueError(f"unexpected end of type {text!r}")
        tok = tokens[i]
        if tok == "(":
            inner, i = parse_arrow(i + 1)
            if i >= len(tokens) or tokens[i] != ")":
                raise ValueError(f"unbalanced parentheses in type {text!r}")
            return inner, i + 1
        if tok in ("->", ")"):
            raise ValueError(f"unexpected {tok!r} in type {text!r}")
        m = re.fullmatch(r"t(\d+)", tok)
        if m:
            return Var(int(m.group(1))), i + 1
        return Con(tok), i + 1

    t, i = parse_arrow(0)
    if i != len(tokens):
        raise ValueError(f"trailing tokens in type {text!r}")
    return t


def free_vars(t: Type) -> set[int]:
    out: set[int] = set()
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, Var):
            out.add(t.id)
        elif isinstance(t, Arrow):
            stack.append(t.param)
            stack.append(t.result)
    return out


def is_ground(t: Type) -> bool:
    while isinstance(t, Arrow):
        if not is_ground(t.param):
            return False
        t = t.result
    return not isinstance(t, Var)


def occurs(var: int, t: Type) -> bool:
    if isinstance(t, Var):
        return t.id == var
    if isinstance(t, Arrow):
        return occurs(var, t.param) or occurs(var, t.result)
    return False


def apply(s: Mapping[int, Type], t: Type) -> Type:
    if not s:
        return t
    if isinstance(t, Var):
        return s.get(t.id, t)
    if isinstance(t, Arrow):
        p = apply(s, t.param)
        r = apply(s, t.result)
        if p is t.param and r is t.result:
            return t
        return Arrow(p, r)
    return t


def compose(outer: Mapping[int, Type], inner: Mapping[int, Type]) -> Subst:
    """Substitution equivalent to applying ``inner`` then ``outer``."""
    out = {v: apply(outer, t) for v, t in inner.items()}
    for v, t in outer.items():
        out.setdefault(v, t)
    return out


def _bind(s: Subst, var: int, t: Type) -> bool:
    if isinstance(t, Var) and t.id == var:
        return True
    if occurs(var, t):
        return False
    single = {var: t}
    for k in s:
        s[k] = apply(single, s[k])
    s[var] = t
    return True


def unify(a: Type, b: Type, s: Optional[Mapping[int, Type]] = None) -> Optional[Subst]:
    """Most general unifier of ``a`` and ``b`` extending ``s``.

    Returns a fresh idempotent substitution, or ``None`` when the types clash
    or the occurs check fails.  ``s`` is never mutated.
    """
    out: Subst = dict(s) if s else {}
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x = apply(out, x)
        y = apply(out, y)
        if x == y:
            continue
        if isinstance(x, Var):
            if not _bind(out, x.id, y):
                return None
        elif isinstance(y, Var):
            if not _bind(out, y.id, x):
                return None
        elif isinstance(x, Arrow) and isinstance(y, Arrow):
            stack.append((x.result, y.result))
            stack.append((x.param, y.param))
        else:
            return None
    return out


def params_of(t: Type) -> list[Type]:
    out = []
    while isinstance(t, Arrow):
        out.append(t.param)
        t = t.result
    return out


def yield_type(t: Type) -> Type:
    while isinstance(t, Arrow):
        t = t.result
    return t


def arg_suffixes(t: Type) -> list[tuple[int, Type]]:
    """Every type ``t`` can produce after applying ``k`` arguments.

    >>> arg_suffixes(parse_type("Float -> Float -> Bool"))
    [(0, Float -> Float -> Bool), (1, Float -> Bool), (2, Bool)]
    """
    out = [(0, t)]
    k = 0
    while isinstance(t, Arrow):
        t = t.result
        k += 1
        out.append((k, t))
    return out


class Fresh:
    """Counter handing out type variables for one inference episode."""

    def __init__(self, start: int = 0):
        self._it = itertools.count(start)

    def var(self) -> Var:
        return Var(next(self._it))

    def instantiate(self, t: Type) -> Type:
        vs = free_vars(t)
        if not vs:
            return t
        return apply({v: self.var() for v in sorted(vs)}, t)


def canonical(t: Type) -> Type:
    """Rename variables to t0, t1, ... in order of first appearance."""
    mapping: dict[int, Type] = {}

    def walk(x: Type) -> Iterator[int]:
        if isinstance(x, Var):
            yield x.id
        elif isinstance(x, Arrow):
            yield from walk(x.param)
            yield from walk(x.result)

    for v in walk(t):
        if v not in mapping:
            mapping[v] = Var(len(mapping))
    return apply(mapping, t)
