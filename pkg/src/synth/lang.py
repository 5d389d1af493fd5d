"""Applicative terms over a typed DSL.

A program is a curried application tree whose leaves are DSL primitives,
input variables (``x1``..``xN`` in text, 0-based internally) or typed holes.
Terms are immutable and hash in O(1); :func:`edit` rebuilds only the nodes on
the edited path, so untouched subtrees are shared with the original.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Iterable, Iterator, Optional, Sequence, Union

from .types import Type, arg_suffixes, format_type, parse_type

Path = tuple  # tuple[int, ...]; 0 = function, 1 = argument


class ParseError(ValueError):
    pass


class PathError(LookupError):
    pass


class Term:
    __slots__ = ("_hash",)

    def __repr__(self) -> str:
        return print_program(self, holes=True)

    def __hash__(self) -> int:
        return self._hash


class Prim(Term):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("P", name))

    __hash__ = Term.__hash__

    def __eq__(self, other) -> bool:
        return self is other or (type(other) is Prim and other.name == self.name)


class Input(Term):
    __slots__ = ("index",)

    def __init__(self, index: int):
        self.index = index
        self._hash = hash(("I", index))

    __hash__ = Term.__hash__

    def __eq__(self, other) -> bool:
        return self is other or (type(other) is Input and other.index == self.index)


class Hole(Term):
    __slots__ = ("ty",)

    def __init__(self, ty: Type):
        self.ty = ty
        self._hash = hash(("H", ty))

    __hash__ = Term.__hash__

    def __eq__(self, other) -> bool:
        return self is other or (type(other) is Hole and other.ty == self.ty)


class Reuse(Term):
    """Marks the expression being edited when it is offered as a candidate.

    It costs 1 under every depth metric; :func:`inline_reuse` replaces it by
    the wrapped expression.
    """

    __slots__ = ("expr",)

    def __init__(self, expr: Term):
        self.expr = expr
        self._hash = hash(("R", expr._hash))

    __hash__ = Term.__hash__

    def __eq__(self, other) -> bool:
        return self is other or (type(other) is Reuse and other.expr == self.expr)


class App(Term):
    __slots__ = ("func", "arg")

    def __init__(self, func: Term, arg: Term):
        self.func = func
        self.arg = arg
        self._hash = hash((func._hash, arg._hash))

    __hash__ = Term.__hash__

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if type(other) is not App or other._hash != self._hash:
            return False
        return self.func == other.func and self.arg == other.arg


def apply_spine(head: Term, args: Iterable[Term]) -> Term:
    for a in args:
        head = App(head, a)
    return head


def spine(t: Term) -> tuple[Term, list[Term]]:
    """Split ``f a1 .. ak`` into ``(f, [a1, .., ak])``."""
    args = []
    while type(t) is App:
        args.append(t.arg)
        t = t.func
    args.reverse()
    return t, args


# ----------------------------------------------------------------------------
# DSL registry

BUILTIN_ARITY = {
    "if": 3,
    "gt": 2,
    "add": 2,
    "sub": 2,
    "mul": 2,
    "and": 2,
    "xor": 2,
    "not": 1,
    "neg": 1,
    "sqr": 1,
    "sign": 1,
    "cos": 1,
    "exp": 1,
    "id": 1,
}


@dataclass(frozen=True)
class DslEntry:
    name: str
    ty: Type
    impl: str
    weight: float = 1.0

    @property
    def is_const(self) -> bool:
        return self.impl.startswith("const:")

    @property
    def builtin(self) -> Optional[str]:
        return self.impl[len("builtin:"):] if self.impl.startswith("builtin:") else None

    @property
    def value(self) -> Union[float, bool]:
        raw = self.impl[len("const:"):]
        if raw in ("true", "false"):
            return raw == "true"
        return float(raw)

    @property
    def arity(self) -> int:
        return len(arg_suffixes(self.ty)) - 1


@dataclass(frozen=True)
class Dsl:
    entries: tuple[DslEntry, ...]
    _by_name: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        by_name = {}
        for e in self.entries:
            if e.name in by_name:
                raise ValueError(f"duplicate DSL name {e.name!r}")
            if re.fullmatch(r"x\d+", e.name) or e.name.startswith("?") or not e.name:
                raise ValueError(f"reserved DSL name {e.name!r}")
            if any(c in e.name for c in "() \t\n"):
                raise ValueError(f"DSL name {e.name!r} contains a delimiter")
            if e.weight <= 0 or not math.isfinite(e.weight):
                raise ValueError(f"weight of {e.name!r} must be positive")
            b = e.builtin
            if b is not None:
                if b not in BUILTIN_ARITY:
                    raise ValueError(f"unknown builtin {b!r} for {e.name!r}")
                if BUILTIN_ARITY[b] != e.arity:
                    raise ValueError(f"{e.name!r}: type arity {e.arity} != builtin arity {BUILTIN_ARITY[b]}")
            elif e.is_const:
                e.value  # noqa: B018  (validates the literal)
            else:
                raise ValueError(f"bad impl {e.impl!r} for {e.name!r}")
            by_name[e.name] = e
        object.__setattr__(self, "_by_name", by_name)

    def __getitem__(self, name: str) -> DslEntry:
        return self._by_name[name]

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __iter__(self) -> Iterator[DslEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def with_weights(self, weights: dict) -> "Dsl":
        return Dsl(tuple(DslEntry(e.name, e.ty, e.impl, weights.get(e.name, e.weight)) for e in self.entries))

    @classmethod
    def from_dict(cls, data: dict) -> "Dsl":
        try:
            entries = tuple(
                DslEntry(str(e["name"]), parse_type(e["type"]), str(e["impl"]), float(e.get("weight", 1.0)))
                for e in data["entries"]
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed DSL description: {exc}") from exc
        return cls(entries)

    @classmethod
    def load(cls, path) -> "Dsl":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "entries": [
                {"name": e.name, "type": format_type(e.ty), "impl": e.impl, "weight": e.weight}
                for e in self.entries
            ]
        }


# ----------------------------------------------------------------------------
# Text format

_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break  # trailing whitespace
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


def parse_program(text: str, dsl: Dsl, input_arity: int) -> Term:
    """Parse a curried S-expression such as ``((gt x1) 0.6)``.

    A parenthesised sequence ``(f a b)`` and a bare top-level sequence
    ``f a b`` both denote left-nested application.
    """
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty program")

    def atom(tok: str) -> Term:
        if tok in dsl:
            return Prim(tok)
        m = re.fullmatch(r"x(\d+)", tok)
        if m:
            idx = int(m.group(1)) - 1
            if not 0 <= idx < input_arity:
                raise ParseError(f"unbound input variable {tok!r} (arity {input_arity})")
            return Input(idx)
        raise ParseError(f"unknown identifier {tok!r}")

    def seq(i: int, closing: bool) -> tuple[Term, int]:
        items = []
        while i < len(tokens):
            tok = tokens[i]
            if tok == ")":
                if not closing:
                    raise ParseError("unbalanced ')'")
                break
            if tok == "(":
                sub, i = seq(i + 1, True)
                if i >= len(tokens):
                    raise ParseError("unbalanced '('")
                i += 1  # consume ')'
                items.append(sub)
            else:
                items.append(atom(tok))
                i += 1
        if not items:
            raise ParseError("empty application")
        return apply_spine(items[0], items[1:]), i

    term, i = seq(0, False)
    if i != len(tokens):
        raise ParseError("trailing tokens")
    return term


def print_program(t: Term, holes: bool = False) -> str:
    if type(t) is App:
        return f"({print_program(t.func, holes)} {print_program(t.arg, holes)})"
    if type(t) is Prim:
        return t.name
    if type(t) is Input:
        return f"x{t.index + 1}"
    if type(t) is Reuse:
        if not holes:
            raise ValueError("reuse marker in a program that should be complete")
        return f"<{print_program(t.expr, holes)}>"
    if type(t) is Hole:
        if not holes:
            raise ValueError("cannot print an incomplete program")
        s = format_type(t.ty)
        return f"?:({s})" if " " in s else f"?:{s}"
    raise TypeError(f"not a term: {t!r}")


def load_program(path, dsl: Dsl, input_arity: int) -> Term:
    return parse_program(FsPath(path).read_text(encoding="utf-8"), dsl, input_arity)


def save_program(path, t: Term) -> None:
    FsPath(path).write_text(print_program(t) + "\n", encoding="utf-8")


# ----------------------------------------------------------------------------
# Paths, locations and edits


@dataclass(frozen=True)
class Location:
    """One or more pairwise disjoint paths edited simultaneously."""

    paths: tuple

    def __post_init__(self):
        paths = tuple(tuple(p) for p in self.paths)
        if not paths:
            raise ValueError("a location needs at least one path")
        for a, b in itertools.combinations(paths, 2):
            if is_prefix(a, b) or is_prefix(b, a):
                raise ValueError(f"paths {a} and {b} overlap")
        object.__setattr__(self, "paths", paths)

    def __len__(self) -> int:
        return len(self.paths)


def is_prefix(a: Sequence[int], b: Sequence[int]) -> bool:
    return len(a) <= len(b) and tuple(b[: len(a)]) == tuple(a)


def expr_at(t: Term, path: Sequence[int]) -> Term:
    node = t
    for i, step in enumerate(path):
        if type(node) is not App or step not in (0, 1):
            raise PathError(f"invalid path {tuple(path)} (fails at step {i})")
        node = node.func if step == 0 else node.arg
    return node


def _replace(t: Term, path: Sequence[int], new: Term, i: int = 0) -> Term:
    if i == len(path):
        return new
    if type(t) is not App or path[i] not in (0, 1):
        raise PathError(f"invalid path {tuple(path)} (fails at step {i})")
    if path[i] == 0:
        return App(_replace(t.func, path, new, i + 1), t.arg)
    return App(t.func, _replace(t.arg, path, new, i + 1))


def edit(t: Term, loc: Union[Location, Sequence[Path]], replacements: Sequence[Term]) -> Term:
    paths = loc.paths if isinstance(loc, Location) else tuple(tuple(p) for p in loc)
    if len(paths) != len(replacements):
        raise ValueError(f"{len(paths)} paths but {len(replacements)} replacements")
    if not isinstance(loc, Location):
        Location(paths)  # disjointness check
    for p, r in zip(paths, replacements):
        t = _replace(t, p, r)
    return t


def all_paths(t: Term) -> list[Path]:
    """Every path of ``t`` in preorder (node, function subtree, argument subtree)."""
    out: list[Path] = []
    stack = [(t, ())]
    while stack:
        node, p = stack.pop()
        out.append(p)
        if type(node) is App:
            stack.append((node.arg, p + (1,)))
            stack.append((node.func, p + (0,)))
    return out


def locations(t: Term, n: int = 1) -> Iterator[Location]:
    if n < 1:
        raise ValueError("n must be >= 1")
    paths = all_paths(t)
    for p in paths:
        yield Location((p,))
    for size in range(2, n + 1):
        for combo in itertools.combinations(paths, size):
            if all(not is_prefix(a, b) and not is_prefix(b, a) for a, b in itertools.combinations(combo, 2)):
                yield Location(combo)


# ----------------------------------------------------------------------------
# Metrics


def depth(t: Term) -> int:
    """Tree depth with a whole call spine counted as one level."""
    head, args = spine(t)
    if not args:
        return 1
    return 1 + max(depth(a) for a in args)


def size(t: Term) -> int:
    """Number of leaves (primitives, inputs, holes, reuse markers)."""
    if type(t) is App:
        return size(t.func) + size(t.arg)
    return 1


def token_count(t: Term) -> int:
    if type(t) is App:
        return token_count(t.func) + token_count(t.arg)
    if type(t) is Reuse:
        return token_count(t.expr)
    return 1


METRICS = {"tree": depth, "size": size}


def node_count(t: Term) -> int:
    if type(t) is App:
        return 1 + node_count(t.func) + node_count(t.arg)
    return 1


def is_complete(t: Term) -> bool:
    if type(t) is App:
        return is_complete(t.func) and is_complete(t.arg)
    return type(t) is not Hole and type(t) is not Reuse


def inline_reuse(t: Term) -> Term:
    if type(t) is Reuse:
        return t.expr
    if type(t) is App:
        f = inline_reuse(t.func)
        a = inline_reuse(t.arg)
        if f is t.func and a is t.arg:
            return t
        return App(f, a)
    return t


def holes(t: Term) -> list[tuple[Path, Hole]]:
    return [(p, expr_at(t, p)) for p in all_paths(t) if type(expr_at(t, p)) is Hole]
