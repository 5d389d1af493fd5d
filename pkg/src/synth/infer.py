"""Type inference for applicative terms and typing of edit locations."""

from __future__ import annotations

from typing import Optional, Sequence

from .lang import App, Dsl, Hole, Input, Location, Prim, Reuse, Term, edit
from .types import Arrow, Fresh, Type, Var, apply, free_vars, is_ground, unify


class InferenceError(TypeError):
    def __init__(self, message: str, path: tuple = ()):
        super().__init__(f"{message} at path {list(path)}")
        self.path = tuple(path)


def _hole_vars(t: Term, acc: set) -> set:
    if type(t) is App:
        _hole_vars(t.func, acc)
        _hole_vars(t.arg, acc)
    elif type(t) is Hole:
        acc |= free_vars(t.ty)
    return acc


class _Infer:
    def __init__(self, dsl: Dsl, input_types: Sequence[Type], start: int):
        self.dsl = dsl
        self.input_types = list(input_types)
        self.fresh = Fresh(start)
        self.subst: dict = {}

    def run(self, t: Term, path: tuple) -> Type:
        tt = type(t)
        if tt is Prim:
            if t.name not in self.dsl:
                raise InferenceError(f"unknown primitive {t.name!r}", path)
            return self.fresh.instantiate(self.dsl[t.name].ty)
        if tt is Input:
            if not 0 <= t.index < len(self.input_types):
                raise InferenceError(f"input x{t.index + 1} out of range", path)
            return self.input_types[t.index]
        if tt is Hole:
            return t.ty
        if tt is Reuse:
            return self.run(t.expr, path)
        if tt is App:
            f = self.run(t.func, path + (0,))
            a = self.run(t.arg, path + (1,))
            res = self.fresh.var()
            s = unify(f, Arrow(a, res), self.subst)
            if s is None:
                fs = apply(self.subst, f)
                at = apply(self.subst, a)
                raise InferenceError(f"cannot apply {fs} to argument of type {at}", path + (1,))
            self.subst = s
            return apply(s, res)
        raise InferenceError(f"not a term: {t!r}", path)


def _episode(t: Term, dsl: Dsl, input_types: Sequence[Type]) -> tuple[Type, dict]:
    vs = _hole_vars(t, set())
    for ty in input_types:
        vs |= free_vars(ty)
    start = max(vs) + 1 if vs else 0
    inf = _Infer(dsl, input_types, start)
    ty = inf.run(t, ())
    return apply(inf.subst, ty), inf.subst


def infer(t: Term, dsl: Dsl, input_types: Sequence[Type]) -> Type:
    """Principal type of ``t``; raises :class:`InferenceError` with the offending path."""
    return _episode(t, dsl, input_types)[0]


def try_infer(t: Term, dsl: Dsl, input_types: Sequence[Type]) -> Optional[Type]:
    try:
        return infer(t, dsl, input_types)
    except InferenceError:
        return None


def type_at(t: Term, loc: Location, dsl: Dsl, input_types: Sequence[Type]) -> list[Type]:
    """Most general type a replacement must have at each path of ``loc``.

    The top-level type of ``t`` is pinned, so replacements cannot change it.
    """
    top = infer(t, dsl, input_types)
    used = _hole_vars(t, set())
    for x in input_types:
        used |= free_vars(x)
    base = 1 + max(used, default=-1)
    hole_vars = [Var(base + i) for i in range(len(loc.paths))]
    probe = edit(t, loc, [Hole(v) for v in hole_vars])
    ty, subst = _episode(probe, dsl, input_types)
    pin = unify(ty, top, subst) if is_ground(top) else subst
    if pin is None:
        raise InferenceError("replacement context cannot keep the top-level type", ())
    return [apply(pin, v) for v in hole_vars]
