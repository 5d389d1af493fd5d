"""Depth-limited type-directed enumeration.

Programs are generated top-down: a hole of type ``T`` is filled by every
candidate (DSL entry, input variable, or a reused expression) that can
produce ``T`` after ``k`` arguments, for every such ``k``; the ``k`` new holes
are then filled left to right with the unifier threaded through.

Two budgets are supported:

``tree``
    :func:`synth.lang.depth` -- one level per call spine.
``size``
    :func:`synth.lang.size` -- one unit per inserted candidate.

Candidate lists for ground hole types are memoised, so equal subterms inside
one enumeration are shared objects.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .lang import App, Dsl, Input, Prim, Reuse, Term, apply_spine
from .types import Fresh, Type, apply, arg_suffixes, free_vars, is_ground, params_of, unify

METRICS = ("tree", "size")


@dataclass(frozen=True)
class Candidate:
    head: Term
    ty: Type


def dsl_candidates(dsl: Dsl, input_types: Sequence[Type], reuse: Sequence[tuple[Term, Type]] = ()) -> list[Candidate]:
    """DSL entries in declaration order, then inputs, then reuse entries."""
    out = [Candidate(Prim(e.name), e.ty) for e in dsl]
    out += [Candidate(Input(i), ty) for i, ty in enumerate(input_types)]
    out += [Candidate(Reuse(expr), ty) for expr, ty in reuse]
    return out


def _min_cost(k: int, metric: str) -> int:
    if metric == "size":
        return 1 + k
    return 1 if k == 0 else 2


class Enumerator:
    """Enumerates complete terms over a fixed candidate list and metric."""

    def __init__(self, candidates: Sequence[Candidate], metric: str = "tree", fresh: Optional[Fresh] = None):
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}")
        self.candidates = list(candidates)
        self.metric = metric
        self._memo: dict = {}
        self._count_memo: dict = {}
        self._seq_memo: dict = {}
        top = 0
        for c in self.candidates:
            top = max([top] + [v + 1 for v in free_vars(c.ty)])
        self._fresh = fresh if fresh is not None else Fresh(10**6 + top)
        self._heads = [(c.head, c.ty) for c in self.candidates]

    # -- ground hole types (memoised) ------------------------------------

    def _expansions(self, ty: Type, budget: int):
        """(head, params, subst) for every candidate/arity that can yield ``ty``."""
        for head, cty in self._heads:
            inst = self._fresh.instantiate(cty)
            ps = params_of(inst)
            for k, suffix in arg_suffixes(inst):
                if _min_cost(k, self.metric) > budget:
                    break
                s = unify(suffix, ty)
                if s is None:
                    continue
                yield head, [apply(s, p) for p in ps[:k]], s

    def terms(self, ty: Type, budget: int) -> list:
        """All ``(term, cost)`` of ground type ``ty`` with cost <= budget, in stream order."""
        key = (ty, budget)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        out = []
        if budget >= 1:
            for head, params, s in self._expansions(ty, budget):
                if not params:
                    out.append((head, 1))
                elif all(is_ground(p) for p in params):
                    out.extend(self._ground_args(head, params, budget))
                else:
                    for args, _, cost in self._gen_args(params, budget - 1, s):
                        out.append((apply_spine(head, args), cost))
        self._memo[key] = out
        return out

    def _ground_args(self, head: Term, params: list, budget: int):
        if self.metric == "tree":
            lists = [self.terms(p, budget - 1) for p in params]
            if any(not xs for xs in lists):
                return
            for combo in itertools.product(*lists):
                t = head
                c = 0
                for a, ac in combo:
                    t = App(t, a)
                    c = ac if ac > c else c
                yield t, 1 + c
        else:
            for args, used in self._size_seq(params, 0, budget - 1):
                yield apply_spine(head, args), 1 + used

    def _size_seq(self, params: list, i: int, budget: int):
        if i == len(params):
            yield (), 0
            return
        rest = len(params) - i - 1
        for a, ac in self.terms(params[i], budget - rest):
            for tail, used in self._size_seq(params, i + 1, budget - ac):
                yield (a,) + tail, ac + used

    # -- general case: threads a substitution ----------------------------

    def _gen(self, ty: Type, budget: int, s: dict):
        ty_s = apply(s, ty)
        if is_ground(ty_s):
            for t, c in self.terms(ty_s, budget):
                yield t, s, c
            return
        if budget < 1:
            return
        for head, cty in self._heads:
            inst = self._fresh.instantiate(cty)
            ps = params_of(inst)
            for k, suffix in arg_suffixes(inst):
                if _min_cost(k, self.metric) > budget:
                    break
                s1 = unify(suffix, ty_s, s)
                if s1 is None:
                    continue
                if k == 0:
                    yield head, s1, 1
                    continue
                for args, s2, cost in self._gen_args(ps[:k], budget - 1, s1):
                    yield apply_spine(head, args), s2, cost

    def _gen_args(self, params: list, budget: int, s: dict):
        """Argument tuples for ``params`` within ``budget``; yields (args, subst, head-inclusive cost)."""
        n = len(params)

        def rec(i: int, s: dict, rem: int, acc: tuple, agg: int):
            if i == n:
                yield acc, s, 1 + agg
                return
            if self.metric == "tree":
                b = budget
            else:
                b = rem - (n - i - 1)
            if b < 1:
                return
            for a, s2, ac in self._gen(params[i], b, s):
                if self.metric == "tree":
                    yield from rec(i + 1, s2, rem, acc + (a,), max(agg, ac))
                else:
                    yield from rec(i + 1, s2, rem - ac, acc + (a,), agg + ac)

        yield from rec(0, s, budget, (), 0)

    def generate(self, ty: Type, budget: int) -> Iterator[Term]:
        if budget < 1:
            return
        if is_ground(ty):
            for t, _ in self.terms(ty, budget):
                yield t
            return
        for t, _, _ in self._gen(ty, budget, {}):
            yield t

    # -- counting ---------------------------------------------------------

    def count(self, ty: Type, budget: int) -> int:
        if budget < 1:
            return 0
        if not is_ground(ty):
            return sum(1 for _ in self.generate(ty, budget))
        key = (ty, budget)
        hit = self._count_memo.get(key)
        if hit is not None:
            return hit
        total = 0
        for head, params, s in self._expansions(ty, budget):
            if not params:
                total += 1
            elif all(is_ground(p) for p in params):
                if self.metric == "tree":
                    total += math.prod(self.count(p, budget - 1) for p in params)
                else:
                    total += self._count_seq(tuple(params), budget - 1)
            else:
                total += sum(1 for _ in self._gen_args(params, budget - 1, s))
        self._count_memo[key] = total
        return total

    def _exact(self, ty: Type, cost: int) -> int:
        return self.count(ty, cost) - self.count(ty, cost - 1)

    def _count_seq(self, params: tuple, budget: int) -> int:
        if not params:
            return 1
        key = (params, budget)
        hit = self._seq_memo.get(key)
        if hit is not None:
            return hit
        rest = len(params) - 1
        total = 0
        for c in range(1, budget - rest + 1):
            e = self._exact(params[0], c)
            if e:
                total += e * self._count_seq(params[1:], budget - c)
        self._seq_memo[key] = total
        return total


def enumerate_programs(
    dsl: Dsl, target: Type, d: int, input_types: Sequence[Type] = (), metric: str = "tree"
) -> Iterator[Term]:
    """Every complete well-typed program of type ``target`` within budget ``d``."""
    return Enumerator(dsl_candidates(dsl, input_types), metric).generate(target, d)


def count_programs(dsl: Dsl, target: Type, d: int, input_types: Sequence[Type] = (), metric: str = "tree") -> int:
    return Enumerator(dsl_candidates(dsl, input_types), metric).count(target, d)


# ----------------------------------------------------------------------------
# Observational equivalence


def _signature_of(values: np.ndarray) -> tuple:
    return tuple(None if v != v else float(f"{v:.12g}") for v in values.tolist())


def observational_signature(t: Term, probes, dsl: Dsl) -> tuple:
    """Outputs on each probe, rounded to 12 significant digits; ``None`` marks non-finite."""
    from .evaluate import program_outputs

    return _signature_of(program_outputs(t, dsl, np.asarray(probes, dtype=np.float64)))


class EquivalenceIndex:
    """Signatures of every program within a budget, for repeated equivalence queries."""

    def __init__(self, dsl: Dsl, input_types: Sequence[Type], d: int, probes, metric: str = "tree"):
        from .kernels import Compiler, backend

        self.dsl = dsl
        self.input_types = list(input_types)
        self.d = d
        self.metric = metric
        self.probes = np.ascontiguousarray(probes, dtype=np.float64)
        self._comp = Compiler(dsl)
        self._backend = backend()
        self._enum = Enumerator(dsl_candidates(dsl, input_types), metric)
        self._by_type: dict = {}

    def _signature(self, t: Term) -> tuple:
        code = np.asarray(self._comp.compile(t), dtype=np.int64)
        return _signature_of(self._backend.run(code, self._comp.consts_array(), np.zeros((0, 0)), self.probes))

    def signatures(self, ty: Type) -> set:
        hit = self._by_type.get(ty)
        if hit is None:
            hit = {self._signature(p) for p in self._enum.generate(ty, self.d)}
            self._by_type[ty] = hit
        return hit

    def has_equivalent(self, t: Term, ty: Optional[Type] = None) -> bool:
        if ty is None:
            from .infer import infer

            ty = infer(t, self.dsl, self.input_types)
        return self._signature(t) in self.signatures(ty)


def has_equivalent_within_depth(
    t: Term, dsl: Dsl, d: int, probes, input_types: Sequence[Type], metric: str = "tree"
) -> bool:
    return EquivalenceIndex(dsl, input_types, d, probes, metric).has_equivalent(t)
