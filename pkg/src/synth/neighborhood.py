"""Typed neighborhoods and deterministic best-improvement local search.

A neighbor of ``P`` replaces the subterms at one :class:`Location` with freshly
enumerated terms of the same types.  The replaced expression itself is offered
as an extra candidate of cost 1, so a replacement can wrap or reuse it.

Scoring goes through the bytecode kernels.  Subtrees of ``P`` that a neighbor
leaves untouched are evaluated once per step and referenced through slots.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .enumeration import METRICS, Enumerator, dsl_candidates
from .evaluate import Dataset
from .infer import infer, type_at
from .kernels import LOSS_KINDS, CompileError, Compiler, backend
from .lang import (
    App,
    Dsl,
    Location,
    Reuse,
    Term,
    edit,
    expr_at,
    inline_reuse,
    locations,
    print_program,
    token_count,
)
from .types import FLOAT, Fresh, Type, free_vars, is_ground, unify

CHUNK = 512


@dataclass(frozen=True)
class SearchConfig:
    d: int = 4
    n: int = 1
    max_iterations: int = 10
    loss: str = "mse"
    parallelism: int = 1
    metric: str = "size"
    count_raw: bool = False
    semantic_dedup: bool = False

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"loss must be one of {sorted(LOSS_KINDS)}")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")


@dataclass
class IterationRecord:
    iteration: int
    loss: float
    evaluated: int
    raw: int
    tokens: int
    program: Term
    start: Optional[Term]
    wall: float


@dataclass
class SearchTrace:
    records: list[IterationRecord] = field(default_factory=list)

    @property
    def best(self) -> Optional[Term]:
        return self.records[-1].program if self.records else None

    @property
    def best_loss(self) -> float:
        return self.records[-1].loss if self.records else math.inf

    @property
    def losses(self) -> list[float]:
        return [r.loss for r in self.records]

    def __len__(self) -> int:
        return len(self.records)

    def to_csv(self, path, extra: Optional[dict] = None) -> None:
        """Columns ``iter,loss,evaluated,tokens,program`` (plus constant ``extra`` columns first)."""
        extra = extra or {}
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(list(extra) + ["iter", "loss", "evaluated", "tokens", "program"])
            for r in self.records:
                w.writerow(list(extra.values()) + [r.iteration, repr(r.loss), r.evaluated, r.tokens, print_program(r.program)])


# ----------------------------------------------------------------------------
# Neighborhood generation


def _input_types(dsl_arity: int) -> list[Type]:
    return [FLOAT] * dsl_arity


def _location_candidates(
    dsl: Dsl, P: Term, loc: Location, d: int, input_types: Sequence[Type], metric: str
) -> Iterator[tuple[Term, ...]]:
    """Replacement tuples for ``loc``; each path may reuse only its own expression."""
    hole_tys = type_at(P, loc, dsl, input_types)
    top = 0
    for ty in hole_tys:
        top = max([top] + [v + 1 for v in free_vars(ty)])
    fresh = Fresh(10**6 + top)
    enums = []
    for path, ty in zip(loc.paths, hole_tys):
        E = expr_at(P, path)
        # principal type of E: instantiating it freshly is always sound
        reuse_ty = ty if is_ground(ty) else infer(E, dsl, input_types)
        cands = dsl_candidates(dsl, input_types, [(E, reuse_ty)])
        enums.append(Enumerator(cands, metric, fresh))
    if all(is_ground(ty) for ty in hole_tys):
        if len(enums) == 1:
            for t, _ in enums[0].terms(hole_tys[0], d):
                yield (t,)
            return
        lists = [e.terms(ty, d) for e, ty in zip(enums, hole_tys)]

        def rec(i):
            if i == len(lists):
                yield ()
                return
            for t, _ in lists[i]:
                for rest in rec(i + 1):
                    yield (t,) + rest

        yield from rec(0)
        return

    def gen(i, s):
        if i == len(enums):
            yield ()
            return
        for t, s2, _ in enums[i]._gen(hole_tys[i], d, s):
            for rest in gen(i + 1, s2):
                yield (t,) + rest

    yield from gen(0, {})


def _inline(t: Term) -> Term:
    return t.expr if type(t) is Reuse else inline_reuse(t)


def neighborhood_at(
    dsl: Dsl,
    P: Term,
    loc: Location,
    d: int,
    input_types: Optional[Sequence[Type]] = None,
    metric: str = "size",
    inline: bool = True,
) -> Iterator[Term]:
    """Programs obtained from ``P`` by replacing each path of ``loc``.

    With ``inline`` (the default) reuse markers are expanded, so untouched
    subtrees of ``P`` are shared by identity with the yielded programs.
    """
    if input_types is None:
        input_types = []
    for repl in _location_candidates(dsl, P, loc, d, input_types, metric):
        if inline:
            repl = tuple(_inline(r) for r in repl)
        yield edit(P, loc, repl)


def full_neighborhood(
    dsl: Dsl, P: Term, cfg: SearchConfig, input_types: Optional[Sequence[Type]] = None
) -> Iterator[Term]:
    """Location-major union of :func:`neighborhood_at`; duplicates across locations are kept."""
    for loc in locations(P, cfg.n):
        yield from neighborhood_at(dsl, P, loc, cfg.d, input_types, cfg.metric)


# ----------------------------------------------------------------------------
# Scoring


class _Best:
    def __init__(self):
        self.key = (math.inf, math.inf, math.inf)
        self.program: Optional[Term] = None

    @property
    def loss(self) -> float:
        return self.key[0]

    def offer(self, loss: float, tokens: int, index: int, program: Term) -> None:
        key = (loss, tokens, index)
        if key < self.key:
            self.key, self.program = key, program


class Scorer:
    """Batched kernel scoring of complete programs against one dataset."""

    def __init__(self, dsl: Dsl, data: Dataset, loss: str, parallelism: int = 1):
        self.dsl = dsl
        self.data = data
        self.kind = LOSS_KINDS[loss]
        self.comp = Compiler(dsl)
        self.consts = self.comp.consts_array()
        self.kernel = backend()
        self.parallelism = parallelism
        self._pool = ThreadPoolExecutor(parallelism) if parallelism > 1 else None
        self.slots: dict = {}
        self.slot_values = np.zeros((0, 0))

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def precompute(self, P: Term) -> None:
        """Cache the value of every first-order subtree of ``P``."""
        slots: dict = {}
        rows = []
        empty = np.zeros((0, 0))

        def walk(t: Term) -> None:
            if type(t) is App:
                walk(t.func)
                walk(t.arg)
            try:
                code = self.comp.compile(t)
            except CompileError:
                return
            if id(t) not in slots:
                slots[id(t)] = len(rows)
                rows.append(self.kernel.run(np.asarray(code, dtype=np.int64), self.consts, empty, self.data.obs))

        walk(P)
        self.slots = slots
        self.slot_values = np.ascontiguousarray(np.vstack(rows)) if rows else np.zeros((0, 0))
        self._anchor = P

    def compile(self, t: Term) -> list[int]:
        return self.comp.compile(t, self.slots)

    def score_codes(self, codes: list, bound: float = math.inf) -> np.ndarray:
        if not codes:
            return np.zeros(0)
        chunks = [codes[i : i + CHUNK] for i in range(0, len(codes), CHUNK)]
        if self._pool is None or len(chunks) == 1:
            parts = [self._score_chunk(c, bound) for c in chunks]
        else:
            parts = list(self._pool.map(lambda c: self._score_chunk(c, bound), chunks))
        return np.concatenate(parts)

    def _score_chunk(self, codes: list, bound: float) -> np.ndarray:
        offsets = np.zeros(len(codes) + 1, dtype=np.int64)
        np.cumsum([len(c) for c in codes], out=offsets[1:])
        flat = np.fromiter((x for c in codes for x in c), dtype=np.int64, count=int(offsets[-1]))
        return self.kernel.score(flat, offsets, self.consts, self.slot_values, self.data.obs, self.data.actions, self.kind, bound)

    def loss(self, t: Term) -> float:
        return float(self.score_codes([self.comp.compile(t)])[0])


@dataclass
class StepResult:
    program: Term
    loss: float
    evaluated: int
    raw: int


def _scan(stream: Iterator[Term], scorer: Scorer, bound: float, semantic_dedup: bool) -> StepResult:
    """Score every unique program in ``stream``; lexicographic (loss, tokens, index) minimum wins."""
    seen: set = set()
    sigs: set = set()
    best = _Best()
    raw = 0
    batch: list = []
    codes: list = []
    index = 0
    empty = np.zeros((0, 0))

    def flush() -> None:
        losses = scorer.score_codes(codes, bound)
        for (i, prog), loss in zip(batch, losses.tolist()):
            if loss <= best.loss:
                best.offer(loss, token_count(prog), i, prog)
        batch.clear()
        codes.clear()

    for prog in stream:
        raw += 1
        if prog in seen:
            continue
        seen.add(prog)
        code = scorer.compile(prog)
        if semantic_dedup:
            out = scorer.kernel.run(np.asarray(code, dtype=np.int64), scorer.consts, scorer.slot_values, scorer.data.obs)
            sig = out.tobytes()
            if sig in sigs:
                continue
            sigs.add(sig)
        batch.append((index, prog))
        codes.append(code)
        index += 1
        if len(codes) >= CHUNK * scorer.parallelism:
            flush()
    if codes:
        flush()
    if best.program is None:
        raise ValueError("empty neighborhood")
    return StepResult(best.program, best.loss, index, raw)


def local_search_step(
    dsl: Dsl,
    P: Term,
    data: Dataset,
    cfg: SearchConfig,
    input_types: Optional[Sequence[Type]] = None,
    scorer: Optional[Scorer] = None,
) -> StepResult:
    """Best member of the full neighborhood of ``P`` under ``cfg.loss``.

    Ties go to fewer tokens, then to the earlier stream position.  The
    returned loss never exceeds the loss of ``P``.
    """
    if input_types is None:
        input_types = _input_types(data.arity)
    own = scorer is None
    if own:
        scorer = Scorer(dsl, data, cfg.loss, cfg.parallelism)
    try:
        scorer.precompute(P)
        bound = scorer.loss(P)
        return _scan(full_neighborhood(dsl, P, cfg, input_types), scorer, bound, cfg.semantic_dedup)
    finally:
        if own:
            scorer.close()


def _root_scan(dsl: Dsl, target: Type, data: Dataset, cfg: SearchConfig, input_types, scorer: Scorer) -> StepResult:
    scorer.slots = {}
    scorer.slot_values = np.zeros((0, 0))
    enum = Enumerator(dsl_candidates(dsl, input_types), cfg.metric)
    return _scan(enum.generate(target, cfg.d), scorer, math.inf, cfg.semantic_dedup)


def iterate_search(
    dsl: Dsl,
    P0: Optional[Term],
    data: Dataset,
    cfg: SearchConfig,
    input_types: Optional[Sequence[Type]] = None,
    target: Type = FLOAT,
) -> SearchTrace:
    """Repeated local search from ``P0`` (or from a plain enumeration when ``P0`` is None).

    Stops after ``cfg.max_iterations`` iterations, at zero loss, or on the
    first iteration that does not strictly improve the loss.
    """
    if input_types is None:
        input_types = _input_types(data.arity)
    if P0 is not None:
        ty = infer(P0, dsl, input_types)
        if unify(ty, target) is None:
            raise TypeError(f"initial program has type {ty}, expected {target}")
    trace = SearchTrace()
    scorer = Scorer(dsl, data, cfg.loss, cfg.parallelism)
    try:
        current = P0
        prev = math.inf if P0 is None else scorer.loss(P0)
        for it in range(cfg.max_iterations):
            t0 = time.perf_counter()
            if current is None:
                res = _root_scan(dsl, target, data, cfg, input_types, scorer)
            else:
                scorer.precompute(current)
                res = _scan(full_neighborhood(dsl, current, cfg, input_types), scorer, scorer.loss(current), cfg.semantic_dedup)
            trace.records.append(
                IterationRecord(
                    it,
                    res.loss,
                    res.raw if cfg.count_raw else res.evaluated,
                    res.raw,
                    token_count(res.program),
                    res.program,
                    current,
                    time.perf_counter() - t0,
                )
            )
            improved = res.loss < prev
            current, prev = res.program, res.loss
            if not improved or res.loss == 0.0:
                break
    finally:
        scorer.close()
    return trace
