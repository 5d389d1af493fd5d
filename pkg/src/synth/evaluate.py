"""Reference interpreter, datasets and scoring functions.

:func:`evaluate` walks the term directly and is deliberately simple; bulk
scoring goes through the bytecode kernels in :mod:`synth.kernels`, which are
tested against it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .lang import BUILTIN_ARITY, App, Dsl, Hole, Input, Prim, Reuse, Term
from .types import BOOL, FLOAT


class _NonFinite(Exception):
    pass


class NonFinite:
    """Outcome of a program whose evaluation produced NaN or an infinity."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NONFINITE"

    def __reduce__(self):
        return (NonFinite, ())


NONFINITE = NonFinite()


@dataclass(frozen=True)
class Closure:
    """A builtin waiting for more arguments; arguments are kept unevaluated."""

    name: str
    args: tuple


Value = Union[float, bool, Closure, NonFinite]


def _fin(x: float) -> float:
    if not math.isfinite(x):
        raise _NonFinite
    return x


def _exp(x: float) -> float:
    try:
        return _fin(math.exp(x))
    except OverflowError:
        raise _NonFinite from None


def _sign(x: float) -> float:
    return 1.0 if x > 0 else (-1.0 if x < 0 else 0.0)


_STRICT = {
    "gt": lambda a, b: a > b,
    "add": lambda a, b: _fin(a + b),
    "sub": lambda a, b: _fin(a - b),
    "mul": lambda a, b: _fin(a * b),
    "and": lambda a, b: a and b,
    "xor": lambda a, b: a != b,
    "not": lambda a: not a,
    "neg": lambda a: -a,
    "sqr": lambda a: _fin(a * a),
    "sign": _sign,
    "cos": lambda a: _fin(math.cos(a)),
    "exp": _exp,
    "id": lambda a: a,
}


class _Interp:
    def __init__(self, dsl: Dsl, obs: Sequence[float]):
        self.dsl = dsl
        self.obs = obs

    def value(self, t: Term):
        tt = type(t)
        if tt is Input:
            return _fin(float(self.obs[t.index]))
        if tt is Prim:
            e = self.dsl[t.name]
            if e.is_const:
                return e.value
            return self.saturate(Closure(e.builtin, ()))
        if tt is App:
            f = self.value(t.func)
            if not isinstance(f, Closure):
                raise TypeError(f"applying a non-function value {f!r}")
            return self.saturate(Closure(f.name, f.args + ((t.arg, self),)))
        if tt is Reuse:
            return self.value(t.expr)
        if tt is Hole:
            raise ValueError("cannot evaluate a program with holes")
        raise TypeError(f"not a term: {t!r}")

    def saturate(self, c: Closure):
        arity = BUILTIN_ARITY[c.name]
        if len(c.args) < arity:
            return c
        if c.name == "if":
            cond = self.force(c.args[0])
            return self.force(c.args[1] if cond else c.args[2])
        return _STRICT[c.name](*(self.force(a) for a in c.args))

    @staticmethod
    def force(thunk):
        term, interp = thunk
        return interp.value(term)


def evaluate(t: Term, dsl: Dsl, obs: Sequence[float]) -> Value:
    """Evaluate a complete program on one observation vector.

    ``if`` evaluates only the branch it takes; every other builtin is strict.
    Any non-finite intermediate real yields :data:`NONFINITE`.
    """
    try:
        return _Interp(dsl, obs).value(t)
    except _NonFinite:
        return NONFINITE


# ----------------------------------------------------------------------------
# Datasets


@dataclass
class Dataset:
    """Rows of (observation vector, target)."""

    obs: np.ndarray
    actions: np.ndarray

    def __post_init__(self):
        self.obs = np.ascontiguousarray(self.obs, dtype=np.float64)
        self.actions = np.ascontiguousarray(self.actions, dtype=np.float64)
        if self.obs.ndim != 2:
            raise ValueError("observations must be a 2-D array")
        if self.actions.shape != (self.obs.shape[0],):
            raise ValueError("one action per observation row is required")
        if not np.all(np.isfinite(self.actions)):
            raise ValueError("actions must be finite")

    def __len__(self) -> int:
        return self.obs.shape[0]

    @property
    def arity(self) -> int:
        return self.obs.shape[1]

    @classmethod
    def empty(cls, arity: int) -> "Dataset":
        return cls(np.zeros((0, arity)), np.zeros(0))

    def concat(self, other: "Dataset") -> "Dataset":
        return Dataset(np.vstack([self.obs, other.obs]), np.concatenate([self.actions, other.actions]))

    def rows(self):
        return zip(self.obs.tolist(), self.actions.tolist())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"x{i + 1}" for i in range(self.arity)] + ["action"])
            for o, a in self.rows():
                w.writerow([repr(v) for v in o] + [repr(a)])

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        with open(path, newline="", encoding="utf-8") as fh:
            r = csv.reader(fh)
            header = next(r, None)
            if not header or header[-1] != "action":
                raise ValueError(f"{path}: header must be x1,...,xN,action")
            expected = [f"x{i + 1}" for i in range(len(header) - 1)]
            if header[:-1] != expected:
                raise ValueError(f"{path}: header must be {','.join(expected)},action")
            rows = [[float(v) for v in row] for row in r if row]
        if not rows:
            return cls.empty(len(header) - 1)
        data = np.array(rows, dtype=np.float64)
        return cls(data[:, :-1], data[:, -1])


# ----------------------------------------------------------------------------
# Losses

MSE = "mse"
ABS = "abs"


def program_outputs(t: Term, dsl: Dsl, obs: np.ndarray) -> np.ndarray:
    """Vectorised outputs (NaN marks a non-finite row; booleans as 0/1)."""
    from .kernels import Compiler, backend

    comp = Compiler(dsl)
    code = comp.compile(t)
    return backend().run(np.asarray(code, dtype=np.int64), comp.consts_array(), _NO_SLOTS, np.ascontiguousarray(obs, dtype=np.float64))


_NO_SLOTS = np.zeros((0, 0))


def _score(t: Term, data: Dataset, dsl: Dsl, kind: str) -> float:
    from .kernels import Compiler, backend, LOSS_KINDS

    comp = Compiler(dsl)
    code = np.asarray(comp.compile(t), dtype=np.int64)
    offsets = np.array([0, len(code)], dtype=np.int64)
    return float(
        backend().score(code, offsets, comp.consts_array(), _NO_SLOTS, data.obs, data.actions, LOSS_KINDS[kind])[0]
    )


def imitation_loss(t: Term, data: Dataset, dsl: Dsl) -> float:
    """Mean squared error against the recorded actions.

    +inf when any row is non-finite or the program is not of type Float.
    """
    from .infer import try_infer

    if try_infer(t, dsl, [FLOAT] * data.arity) != FLOAT:
        return math.inf
    return _score(t, data, dsl, MSE)


def pbe_error(t: Term, examples: Dataset, dsl: Dsl) -> float:
    """Sum of absolute errors; booleans count as 0/1; +inf on any non-finite row."""
    return _score(t, examples, dsl, ABS)


def normalized_series(errors: Sequence[float]) -> list[float]:
    if not errors:
        return []
    first = errors[0]
    if first == 0:
        return [0.0 for _ in errors]
    return [e / first for e in errors]


def value_as_float(v: Value) -> float:
    if v is NONFINITE:
        return math.nan
    if isinstance(v, bool):
        return 1.0 if v else 0.0
    if isinstance(v, Closure):
        raise TypeError("program did not reduce to a first-order value")
    return float(v)


__all__ = [
    "BOOL",
    "Closure",
    "Dataset",
    "FLOAT",
    "NONFINITE",
    "evaluate",
    "imitation_loss",
    "normalized_series",
    "pbe_error",
    "program_outputs",
    "value_as_float",
]
