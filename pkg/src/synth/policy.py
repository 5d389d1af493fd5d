"""Oracles: anything that maps pendulum observations to actions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

from .evaluate import program_outputs
from .lang import Dsl, Term, print_program
from .mlp import MlpPolicy


class Oracle(Protocol):
    def act(self, obs: Sequence[float]) -> float: ...

    def act_batch(self, obs: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class ProgramOracle:
    program: Term
    dsl: Dsl

    def act_batch(self, obs) -> np.ndarray:
        return program_outputs(self.program, self.dsl, np.asarray(obs, dtype=np.float64))

    def act(self, obs) -> float:
        return float(self.act_batch(np.asarray(obs, dtype=np.float64)[None, :])[0])

    def __str__(self) -> str:
        return print_program(self.program)


@dataclass(frozen=True)
class MlpOracle:
    net: MlpPolicy

    def act_batch(self, obs) -> np.ndarray:
        return self.net.forward_batch(obs)

    def act(self, obs) -> float:
        return self.net.forward(obs)


@dataclass(frozen=True)
class CallableOracle:
    fn: Callable[[Sequence[float]], float]

    def act_batch(self, obs) -> np.ndarray:
        return np.array([float(self.fn(row)) for row in np.asarray(obs, dtype=np.float64)])

    def act(self, obs) -> float:
        return float(self.fn(obs))


ZERO = CallableOracle(lambda obs: 0.0)
