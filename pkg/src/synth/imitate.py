"""Imitation loop: collect rollouts, label them with the oracle, search, repeat.

Round 0 fits ``p_0`` to expert trajectories.  Each later round rolls out the
current program, labels the visited states with the oracle, aggregates them
into the dataset and warm-starts local search from the previous program.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .evaluate import Dataset, imitation_loss
from .lang import Dsl, Term
from .neighborhood import SearchConfig, SearchTrace, iterate_search
from .pendulum import DEFAULT, PendulumParams, PolicyStats, Trajectory, evaluate_policy, initial_states, rollout
from .policy import CallableOracle, MlpOracle, Oracle, ProgramOracle

__all__ = [
    "CallableOracle",
    "ImitationConfig",
    "ImitationResult",
    "MlpOracle",
    "Oracle",
    "ProgramOracle",
    "RoundRecord",
    "collect_trajectories",
    "label_with_expert",
    "run_imitation",
]

AGGREGATE = ("full", "initial")


@dataclass(frozen=True)
class ImitationConfig:
    N: int = 5
    M: int = 2
    K: int = 10
    aggregate: str = "full"
    search: SearchConfig = SearchConfig(d=4, max_iterations=10)
    round_iterations: int = 1
    seed: int = 0
    eval_rollouts: int = 100

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.M < 0:
            raise ValueError("M must be >= 0")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.aggregate not in AGGREGATE:
            raise ValueError(f"aggregate must be one of {AGGREGATE}")
        if self.round_iterations < 1:
            raise ValueError("round_iterations must be >= 1")
        if self.eval_rollouts < 0:
            raise ValueError("eval_rollouts must be >= 0")


def collect_trajectories(
    policy, count: int, rng: np.random.Generator, params: PendulumParams = DEFAULT
) -> list[Trajectory]:
    if count < 0:
        raise ValueError("count must be >= 0")
    if count == 0:
        return []
    return rollout(policy, *initial_states(count, rng), params)


def label_with_expert(states, f) -> Dataset:
    """Pair every observation with the oracle's action (clipped; non-finite becomes 0)."""
    obs = np.asarray(states, dtype=np.float64)
    if obs.size == 0:
        return Dataset.empty(3)
    a = np.asarray(f.act_batch(obs), dtype=np.float64)
    return Dataset(obs, np.where(np.isnan(a), 0.0, np.clip(a, -1.0, 1.0)))


def _states(trajs: Sequence[Trajectory]) -> np.ndarray:
    if not trajs:
        return np.zeros((0, 3))
    return np.vstack([t.obs for t in trajs])


@dataclass
class RoundRecord:
    round: int
    start: Optional[Term]
    program: Term
    loss: float
    dataset_size: int
    trace: SearchTrace
    stats: Optional[PolicyStats]


@dataclass
class ImitationResult:
    rounds: list[RoundRecord] = field(default_factory=list)
    dataset: Optional[Dataset] = None

    @property
    def best(self) -> RoundRecord:
        """Round with the highest mean evaluation return (earliest on ties)."""
        scored = [r for r in self.rounds if r.stats is not None]
        if not scored:
            return self.rounds[-1]
        return max(scored, key=lambda r: (r.stats.mean, -r.round))


def run_imitation(
    f,
    cfg: ImitationConfig,
    dsl: Dsl,
    p_init: Optional[Term] = None,
    params: PendulumParams = DEFAULT,
    on_round=None,
) -> ImitationResult:
    """Rounds ``0..K``; ``on_round(record)`` is called after each one."""
    collect_seq, eval_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    rng = np.random.default_rng(collect_seq)
    result = ImitationResult()

    def evaluate(p: Term) -> Optional[PolicyStats]:
        if cfg.eval_rollouts == 0:
            return None
        return evaluate_policy(ProgramOracle(p, dsl), cfg.eval_rollouts, np.random.default_rng(eval_seq), params)

    def record(k: int, start, trace: SearchTrace, data: Dataset) -> Term:
        p = trace.best
        rec = RoundRecord(k, start, p, trace.best_loss, len(data), trace, evaluate(p))
        result.rounds.append(rec)
        if on_round is not None:
            on_round(rec)
        return p

    gamma0 = label_with_expert(_states(collect_trajectories(f, cfg.N, rng, params)), f)
    trace = iterate_search(dsl, p_init, gamma0, cfg.search)
    p = record(0, p_init, trace, gamma0)
    gamma = gamma0
    round_cfg = replace(cfg.search, max_iterations=cfg.round_iterations)
    for k in range(1, cfg.K + 1):
        fresh = label_with_expert(_states(collect_trajectories(ProgramOracle(p, dsl), cfg.M, rng, params)), f)
        gamma = (gamma if cfg.aggregate == "full" else gamma0).concat(fresh)
        trace = iterate_search(dsl, p, gamma, round_cfg)
        p = record(k, p, trace, gamma)
    result.dataset = gamma
    return result


def loss_on(p: Term, data: Dataset, dsl: Dsl) -> float:
    return imitation_loss(p, data, dsl) if len(data) else math.inf
