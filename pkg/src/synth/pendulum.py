"""Pendulum swing-up environment.

``theta`` is measured from upright and is not wrapped; observations are
``(cos theta, sin theta, theta_dot)``.  Steps use semi-implicit Euler with the
velocity clipped before the angle update.  Batch rollouts of program policies
run inside the kernel backend; other policies are stepped in numpy.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from .kernels import Compiler, backend
from .kernels import _pykernel
from .lang import Dsl, Term, parse_program

HORIZON = 200
BALANCE_WINDOW = 50


@dataclass(frozen=True)
class PendulumParams:
    g: float = 10.0
    m: float = 1.0
    l: float = 1.0
    dt: float = 0.05
    max_torque: float = 2.0
    max_speed: float = 8.0
    horizon: int = HORIZON


DEFAULT = PendulumParams()


@dataclass(frozen=True)
class PendulumState:
    theta: float
    theta_dot: float


def wrap(theta):
    """Angle mapped into ``[-pi, pi)``."""
    w = _pykernel.wrap_angle(theta)
    return float(w) if np.ndim(w) == 0 else w


def observe(s: PendulumState) -> tuple[float, float, float]:
    return (math.cos(s.theta), math.sin(s.theta), s.theta_dot)


def reward(theta: float, theta_dot: float, torque: float) -> float:
    w = wrap(theta)
    return -(w * w + 0.1 * theta_dot * theta_dot + 0.001 * torque * torque)


def clip_action(a: float) -> float:
    if a != a:
        return 0.0
    return min(1.0, max(-1.0, a))


def step(s: PendulumState, action: float, params: PendulumParams = DEFAULT) -> tuple[PendulumState, float]:
    a = clip_action(float(action))
    th, thd, r = _pykernel.step_arrays(
        np.array([s.theta]), np.array([s.theta_dot]), np.array([a]),
        params.dt, params.g, params.m, params.l, params.max_torque, params.max_speed,
    )
    return PendulumState(float(th[0]), float(thd[0])), float(r[0])


@dataclass
class Trajectory:
    """One episode: ``horizon + 1`` states, and per step the observation, action and reward."""

    theta: np.ndarray
    theta_dot: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def obs(self) -> np.ndarray:
        th = self.theta[:-1]
        return np.stack([np.cos(th), np.sin(th), self.theta_dot[:-1]], axis=1)

    @property
    def ret(self) -> float:
        return float(self.rewards.sum())

    @property
    def steps(self):
        for i in range(len(self)):
            yield PendulumState(float(self.theta[i]), float(self.theta_dot[i])), self.obs[i], float(self.actions[i]), float(self.rewards[i])

    def balanced(self, window: int = BALANCE_WINDOW) -> bool:
        th = wrap(self.theta[-window:])
        return bool(np.all(np.abs(th) < 0.2) and np.all(np.abs(self.theta_dot[-window:]) < 1.0))


def _split(arrays) -> list[Trajectory]:
    thetas, thetadots, actions, rewards = arrays
    return [Trajectory(thetas[i], thetadots[i], actions[i], rewards[i]) for i in range(len(thetas))]


def rollout(policy, theta0, theta_dot0, params: PendulumParams = DEFAULT) -> list[Trajectory]:
    """Roll out ``policy`` from each initial state (arrays of equal length).

    ``policy`` is anything with ``act_batch(obs) -> actions``; program policies
    (objects exposing ``program`` and ``dsl``) use the compiled rollout.
    """
    th0 = np.atleast_1d(np.asarray(theta0, dtype=np.float64))
    thd0 = np.atleast_1d(np.asarray(theta_dot0, dtype=np.float64))
    if th0.shape != thd0.shape:
        raise ValueError("theta0 and theta_dot0 must have the same shape")
    p = params
    program = getattr(policy, "program", None)
    if program is not None:
        comp = Compiler(policy.dsl)
        code = np.asarray(comp.compile(program), dtype=np.int64)
        return _split(
            backend().rollout(code, comp.consts_array(), th0, thd0, p.horizon, p.dt, p.g, p.m, p.l, p.max_torque, p.max_speed)
        )
    n = th0.shape[0]
    thetas = np.empty((n, p.horizon + 1))
    thetadots = np.empty((n, p.horizon + 1))
    actions = np.empty((n, p.horizon))
    rewards = np.empty((n, p.horizon))
    th, thd = th0.copy(), thd0.copy()
    thetas[:, 0], thetadots[:, 0] = th, thd
    for k in range(p.horizon):
        obs = np.stack([np.cos(th), np.sin(th), thd], axis=1)
        a = np.asarray(policy.act_batch(obs), dtype=np.float64)
        a = np.where(np.isnan(a), 0.0, np.clip(a, -1.0, 1.0))
        th, thd, r = _pykernel.step_arrays(th, thd, a, p.dt, p.g, p.m, p.l, p.max_torque, p.max_speed)
        actions[:, k], rewards[:, k] = a, r
        thetas[:, k + 1], thetadots[:, k + 1] = th, thd
    return _split((thetas, thetadots, actions, rewards))


def initial_states(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """theta uniform on [pi/2, 3pi/2], theta_dot uniform on [-1, 1]."""
    theta = rng.uniform(math.pi / 2, 3 * math.pi / 2, n)
    theta_dot = rng.uniform(-1.0, 1.0, n)
    return theta, theta_dot


@dataclass
class PolicyStats:
    mean: float
    max: float
    min: float
    balanced: int
    n: int
    returns: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "max": self.max, "min": self.min, "balanced": self.balanced, "rollouts": self.n}


def evaluate_policy(policy, n: int = 100, rng: Optional[np.random.Generator] = None, params: PendulumParams = DEFAULT) -> PolicyStats:
    if rng is None:
        rng = np.random.default_rng(0)
    trajs = rollout(policy, *initial_states(n, rng), params)
    rets = [t.ret for t in trajs]
    return PolicyStats(
        float(np.mean(rets)), float(np.max(rets)), float(np.min(rets)), sum(t.balanced() for t in trajs), n, rets
    )


def heatmap(policy, n_theta: int, n_theta_dot: int, max_speed: float = DEFAULT.max_speed):
    """Clipped policy actions on a grid; rows follow theta in [-pi, pi), columns theta_dot in [-8, 8]."""
    if n_theta < 1 or n_theta_dot < 1:
        raise ValueError("grid dimensions must be positive")
    thetas = np.linspace(-math.pi, math.pi, n_theta, endpoint=False)
    thetadots = np.linspace(-max_speed, max_speed, n_theta_dot) if n_theta_dot > 1 else np.zeros(1)
    TH, THD = np.meshgrid(thetas, thetadots, indexing="ij")
    obs = np.stack([np.cos(TH).ravel(), np.sin(TH).ravel(), THD.ravel()], axis=1)
    a = np.asarray(policy.act_batch(obs), dtype=np.float64)
    a = np.where(np.isnan(a), 0.0, np.clip(a, -1.0, 1.0))
    return thetas, thetadots, a.reshape(n_theta, n_theta_dot)


def write_heatmap(path, thetas, thetadots, actions) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta", "theta_dot", "action"])
        for i, th in enumerate(thetas.tolist()):
            for j, thd in enumerate(thetadots.tolist()):
                w.writerow([repr(th), repr(thd), repr(float(actions[i, j]))])


# ----------------------------------------------------------------------------
# Fixtures


def _data_text(name: str) -> str:
    return resources.files("synth").joinpath("data", name).read_text(encoding="utf-8")


def pendulum_dsl(extended: bool = False) -> Dsl:
    import json

    return Dsl.from_dict(json.loads(_data_text("pendulum_dsl_extended.json" if extended else "pendulum_dsl.json")))


def expert_program(dsl: Optional[Dsl] = None) -> Term:
    """The handcrafted swing-up controller."""
    return parse_program(_data_text("expert.sexp"), dsl or pendulum_dsl(), 3)
