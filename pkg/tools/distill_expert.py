"""Fit a 3-24-24-1 network to the handcrafted expert and write the weight fixture.

Plain numpy with Adam; the training set mixes states visited by the expert
with states drawn uniformly over the observation box.  Run from the repo
root::

    python3 tools/distill_expert.py --out src/synth/data/distilled_expert.json
"""

from __future__ import annotations

import argparse
import math

import numpy as np

from synth.mlp import Layer, MlpPolicy, save_weights
from synth.pendulum import evaluate_policy, expert_program, initial_states, pendulum_dsl, rollout
from synth.policy import MlpOracle, ProgramOracle


def training_states(rng: np.random.Generator, n_rollouts: int, n_uniform: int) -> np.ndarray:
    dsl = pendulum_dsl()
    expert = ProgramOracle(expert_program(dsl), dsl)
    trajs = rollout(expert, *initial_states(n_rollouts, rng))
    visited = np.vstack([t.obs for t in trajs])
    th = rng.uniform(-math.pi, math.pi, n_uniform)
    thd = rng.uniform(-8.0, 8.0, n_uniform)
    box = np.stack([np.cos(th), np.sin(th), thd], axis=1)
    return np.vstack([visited, box])


def init_params(rng, sizes):
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        params.append(rng.normal(0.0, math.sqrt(2.0 / fan_in), (fan_out, fan_in)))
        params.append(np.zeros(fan_out))
    return params


def forward(params, X):
    acts = [X]
    h = X
    n_layers = len(params) // 2
    for i in range(n_layers):
        z = h @ params[2 * i].T + params[2 * i + 1]
        h = np.tanh(z) if i == n_layers - 1 else np.maximum(z, 0.0)
        acts.append(h)
    return acts


def grads(params, X, y):
    acts = forward(params, X)
    n_layers = len(params) // 2
    out = acts[-1][:, 0]
    err = out - y
    loss = float(np.mean(err * err))
    delta = (2.0 / len(y)) * err[:, None] * (1.0 - acts[-1] ** 2)
    g = [None] * len(params)
    for i in reversed(range(n_layers)):
        g[2 * i] = delta.T @ acts[i]
        g[2 * i + 1] = delta.sum(axis=0)
        if i:
            delta = (delta @ params[2 * i]) * (acts[i] > 0.0)
    return loss, g


def train(X, y, rng, epochs: int, batch: int, lr: float):
    params = init_params(rng, [3, 24, 24, 1])
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2, eps = 0.9, 0.999, 1e-8
    t = 0
    for epoch in range(epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), batch):
            idx = order[start : start + batch]
            _, g = grads(params, X[idx], y[idx])
            t += 1
            step = lr * (0.5 * (1 + math.cos(math.pi * epoch / epochs)))
            for k in range(len(params)):
                m[k] = b1 * m[k] + (1 - b1) * g[k]
                v[k] = b2 * v[k] + (1 - b2) * g[k] ** 2
                params[k] -= step * (m[k] / (1 - b1**t)) / (np.sqrt(v[k] / (1 - b2**t)) + eps)
        if epoch % 20 == 0 or epoch == epochs - 1:
            loss, _ = grads(params, X, y)
            print(f"epoch {epoch:4d} mse {loss:.5f}")
    return params


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="src/synth/data/distilled_expert.json")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=200)
    ap.add_argument("--batch", type=int, default=256)
    ap.add_argument("--lr", type=float, default=3e-3)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    X = training_states(rng, 100, 20000)
    dsl = pendulum_dsl()
    y = np.clip(ProgramOracle(expert_program(dsl), dsl).act_batch(X), -1.0, 1.0)
    params = train(X, y, rng, args.epochs, args.batch, args.lr)
    layers = tuple(
        Layer(params[2 * i], params[2 * i + 1], "tanh" if i == 2 else "relu") for i in range(3)
    )
    net = MlpPolicy(layers, 1.0)
    save_weights(args.out, net)
    stats = evaluate_policy(MlpOracle(net), 100, np.random.default_rng(3))
    print(f"wrote {args.out}: mean {stats.mean:.1f} max {stats.max:.1f} balanced {stats.balanced}/100")


if __name__ == "__main__":
    main()
