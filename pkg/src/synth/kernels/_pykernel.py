"""Pure numpy implementation of the kernel API (fallback backend).

Each opcode is applied to whole columns at once, so one program costs a
handful of numpy calls regardless of the number of rows.
"""

from __future__ import annotations

import math

import numpy as np

from . import bytecode as bc

NAME = "python"


def _fin(x: np.ndarray) -> np.ndarray:
    bad = ~np.isfinite(x)
    if bad.any():
        x = np.where(bad, np.nan, x)
    return x


def _bool(mask: np.ndarray, *operands: np.ndarray) -> np.ndarray:
    out = mask.astype(np.float64)
    for o in operands:
        out[np.isnan(o)] = np.nan
    return out


# overflow is expected and mapped to the nonfinite marker by _fin
@np.errstate(over="ignore", invalid="ignore")
def _exec(code, consts, slots, X, nrows):
    stack = []
    push = stack.append
    pop = stack.pop
    for i in range(0, len(code), 2):
        op = code[i]
        arg = code[i + 1]
        if op == bc.OP_CONST:
            push(np.full(nrows, consts[arg]))
        elif op == bc.OP_INPUT:
            push(_fin(X[:, arg]))
        elif op == bc.OP_SLOT:
            push(slots[arg])
        elif op == bc.OP_IF:
            b = pop()
            a = pop()
            c = pop()
            out = np.where(c != 0.0, a, b)
            out[np.isnan(c)] = np.nan
            push(out)
        elif op <= bc.OP_XOR:
            b = pop()
            a = pop()
            if op == bc.OP_ADD:
                push(_fin(a + b))
            elif op == bc.OP_SUB:
                push(_fin(a - b))
            elif op == bc.OP_MUL:
                push(_fin(a * b))
            elif op == bc.OP_GT:
                push(_bool(a > b, a, b))
            elif op == bc.OP_AND:
                push(_bool((a != 0.0) & (b != 0.0), a, b))
            else:
                push(_bool((a != 0.0) != (b != 0.0), a, b))
        else:
            a = pop()
            if op == bc.OP_NOT:
                push(_bool(a == 0.0, a))
            elif op == bc.OP_NEG:
                push(-a)
            elif op == bc.OP_SQR:
                push(_fin(a * a))
            elif op == bc.OP_SIGN:
                push(np.sign(a))
            elif op == bc.OP_COS:
                push(np.cos(a))
            elif op == bc.OP_EXP:
                with np.errstate(over="ignore"):
                    push(_fin(np.exp(a)))
            else:
                raise ValueError(f"bad opcode {op}")
    if len(stack) != 1:
        raise ValueError("malformed bytecode")
    return stack[0]


def run(code, consts, slots, X):
    code = [int(c) for c in code]
    X = np.asarray(X, dtype=np.float64)
    out = _exec(code, consts, slots, X, X.shape[0])
    return np.array(out, dtype=np.float64)


def score(code, offsets, consts, slots, X, y, kind, bound=math.inf):
    code = [int(c) for c in code]
    offsets = [int(o) for o in offsets]
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    losses = np.empty(len(offsets) - 1)
    for p in range(len(offsets) - 1):
        out = _exec(code[offsets[p]:offsets[p + 1]], consts, slots, X, n)
        if np.isnan(out).any():
            losses[p] = math.inf
            continue
        d = out - y
        # cumsum keeps the row-by-row summation order of the compiled kernel
        if kind == 0:
            losses[p] = float(np.cumsum(d * d)[-1]) / n if n else 0.0
        else:
            losses[p] = float(np.cumsum(np.abs(d))[-1]) if n else 0.0
        if losses[p] > bound:
            losses[p] = math.inf
    return losses


def wrap_angle(theta):
    two_pi = 2.0 * math.pi
    m = np.mod(np.asarray(theta, dtype=np.float64) + math.pi, two_pi)
    out = m - math.pi
    return np.where(out >= math.pi, out - two_pi, out)


def rollout(code, consts, theta0, thetadot0, nsteps, dt, g, m, l, max_torque, max_speed):
    """Batch rollout of a bytecode policy; returns (theta, thetadot, action, reward).

    ``theta``/``thetadot`` have ``nsteps + 1`` columns (including the start state),
    ``action`` holds the clipped normalised action and ``reward`` the per-step reward.
    """
    code = [int(c) for c in code]
    th = np.array(theta0, dtype=np.float64)
    thd = np.array(thetadot0, dtype=np.float64)
    n = th.shape[0]
    thetas = np.empty((n, nsteps + 1))
    thetadots = np.empty((n, nsteps + 1))
    actions = np.empty((n, nsteps))
    rewards = np.empty((n, nsteps))
    thetas[:, 0] = th
    thetadots[:, 0] = thd
    empty = np.zeros((0, 0))
    for k in range(nsteps):
        X = np.empty((n, 3))
        X[:, 0] = np.cos(th)
        X[:, 1] = np.sin(th)
        X[:, 2] = thd
        a = _exec(code, consts, empty, X, n)
        a = np.where(np.isnan(a), 0.0, np.clip(a, -1.0, 1.0))
        th, thd, r = step_arrays(th, thd, a, dt, g, m, l, max_torque, max_speed)
        actions[:, k] = a
        rewards[:, k] = r
        thetas[:, k + 1] = th
        thetadots[:, k + 1] = thd
    return thetas, thetadots, actions, rewards


def step_arrays(th, thd, a, dt, g, m, l, max_torque, max_speed):
    u = max_torque * a
    w = wrap_angle(th)
    r = -(w * w + 0.1 * thd * thd + 0.001 * u * u)
    new_thd = thd + (3.0 * g / (2.0 * l)) * np.sin(th) * dt + (3.0 / (m * l * l)) * u * dt
    new_thd = np.clip(new_thd, -max_speed, max_speed)
    new_th = th + new_thd * dt
    return new_th, new_thd, r
