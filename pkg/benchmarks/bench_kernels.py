"""Time the compiled and numpy kernel backends on the same workloads.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--programs 2000] [--rows 1000]

Workloads: batch scoring of enumerated programs (the inner loop of local
search) and batched pendulum rollouts of the expert controller.
"""

import argparse
import timeit

import numpy as np

from synth import kernels
from synth.enumeration import enumerate_programs
from synth.kernels import Compiler
from synth.pendulum import DEFAULT, expert_program, pendulum_dsl
from synth.types import FLOAT


def scoring_workload(n_programs: int, n_rows: int):
    dsl = pendulum_dsl()
    comp = Compiler(dsl)
    progs = []
    for t in enumerate_programs(dsl, FLOAT, 5, [FLOAT] * 3, metric="size"):
        progs.append(comp.compile(t))
        if len(progs) == n_programs:
            break
    offsets = np.concatenate([[0], np.cumsum([len(c) for c in progs])]).astype(np.int64)
    flat = np.array([x for c in progs for x in c], dtype=np.int64)
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (n_rows, 3))
    y = rng.uniform(-1, 1, n_rows)
    args = (flat, offsets, comp.consts_array(), np.zeros((0, 0)), X, y, 0)
    return len(progs), lambda k: k.score(*args)


def rollout_workload(n_rollouts: int):
    dsl = pendulum_dsl()
    comp = Compiler(dsl)
    code = np.asarray(comp.compile(expert_program(dsl)), dtype=np.int64)
    rng = np.random.default_rng(1)
    th0, thd0 = rng.uniform(np.pi / 2, 3 * np.pi / 2, n_rollouts), rng.uniform(-1, 1, n_rollouts)
    p = DEFAULT
    args = (comp.consts_array(), th0, thd0, p.horizon, p.dt, p.g, p.m, p.l, p.max_torque, p.max_speed)
    return lambda k: k.rollout(code, *args)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--programs", type=int, default=2000)
    ap.add_argument("--rows", type=int, default=1000)
    ap.add_argument("--rollouts", type=int, default=100)
    args = ap.parse_args(argv)

    n, score = scoring_workload(args.programs, args.rows)
    roll = rollout_workload(args.rollouts)
    workloads = [
        (f"score {n} programs x {args.rows} rows", score),
        (f"rollout {args.rollouts} x {DEFAULT.horizon} steps", roll),
    ]
    names = kernels.available()
    print(f"{'workload':<36}" + "".join(f"{b:>12}" for b in names) + ("     speedup" if len(names) > 1 else ""))
    for label, fn in workloads:
        times = {}
        for b in names:
            k = kernels.backend(b)
            fn(k)  # warm up
            times[b] = min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat))
        row = f"{label:<36}" + "".join(f"{times[b] * 1e3:>10.1f}ms" for b in names)
        if len(names) > 1:
            row += f"{times['python'] / times['cython']:>11.1f}x"
        print(row)
    if len(names) == 1:
        print("compiled backend not built; run `pip install --no-build-isolation -e .` first")


if __name__ == "__main__":
    main()
