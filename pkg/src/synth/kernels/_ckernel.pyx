# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel backend: row-at-a-time bytecode interpreter and pendulum rollouts.

Same API and semantics as ``_pykernel``; the hot loops run without the GIL.
"""

import numpy as np

from libc.math cimport NAN, INFINITY, M_PI, cos, sin, exp, fmod, isfinite, isnan
from libc.stdint cimport int64_t
from libc.stdlib cimport malloc, free

NAME = "cython"

cdef enum:
    OP_CONST = 0
    OP_INPUT = 1
    OP_SLOT = 2
    OP_ADD = 3
    OP_SUB = 4
    OP_MUL = 5
    OP_GT = 6
    OP_AND = 7
    OP_XOR = 8
    OP_NOT = 9
    OP_NEG = 10
    OP_SQR = 11
    OP_SIGN = 12
    OP_COS = 13
    OP_EXP = 14
    OP_IF = 15


cdef inline double _fin(double x) noexcept nogil:
    return x if isfinite(x) else NAN


cdef double _run_row(const int64_t[::1] code, Py_ssize_t start, Py_ssize_t end,
                     const double[::1] consts, const double[:, ::1] slots, Py_ssize_t row,
                     const double* xrow, double* stack) noexcept nogil:
    cdef Py_ssize_t pc, sp = 0
    cdef int64_t op, arg
    cdef double a, b, c
    pc = start
    while pc < end:
        op = code[pc]
        arg = code[pc + 1]
        pc += 2
        if op == OP_CONST:
            stack[sp] = consts[arg]
            sp += 1
        elif op == OP_INPUT:
            stack[sp] = _fin(xrow[arg])
            sp += 1
        elif op == OP_SLOT:
            stack[sp] = slots[arg, row]
            sp += 1
        elif op == OP_IF:
            sp -= 2
            c = stack[sp - 1]
            if isnan(c):
                stack[sp - 1] = NAN
            elif c != 0.0:
                stack[sp - 1] = stack[sp]
            else:
                stack[sp - 1] = stack[sp + 1]
        elif op <= OP_XOR:
            sp -= 1
            a = stack[sp - 1]
            b = stack[sp]
            if op == OP_ADD:
                stack[sp - 1] = _fin(a + b)
            elif op == OP_SUB:
                stack[sp - 1] = _fin(a - b)
            elif op == OP_MUL:
                stack[sp - 1] = _fin(a * b)
            elif isnan(a) or isnan(b):
                stack[sp - 1] = NAN
            elif op == OP_GT:
                stack[sp - 1] = 1.0 if a > b else 0.0
            elif op == OP_AND:
                stack[sp - 1] = 1.0 if (a != 0.0 and b != 0.0) else 0.0
            else:
                stack[sp - 1] = 1.0 if ((a != 0.0) != (b != 0.0)) else 0.0
        else:
            a = stack[sp - 1]
            if op == OP_NOT:
                stack[sp - 1] = a if isnan(a) else (1.0 if a == 0.0 else 0.0)
            elif op == OP_NEG:
                stack[sp - 1] = -a
            elif op == OP_SQR:
                stack[sp - 1] = _fin(a * a)
            elif op == OP_SIGN:
                if a > 0.0:
                    stack[sp - 1] = 1.0
                elif a < 0.0:
                    stack[sp - 1] = -1.0
                elif a == 0.0:
                    stack[sp - 1] = 0.0
                else:
                    stack[sp - 1] = NAN
            elif op == OP_COS:
                stack[sp - 1] = cos(a)
            elif op == OP_EXP:
                stack[sp - 1] = _fin(exp(a))
    return stack[0]


cdef Py_ssize_t _stack_size(const int64_t[::1] code) noexcept nogil:
    return code.shape[0] // 2 + 1


def run(code, consts, slots, X):
    cdef const int64_t[::1] c = np.ascontiguousarray(code, dtype=np.int64)
    cdef const double[::1] k = np.ascontiguousarray(consts, dtype=np.float64)
    cdef const double[:, ::1] s = np.ascontiguousarray(slots, dtype=np.float64) if np.size(slots) else np.zeros((1, 1))
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], ncol = x.shape[1], r
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double* stack = <double*> malloc(_stack_size(c) * sizeof(double))
    cdef double dummy = 0.0
    if stack == NULL:
        raise MemoryError()
    try:
        with nogil:
            for r in range(n):
                o[r] = _run_row(c, 0, c.shape[0], k, s, r, &x[r, 0] if ncol else &dummy, stack)
    finally:
        free(stack)
    return out


def score(code, offsets, consts, slots, X, y, int kind, double bound=INFINITY):
    """Loss of each program ``code[offsets[p]:offsets[p+1]]``.

    kind 0: mean squared error; kind 1: sum of absolute errors.  Any NaN row
    makes the loss +inf, and so does a loss above ``bound`` (scoring of that
    program stops as soon as the partial sum exceeds it).  Rows are
    accumulated in order.
    """
    cdef const int64_t[::1] c = np.ascontiguousarray(code, dtype=np.int64)
    cdef const int64_t[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef const double[::1] k = np.ascontiguousarray(consts, dtype=np.float64)
    cdef const double[:, ::1] s = np.ascontiguousarray(slots, dtype=np.float64) if np.size(slots) else np.zeros((1, 1))
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] yy = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], ncol = x.shape[1], nprog = off.shape[0] - 1, p, r
    cdef double acc, v, d, lim, dummy = 0.0
    losses = np.empty(nprog)
    cdef double[::1] L = losses
    cdef double* stack = <double*> malloc(_stack_size(c) * sizeof(double))
    if stack == NULL:
        raise MemoryError()
    try:
        with nogil:
            lim = bound * n if kind == 0 else bound
            for p in range(nprog):
                acc = 0.0
                for r in range(n):
                    v = _run_row(c, off[p], off[p + 1], k, s, r, &x[r, 0] if ncol else &dummy, stack)
                    if isnan(v):
                        acc = INFINITY
                        break
                    d = v - yy[r]
                    if kind == 0:
                        acc = acc + d * d
                    else:
                        acc = acc + (d if d >= 0.0 else -d)
                    if acc > lim:
                        # partial sums never shrink, so the final loss exceeds bound too
                        if kind == 1 or acc / n > bound:
                            acc = INFINITY
                            break
                if kind == 0 and n > 0 and acc != INFINITY:
                    acc = acc / n
                if acc > bound:
                    acc = INFINITY
                L[p] = acc
    finally:
        free(stack)
    return losses


cdef inline double _wrap(double th) noexcept nogil:
    cdef double two_pi = 2.0 * M_PI
    cdef double m = fmod(th + M_PI, two_pi)
    if m < 0.0:
        m = m + two_pi
    m = m - M_PI
    if m >= M_PI:
        m = m - two_pi
    return m


def wrap_angle(theta):
    arr = np.ascontiguousarray(theta, dtype=np.float64)
    flat = arr.reshape(-1)
    out = np.empty_like(flat)
    cdef const double[::1] t = flat
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(t.shape[0]):
        o[i] = _wrap(t[i])
    return out.reshape(arr.shape) if arr.ndim else float(out[0])


def rollout(code, consts, theta0, thetadot0, int nsteps, double dt, double g, double m, double l,
            double max_torque, double max_speed):
    cdef const int64_t[::1] c = np.ascontiguousarray(code, dtype=np.int64)
    cdef const double[::1] k = np.ascontiguousarray(consts, dtype=np.float64)
    cdef const double[::1] th0 = np.ascontiguousarray(theta0, dtype=np.float64)
    cdef const double[::1] thd0 = np.ascontiguousarray(thetadot0, dtype=np.float64)
    cdef const double[:, ::1] s = np.zeros((1, 1))
    cdef Py_ssize_t n = th0.shape[0], e, t
    thetas = np.empty((n, nsteps + 1))
    thetadots = np.empty((n, nsteps + 1))
    actions = np.empty((n, nsteps))
    rewards = np.empty((n, nsteps))
    cdef double[:, ::1] TH = thetas
    cdef double[:, ::1] THD = thetadots
    cdef double[:, ::1] A = actions
    cdef double[:, ::1] R = rewards
    cdef double th, thd, a, u, w, obs[3]
    cdef double grav = 3.0 * g / (2.0 * l), inv = 3.0 / (m * l * l)
    cdef double* stack = <double*> malloc(_stack_size(c) * sizeof(double))
    if stack == NULL:
        raise MemoryError()
    try:
        with nogil:
            for e in range(n):
                th = th0[e]
                thd = thd0[e]
                TH[e, 0] = th
                THD[e, 0] = thd
                for t in range(nsteps):
                    obs[0] = cos(th)
                    obs[1] = sin(th)
                    obs[2] = thd
                    a = _run_row(c, 0, c.shape[0], k, s, 0, obs, stack)
                    if isnan(a):
                        a = 0.0
                    elif a > 1.0:
                        a = 1.0
                    elif a < -1.0:
                        a = -1.0
                    u = max_torque * a
                    w = _wrap(th)
                    R[e, t] = -(w * w + 0.1 * thd * thd + 0.001 * u * u)
                    A[e, t] = a
                    thd = thd + grav * sin(th) * dt + inv * u * dt
                    if thd > max_speed:
                        thd = max_speed
                    elif thd < -max_speed:
                        thd = -max_speed
                    th = th + thd * dt
                    TH[e, t + 1] = th
                    THD[e, t + 1] = thd
    finally:
        free(stack)
    return thetas, thetadots, actions, rewards
