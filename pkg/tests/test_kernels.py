"""The compiled and numpy backends against each other and the reference interpreter."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synth import kernels
from synth.enumeration import enumerate_programs
from synth.evaluate import evaluate, value_as_float
from synth.kernels import CompileError, Compiler, disassemble
from synth.kernels import _pykernel
from synth.lang import App, Hole, Input, Prim, Reuse, parse_program
from synth.types import BOOL, FLOAT

BACKENDS = kernels.available()
EMPTY = np.zeros((0, 0))


def _same(a, b):
    return (math.isnan(a) and math.isnan(b)) or a == b


def _rows(n, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(scale=3.0, size=(n, 3))
    X[0] = [0.0, 0.0, 0.0]
    X[1] = [1e200, -1e200, 700.0]
    return X


def test_backends_available():
    assert "python" in BACKENDS


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("dsl_name", ["pbe", "ext_dsl"])
def test_run_matches_reference(backend, dsl_name, request):
    dsl = request.getfixturevalue(dsl_name)
    k = kernels.backend(backend)
    comp = Compiler(dsl)
    X = _rows(12)
    for ty in (FLOAT, BOOL):
        for i, t in enumerate(enumerate_programs(dsl, ty, 3, [FLOAT] * 3, metric="size")):
            if i % 7:
                continue
            out = k.run(np.asarray(comp.compile(t), dtype=np.int64), comp.consts_array(), EMPTY, X)
            for r in range(len(X)):
                ref = value_as_float(evaluate(t, dsl, X[r]))
                assert _same(out[r], ref), (t, X[r], out[r], ref)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
@settings(max_examples=60)
@given(st.integers(0, 10_000))
def test_backends_agree_on_scores(seed):
    from synth.pbe import pbe_dsl

    dsl = pbe_dsl()
    comp = Compiler(dsl)
    rng = np.random.default_rng(seed)
    progs = list(enumerate_programs(dsl, FLOAT, 4, [FLOAT] * 3, metric="size"))
    picks = [progs[i] for i in rng.choice(len(progs), 40, replace=False)]
    codes = [comp.compile(t) for t in picks]
    offsets = np.concatenate([[0], np.cumsum([len(c) for c in codes])]).astype(np.int64)
    flat = np.array([x for c in codes for x in c], dtype=np.int64)
    X = rng.uniform(-5, 5, (10, 3))
    y = rng.uniform(-5, 5, 10)
    for kind in (0, 1):
        a = kernels.backend("cython").score(flat, offsets, comp.consts_array(), EMPTY, X, y, kind)
        b = kernels.backend("python").score(flat, offsets, comp.consts_array(), EMPTY, X, y, kind)
        assert np.allclose(a, b, rtol=1e-12, atol=0) or np.array_equal(np.isinf(a), np.isinf(b))
        assert np.array_equal(np.isinf(a), np.isinf(b))
        fin = np.isfinite(a)
        assert np.allclose(a[fin], b[fin], rtol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_score_bound(backend, pbe):
    k = kernels.backend(backend)
    comp = Compiler(pbe)
    code = np.asarray(comp.compile(Input(0)), dtype=np.int64)
    off = np.array([0, len(code)], dtype=np.int64)
    X = np.array([[1.0, 0, 0], [2.0, 0, 0], [3.0, 0, 0]])
    y = np.zeros(3)
    assert k.score(code, off, comp.consts_array(), EMPTY, X, y, 1)[0] == 6.0
    assert k.score(code, off, comp.consts_array(), EMPTY, X, y, 1, 6.0)[0] == 6.0
    assert k.score(code, off, comp.consts_array(), EMPTY, X, y, 1, 5.9)[0] == math.inf
    assert k.score(code, off, comp.consts_array(), EMPTY, X, y, 0)[0] == pytest.approx(14 / 3)


@pytest.mark.parametrize("backend", BACKENDS)
def test_slots(backend, pbe):
    k = kernels.backend(backend)
    comp = Compiler(pbe)
    inner = parse_program("((mul x1) x2)", pbe, 3)
    outer = App(App(Prim("sub"), inner), Input(2))
    X = _rows(6, 4)[2:]
    slot_vals = k.run(np.asarray(comp.compile(inner), dtype=np.int64), comp.consts_array(), EMPTY, X)[None, :]
    code = comp.compile(outer, {id(inner): 0})
    assert "SLOT 0" in disassemble(code)
    direct = k.run(np.asarray(comp.compile(outer), dtype=np.int64), comp.consts_array(), EMPTY, X)
    via = k.run(np.asarray(code, dtype=np.int64), comp.consts_array(), np.ascontiguousarray(slot_vals), X)
    assert np.array_equal(direct, via)


def test_compile_errors(pbe):
    comp = Compiler(pbe)
    with pytest.raises(CompileError):
        comp.compile(Hole(FLOAT))
    with pytest.raises(CompileError):
        comp.compile(App(Prim("gt"), Input(0)))
    with pytest.raises(CompileError):
        comp.compile(App(Input(0), Input(1)))
    assert comp.compile(Reuse(Input(1))) == comp.compile(Input(1))


def test_if_with_extra_arguments(pend_dsl):
    t = parse_program("((((if ((gt x1) 0.6)) sub) mul) x2) x3", pend_dsl, 3)
    comp = Compiler(pend_dsl)
    X = _rows(8, 2)[2:]
    out = _pykernel.run(comp.compile(t), comp.consts_array(), EMPTY, X)
    for r in range(len(X)):
        assert _same(out[r], value_as_float(evaluate(t, pend_dsl, X[r])))


@pytest.mark.parametrize("backend", BACKENDS)
def test_wrap_angle(backend):
    k = kernels.backend(backend)
    th = np.array([-math.pi, math.pi, 3 * math.pi, -7.0, 0.0, 1e6])
    w = k.wrap_angle(th)
    assert np.all(w >= -math.pi) and np.all(w < math.pi)
    assert np.allclose(np.cos(w), np.cos(th)) and np.allclose(np.sin(w), np.sin(th), atol=1e-9)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
def test_rollout_backends_agree(expert, pend_dsl):
    comp = Compiler(pend_dsl)
    code = np.asarray(comp.compile(expert), dtype=np.int64)
    rng = np.random.default_rng(5)
    th0, thd0 = rng.uniform(1.5, 4.7, 8), rng.uniform(-1, 1, 8)
    args = (comp.consts_array(), th0, thd0, 200, 0.05, 10.0, 1.0, 1.0, 2.0, 8.0)
    a = kernels.backend("cython").rollout(code, *args)
    b = kernels.backend("python").rollout(code, *args)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-9, atol=1e-9)
