import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_dsl
from oracles import naive_programs
from synth.enumeration import (
    EquivalenceIndex,
    count_programs,
    enumerate_programs,
    has_equivalent_within_depth,
    observational_signature,
)
from synth.infer import try_infer
from synth.lang import App, Input, Prim, depth, parse_program, print_program, size
from synth.types import BOOL, FLOAT, Var, parse_type, unify

MICRO = make_dsl(("true", "Bool", "const:true"), ("not", "Bool -> Bool", "builtin:not"))

# (entries, input types, target, max tree depth checked); size is always checked to 4
MICRO_DSLS = [
    ([("true", "Bool", "const:true"), ("not", "Bool -> Bool", "builtin:not")], [], "Bool", 4),
    ([("true", "Bool", "const:true"), ("gt", "Float -> Float -> Bool", "builtin:gt")], ["Float"], "Bool", 4),
    ([("0", "Float", "const:0"), ("1", "Float", "const:1"), ("add", "Float -> Float -> Float", "builtin:add")], [], "Float", 4),
    ([("if", "Bool -> t0 -> t0 -> t0", "builtin:if"), ("true", "Bool", "const:true"), ("1", "Float", "const:1")], [], "Float", 3),
    ([("id", "t0 -> t0", "builtin:id"), ("true", "Bool", "const:true"), ("1", "Float", "const:1")], [], "Float", 4),
    ([("id", "t0 -> t0", "builtin:id"), ("neg", "Float -> Float", "builtin:neg"), ("1", "Float", "const:1")], ["Float"], "Float", 4),
    ([("twice", "(Float -> Float) -> Float -> Float", "builtin:add"), ("neg", "Float -> Float", "builtin:neg"), ("1", "Float", "const:1")], [], "Float", 4),
    ([("if", "Bool -> t0 -> t0 -> t0", "builtin:if"), ("not", "Bool -> Bool", "builtin:not"), ("true", "Bool", "const:true")], [], "Bool", 3),
    ([("sqr", "Float -> Float", "builtin:sqr"), ("sign", "Float -> Float", "builtin:sign"), ("0.5", "Float", "const:0.5"), ("neg", "Float -> Float", "builtin:neg")], ["Float", "Float"], "Float", 4),
    ([("and", "Bool -> Bool -> Bool", "builtin:and"), ("true", "Bool", "const:true"), ("not", "Bool -> Bool", "builtin:not")], [], "Bool", 4),
    ([("gt", "Float -> Float -> Bool", "builtin:gt"), ("neg", "Float -> Float", "builtin:neg"), ("1", "Float", "const:1"), ("true", "Bool", "const:true"), ("not", "Bool -> Bool", "builtin:not")], [], "Bool", 4),
    ([("if", "Bool -> t0 -> t0 -> t0", "builtin:if"), ("gt", "Float -> Float -> Bool", "builtin:gt"), ("1", "Float", "const:1")], ["Float"], "t0", 3),
]


def _case(i):
    entries, inputs, target, dmax = MICRO_DSLS[i]
    return make_dsl(*entries), [parse_type(t) for t in inputs], parse_type(target), dmax


@pytest.mark.parametrize("i", range(len(MICRO_DSLS)))
@pytest.mark.parametrize("metric", ["tree", "size"])
def test_matches_generate_and_filter_oracle(i, metric):
    dsl, inputs, target, dmax = _case(i)
    for d in range(1, (dmax if metric == "tree" else 4) + 1):
        got = list(enumerate_programs(dsl, target, d, inputs, metric=metric))
        assert len(got) == len(set(got)), "duplicates"
        expected = naive_programs(dsl, inputs, target, d, metric)
        assert set(got) == expected, (d, sorted(map(print_program, expected ^ set(got))))
        assert count_programs(dsl, target, d, inputs, metric=metric) == len(got)


def test_micro_example_order():
    got = [print_program(t) for t in enumerate_programs(MICRO, BOOL, 3)]
    assert got == ["true", "(not true)", "(not (not true))"]
    assert count_programs(MICRO, BOOL, 3) == 3


def test_gt_example():
    dsl = make_dsl(("true", "Bool", "const:true"), ("gt", "Float -> Float -> Bool", "builtin:gt"))
    got = set(enumerate_programs(dsl, BOOL, 2, [FLOAT]))
    assert got == {Prim("true"), App(App(Prim("gt"), Input(0)), Input(0))}


def test_count_edge_cases(pend_dsl):
    assert count_programs(MICRO, BOOL, 0) == 0
    assert list(enumerate_programs(MICRO, BOOL, 0)) == []
    prev = 0
    for d in range(1, 4):
        c = count_programs(pend_dsl, FLOAT, d, [FLOAT] * 3)
        assert c >= prev
        prev = c


@pytest.mark.parametrize(
    "metric, counts",
    [("tree", [10, 330, 11_217_370]), ("size", [10, 30, 370, 2250, 27_610])],
)
def test_pendulum_counts(pend_dsl, metric, counts):
    for d, c in enumerate(counts, 1):
        assert count_programs(pend_dsl, FLOAT, d, [FLOAT] * 3, metric=metric) == c


def test_size_metric_stream_matches_count(pend_dsl):
    n = sum(1 for _ in enumerate_programs(pend_dsl, FLOAT, 4, [FLOAT] * 3, metric="size"))
    assert n == 2250


def test_order_is_deterministic(pbe):
    a = list(enumerate_programs(pbe, FLOAT, 3, [FLOAT] * 3, metric="size"))
    b = list(enumerate_programs(pbe, FLOAT, 3, [FLOAT] * 3, metric="size"))
    assert a == b


@settings(max_examples=30)
@given(st.integers(1, 3), st.sampled_from(["Float", "Bool", "t0"]))
def test_soundness(pbe, d, target):
    tgt = parse_type(target)
    apart = parse_type(target.replace("t0", "t99"))
    for t in enumerate_programs(pbe, tgt, d, [FLOAT] * 3, metric="size"):
        ty = try_infer(t, pbe, [FLOAT] * 3)
        assert ty is not None and unify(ty, apart) is not None
        assert size(t) <= d


def test_tree_metric_respects_depth(pend_dsl):
    for t in enumerate_programs(pend_dsl, FLOAT, 2, [FLOAT] * 3):
        assert depth(t) <= 2


def test_polymorphic_target_yields_both_types():
    dsl = make_dsl(("true", "Bool", "const:true"), ("1", "Float", "const:1"))
    assert set(enumerate_programs(dsl, Var(0), 1)) == {Prim("true"), Prim("1")}


# -- observational equivalence -----------------------------------------------


@pytest.fixture(scope="module")
def probes():
    return np.random.default_rng(0).uniform(-5, 5, (16, 3))


def test_signature_identity(pbe, probes):
    x1 = parse_program("x1", pbe, 3)
    assert observational_signature(x1, probes, pbe) == observational_signature(
        parse_program("((mul x1) 1)", pbe, 3), probes, pbe
    )
    const = observational_signature(parse_program("((sub 3) 1)", pbe, 3), probes, pbe)
    assert len(set(const)) == 1
    assert observational_signature(x1, probes, pbe) != observational_signature(
        parse_program("x2", pbe, 3), probes, pbe
    )


def test_nonfinite_has_distinct_symbol(pend_dsl, probes):
    huge = np.full((2, 3), 1e200)
    sig = observational_signature(parse_program("(sqr x1)", pend_dsl, 3), huge, pend_dsl)
    assert sig[0] is None


def test_has_equivalent_examples(pbe, probes):
    ins = [FLOAT] * 3
    assert has_equivalent_within_depth(parse_program("((mul x1) 1)", pbe, 3), pbe, 1, probes, ins)
    assert has_equivalent_within_depth(parse_program("true", pbe, 3), pbe, 1, probes, ins)


def test_deep_xor_chain_has_no_shallow_equivalent(pbe, probes):
    text = "((gt x1) 0)"
    for i, c in enumerate(["0.5", "1", "3", "-1"]):
        text = f"((xor {text}) ((gt x{i % 3 + 1}) {c}))"
    t = parse_program(text, pbe, 3)
    assert depth(t) == 6
    assert not has_equivalent_within_depth(t, pbe, 2, probes, [FLOAT] * 3)


def test_index_agrees_with_direct_check(pbe, probes):
    idx = EquivalenceIndex(pbe, [FLOAT] * 3, 2, probes, metric="tree")
    for text in ["((mul x1) 1)", "((sub ((mul x1) x2)) x3)", "(sqr ((sub x1) x1))"]:
        t = parse_program(text, pbe, 3)
        assert idx.has_equivalent(t) == has_equivalent_within_depth(t, pbe, 2, probes, [FLOAT] * 3)


def test_oracle_suite_runtime():
    start = time.perf_counter()
    for i in range(len(MICRO_DSLS)):
        dsl, inputs, target, dmax = _case(i)
        for metric in ("tree", "size"):
            for d in range(1, (dmax if metric == "tree" else 4) + 1):
                assert set(enumerate_programs(dsl, target, d, inputs, metric=metric)) == naive_programs(
                    dsl, inputs, target, d, metric
                )
    assert time.perf_counter() - start < 30
