import math

import numpy as np
import pytest

from conftest import make_dsl
from synth.evaluate import (
    NONFINITE,
    Closure,
    Dataset,
    evaluate,
    imitation_loss,
    normalized_series,
    pbe_error,
    program_outputs,
    value_as_float,
)
from synth.lang import parse_program

X = make_dsl(
    ("if", "Bool -> t0 -> t0 -> t0", "builtin:if"),
    ("gt", "Float -> Float -> Bool", "builtin:gt"),
    ("mul", "Float -> Float -> Float", "builtin:mul"),
    ("exp", "Float -> Float", "builtin:exp"),
    ("sign", "Float -> Float", "builtin:sign"),
    ("true", "Bool", "const:true"),
    ("0", "Float", "const:0"),
    ("1", "Float", "const:1"),
    ("big", "Float", "const:1000"),
)


def P(text, dsl=X):
    return parse_program(text, dsl, 3)


def test_expert_hand_values(expert, pend_dsl):
    assert evaluate(expert, pend_dsl, (1.0, 0.0, 0.0)) == 0.0
    assert evaluate(expert, pend_dsl, (-1.0, 0.0, 0.5)) == 1.0


def test_gt_is_strict(pend_dsl):
    assert evaluate(parse_program("((gt x1) 0.6)", pend_dsl, 3), pend_dsl, (0.6, 0, 0)) is False


def test_nonfinite():
    assert evaluate(P("(exp big)"), X, (0, 0, 0)) is NONFINITE
    assert evaluate(P("((mul (exp big)) 0)"), X, (0, 0, 0)) is NONFINITE
    assert value_as_float(NONFINITE) != value_as_float(NONFINITE)


def test_if_is_lazy():
    assert evaluate(P("(((if true) 1) (exp big))"), X, (0, 0, 0)) == 1.0
    assert evaluate(P("(((if ((gt x1) 0)) (exp big)) 0)"), X, (-1, 0, 0)) == 0.0


def test_sign_zero():
    assert evaluate(P("(sign x1)"), X, (0.0, 0, 0)) == 0.0


def test_partial_application_is_closure():
    assert isinstance(evaluate(P("(gt x1)"), X, (0, 0, 0)), Closure)


def test_imitation_loss_examples(expert, pend_dsl):
    obs = np.random.default_rng(0).normal(size=(50, 3))
    data = Dataset(obs, program_outputs(expert, pend_dsl, obs))
    assert imitation_loss(expert, data, pend_dsl) == 0.0
    ones = Dataset(obs[:4], np.ones(4))
    assert imitation_loss(P("0"), ones, X) == 1.0
    assert imitation_loss(P("true"), ones, X) == math.inf
    assert imitation_loss(P("(exp big)"), ones, X) == math.inf


def test_loss_extensional():
    obs = np.random.default_rng(1).normal(size=(20, 3))
    data = Dataset(obs, obs[:, 0] * 0.5)
    assert imitation_loss(P("x1"), data, X) == imitation_loss(P("((mul x1) 1)"), data, X)


def test_pbe_error_examples():
    d = Dataset(np.zeros((2, 3)), np.array([1.0, -1.0]))
    assert pbe_error(P("0"), d, X) == 2.0
    assert pbe_error(P("true"), Dataset(np.zeros((2, 3)), np.array([1.0, 0.0])), X) == 1.0
    assert pbe_error(P("(exp big)"), d, X) == math.inf


def test_normalized_series():
    assert normalized_series([4.0, 2.0, 1.0]) == [1.0, 0.5, 0.25]
    assert normalized_series([0.0, 0.0]) == [0.0, 0.0]
    assert normalized_series([]) == []


def test_dataset_validation_and_csv(tmp_path):
    with pytest.raises(ValueError):
        Dataset(np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 3)), np.array([0.0, np.nan]))
    d = Dataset(np.array([[0.1, -2.5, 1e-17]]), np.array([0.3]))
    d.to_csv(tmp_path / "d.csv")
    assert (tmp_path / "d.csv").read_text().splitlines()[0] == "x1,x2,x3,action"
    back = Dataset.from_csv(tmp_path / "d.csv")
    assert np.array_equal(back.obs, d.obs) and np.array_equal(back.actions, d.actions)
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        Dataset.from_csv(tmp_path / "bad.csv")


def test_dataset_concat():
    a = Dataset(np.zeros((2, 3)), np.zeros(2))
    assert len(a.concat(Dataset.empty(3))) == 2
