import numpy as np
import pytest

from synth.enumeration import EquivalenceIndex, has_equivalent_within_depth
from synth.evaluate import program_outputs
from synth.infer import infer
from synth.lang import parse_program, token_count
from synth.neighborhood import SearchConfig
from synth.pbe import (
    PbeConfig,
    PbeReport,
    Rejections,
    SamplingError,
    rejection_reason,
    run_pbe,
    sample_ground_truth,
    sample_inputs,
)
from synth.types import FLOAT


@pytest.fixture(scope="module")
def setup(pbe):
    cfg = PbeConfig(pbe)
    rng = np.random.default_rng(0)
    probes = sample_inputs(cfg, rng, cfg.num_probes)
    index = EquivalenceIndex(pbe, cfg.input_types, cfg.reject_depth, probes, cfg.reject_metric)
    return cfg, sample_inputs(cfg, rng), index, probes


@pytest.mark.parametrize(
    "text, reason",
    [
        ("((mul x1) x2)", "short"),
        ("((mul ((sub 1) 1)) ((mul ((sub x1) x2)) 0))", "constant"),
        ("((mul ((mul x1) x1)) ((mul x1) ((mul x1) 1)))", "equivalent"),
        ("((sub ((mul x1) x2)) ((mul ((sub x3) 0.5)) ((sub x2) 3)))", None),
    ],
)
def test_filters_on_hand_built_terms(pbe, setup, text, reason):
    cfg, inputs, index, _ = setup
    assert rejection_reason(parse_program(text, pbe, 3), cfg, inputs, index) == reason


def test_nonfinite_filter(pbe, setup):
    cfg, inputs, index, _ = setup
    huge = np.full_like(inputs, 1e200)
    t = parse_program("((mul ((mul x1) x2)) ((mul x3) ((sub x1) 1)))", pbe, 3)
    assert rejection_reason(t, cfg, huge, index) == "nonfinite"


def test_equivalence_filter_agrees_with_direct_check(pbe, setup):
    cfg, inputs, index, probes = setup
    for text in ["((mul ((mul x1) x1)) ((mul x1) ((mul x1) 1)))", "((sub ((mul x1) x2)) ((mul ((sub x3) 0.5)) ((sub x2) 3)))"]:
        t = parse_program(text, pbe, 3)
        assert index.has_equivalent(t) == has_equivalent_within_depth(t, pbe, 4, probes, cfg.input_types, metric="size")


def test_accepted_samples_pass_filters(pbe, setup):
    cfg, inputs, index, _ = setup
    rng = np.random.default_rng(1)
    stats = Rejections()
    for _ in range(5):
        t = sample_ground_truth(cfg, rng, inputs, index, stats)
        assert infer(t, pbe, cfg.input_types) == FLOAT
        assert token_count(t) >= cfg.min_tokens
        out = program_outputs(t, pbe, inputs)
        assert np.all(np.isfinite(out)) and len(set(out.tolist())) > 1
        assert not index.has_equivalent(t)
    assert stats.short + stats.constant + stats.equivalent > 0


def test_sampling_is_deterministic(pbe, setup):
    cfg, inputs, index, _ = setup
    a = [sample_ground_truth(cfg, np.random.default_rng(3), inputs, index) for _ in range(2)]
    assert a[0] == a[1]


def test_budget_exhaustion(pbe, setup):
    _, inputs, index, _ = setup
    cfg = PbeConfig(pbe, min_tokens=500, resample_budget=20)
    with pytest.raises(SamplingError):
        sample_ground_truth(cfg, np.random.default_rng(0), inputs, index)


def test_inputs_range_and_shape(pbe):
    cfg = PbeConfig(pbe)
    x = sample_inputs(cfg, np.random.default_rng(0))
    assert x.shape == (10, 3) and np.all((x >= -5) & (x < 5))


@pytest.mark.parametrize("kw", [{"min_tokens": 0}, {"reject_depth": 0}, {"input_low": 1, "input_high": 0}])
def test_config_validation(pbe, kw):
    with pytest.raises(ValueError):
        PbeConfig(pbe, **kw)


def test_small_run_report(pbe, tmp_path):
    cfg = PbeConfig(pbe, num_programs=3, seed=5)
    report = run_pbe(cfg, SearchConfig(d=3, max_iterations=3))
    assert len(report.instances) == 3
    for inst in report.instances:
        assert inst.norm_errors[0] in (0.0, 1.0)
        assert all(b <= a for a, b in zip(inst.losses, inst.losses[1:]))
        assert inst.evaluated == sorted(inst.evaluated)
    assert [r["n"] for r in report.summary()] == [3, 3, 3]
    report.write(tmp_path)
    series = (tmp_path / "series.csv").read_text().splitlines()
    assert series[0] == "program_id,iter,evaluated,norm_error"
    assert (tmp_path / "summary.csv").read_text().splitlines()[0] == "iter,mean,median,std,n"
    again = run_pbe(cfg, SearchConfig(d=3, max_iterations=3))
    assert [i.losses for i in again.instances] == [i.losses for i in report.instances]


def test_padding_carries_last_value():
    class Inst:
        def __init__(self, e):
            self.norm_errors = e

    r = PbeReport([Inst([1.0, 0.5]), Inst([1.0, 0.2, 0.1])], iterations=3)
    assert r.padded() == [[1.0, 0.5, 0.5], [1.0, 0.2, 0.1]]
    assert r.summary()[2]["mean"] == pytest.approx(0.3)
