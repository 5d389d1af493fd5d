"""Programming-by-example harness.

Ground-truth programs are sampled top-down from weighted DSL entries and
kept only when they are long enough, vary across their inputs, and have no
observational equivalent among the small programs the search would find in
one enumeration.  Each kept program labels its inputs; local search from an
empty program then tries to recover it.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .enumeration import EquivalenceIndex
from .evaluate import Dataset, normalized_series, program_outputs
from .lang import Dsl, Input, Prim, Term, apply_spine, print_program, token_count
from .neighborhood import SearchConfig, iterate_search
from .types import FLOAT, Fresh, Type, apply, is_ground, params_of, unify, yield_type

EXACT_TOL = 1e-9


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class PbeConfig:
    dsl: Dsl
    num_inputs: int = 10
    input_arity: int = 3
    num_programs: int = 20
    min_tokens: int = 8
    reject_depth: int = 4
    reject_metric: str = "size"
    num_probes: int = 16
    input_weight: float = 3.0
    input_low: float = -5.0
    input_high: float = 5.0
    max_sample_depth: int = 4
    resample_budget: int = 20000
    target: Type = FLOAT
    seed: int = 0

    def __post_init__(self):
        if self.min_tokens < 1:
            raise ValueError("min_tokens must be >= 1")
        if self.reject_depth < 1:
            raise ValueError("reject_depth must be >= 1")
        if self.num_inputs < 1 or self.input_arity < 1 or self.num_programs < 0:
            raise ValueError("num_inputs and input_arity must be >= 1, num_programs >= 0")
        if not self.input_low < self.input_high:
            raise ValueError("input_low must be below input_high")
        if self.max_sample_depth < 1:
            raise ValueError("max_sample_depth must be >= 1")

    @property
    def input_types(self) -> list[Type]:
        return [FLOAT] * self.input_arity


def sample_inputs(cfg: PbeConfig, rng: np.random.Generator, n: Optional[int] = None) -> np.ndarray:
    return rng.uniform(cfg.input_low, cfg.input_high, (cfg.num_inputs if n is None else n, cfg.input_arity))


class _Sampler:
    """Weighted top-down typed sampling with a depth cap (leaves only at the cap)."""

    def __init__(self, cfg: PbeConfig):
        self.cfg = cfg
        self.cands = [(Prim(e.name), e.ty, e.weight) for e in cfg.dsl]
        self.cands += [(Input(i), FLOAT, cfg.input_weight) for i in range(cfg.input_arity)]

    def sample(self, ty: Type, rng: np.random.Generator, depth: int = 1) -> Term:
        fresh = Fresh(10**6)
        opts = []
        for head, cty, w in self.cands:
            if w <= 0:
                continue
            inst = fresh.instantiate(cty)
            ps = params_of(inst)
            if ps and depth >= self.cfg.max_sample_depth:
                continue
            s = unify(yield_type(inst), ty)
            if s is None:
                continue
            params = [apply(s, p) for p in ps]
            if not all(is_ground(p) for p in params):
                continue
            opts.append((head, params, w))
        if not opts:
            raise SamplingError(f"no candidate of type {ty} at depth {depth}")
        weights = np.array([w for _, _, w in opts], dtype=np.float64)
        head, params, _ = opts[rng.choice(len(opts), p=weights / weights.sum())]
        return apply_spine(head, [self.sample(p, rng, depth + 1) for p in params])


@dataclass
class Rejections:
    short: int = 0
    nonfinite: int = 0
    constant: int = 0
    equivalent: int = 0


def _non_constant(out: np.ndarray) -> bool:
    return bool(np.any(out != out[0]))


def rejection_reason(t: Term, cfg: PbeConfig, inputs: np.ndarray, index: EquivalenceIndex) -> Optional[str]:
    """Name of the first filter ``t`` fails (a field of :class:`Rejections`), or None."""
    if token_count(t) < cfg.min_tokens:
        return "short"
    out = program_outputs(t, cfg.dsl, inputs)
    if not np.all(np.isfinite(out)):
        return "nonfinite"
    if not _non_constant(out):
        return "constant"
    if index.has_equivalent(t, cfg.target):
        return "equivalent"
    return None


def sample_ground_truth(
    cfg: PbeConfig,
    rng: np.random.Generator,
    inputs: np.ndarray,
    index: Optional[EquivalenceIndex] = None,
    stats: Optional[Rejections] = None,
) -> Term:
    """Resample until the program passes every rejection filter (or the budget runs out)."""
    sampler = _Sampler(cfg)
    if index is None:
        index = EquivalenceIndex(
            cfg.dsl, cfg.input_types, cfg.reject_depth, sample_inputs(cfg, rng, cfg.num_probes), cfg.reject_metric
        )
    stats = stats if stats is not None else Rejections()
    for _ in range(cfg.resample_budget):
        t = sampler.sample(cfg.target, rng)
        reason = rejection_reason(t, cfg, inputs, index)
        if reason is None:
            return t
        setattr(stats, reason, getattr(stats, reason) + 1)
    raise SamplingError(f"no acceptable program after {cfg.resample_budget} samples: {stats}")


@dataclass
class PbeInstance:
    program_id: int
    truth: Term
    examples: Dataset
    losses: list
    evaluated: list
    programs: list

    @property
    def norm_errors(self) -> list:
        return normalized_series(self.losses)

    @property
    def exact(self) -> bool:
        scale = 1.0 + float(np.abs(self.examples.actions).sum())
        return self.losses[-1] <= EXACT_TOL * scale

    @property
    def improved(self) -> bool:
        return self.losses[-1] < self.losses[0]


@dataclass
class PbeReport:
    instances: list = field(default_factory=list)
    iterations: int = 0

    def padded(self) -> list:
        """Normalized-error series carried forward to a common length (search halts once stuck)."""
        out = []
        for inst in self.instances:
            s = inst.norm_errors
            out.append(s + [s[-1]] * (self.iterations - len(s)))
        return out

    def summary(self) -> list[dict]:
        rows = []
        series = self.padded()
        for it in range(self.iterations):
            vals = [s[it] for s in series]
            rows.append(
                {
                    "iter": it,
                    "mean": statistics.fmean(vals),
                    "median": statistics.median(vals),
                    "std": statistics.pstdev(vals),
                    "n": len(vals),
                }
            )
        return rows

    @property
    def exact_fraction(self) -> float:
        return sum(i.exact for i in self.instances) / len(self.instances) if self.instances else 0.0

    @property
    def improved_fraction(self) -> float:
        return sum(i.improved for i in self.instances) / len(self.instances) if self.instances else 0.0

    def write(self, out_dir) -> None:
        import os

        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "series.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["program_id", "iter", "evaluated", "norm_error"])
            for inst in self.instances:
                for it, (ev, ne) in enumerate(zip(inst.evaluated, inst.norm_errors)):
                    w.writerow([inst.program_id, it, ev, repr(ne)])
        with open(os.path.join(out_dir, "summary.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "mean", "median", "std", "n"])
            for r in self.summary():
                w.writerow([r["iter"], repr(r["mean"]), repr(r["median"]), repr(r["std"]), r["n"]])
        with open(os.path.join(out_dir, "programs.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["program_id", "truth", "found", "loss", "exact"])
            for inst in self.instances:
                w.writerow(
                    [inst.program_id, print_program(inst.truth), print_program(inst.programs[-1]), repr(inst.losses[-1]), int(inst.exact)]
                )


def run_pbe(cfg: PbeConfig, search_cfg: SearchConfig, on_instance=None) -> PbeReport:
    """Sample ``cfg.num_programs`` ground truths and run iterated search on each."""
    if search_cfg.loss != "abs":
        search_cfg = replace(search_cfg, loss="abs")
    rng = np.random.default_rng(cfg.seed)
    probes = sample_inputs(cfg, rng, cfg.num_probes)
    index = EquivalenceIndex(cfg.dsl, cfg.input_types, cfg.reject_depth, probes, cfg.reject_metric)
    report = PbeReport(iterations=search_cfg.max_iterations)
    for pid in range(cfg.num_programs):
        inputs = sample_inputs(cfg, rng)
        truth = sample_ground_truth(cfg, rng, inputs, index)
        examples = Dataset(inputs, program_outputs(truth, cfg.dsl, inputs))
        trace = iterate_search(cfg.dsl, None, examples, search_cfg, cfg.input_types, cfg.target)
        cumulative = np.cumsum([r.evaluated for r in trace.records]).tolist()
        inst = PbeInstance(pid, truth, examples, trace.losses, cumulative, [r.program for r in trace.records])
        report.instances.append(inst)
        if on_instance is not None:
            on_instance(inst)
    return report


def pbe_dsl() -> Dsl:
    import json
    from importlib import resources

    return Dsl.from_dict(json.loads(resources.files("synth").joinpath("data", "pbe_dsl.json").read_text(encoding="utf-8")))


__all__ = [
    "EXACT_TOL",
    "PbeConfig",
    "PbeInstance",
    "PbeReport",
    "Rejections",
    "SamplingError",
    "pbe_dsl",
    "rejection_reason",
    "run_pbe",
    "sample_ground_truth",
    "sample_inputs",
]
