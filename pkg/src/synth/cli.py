"""``synth`` command-line interface.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
Every command that writes an output directory also writes ``manifest.json``
holding the resolved configuration and the arguments that produced it;
``synth rerun MANIFEST --out PATH`` replays those arguments into a new place.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .evaluate import Dataset
from .kernels import backend
from .lang import Dsl, ParseError, load_program, print_program, save_program
from .mlp import MlpError, load_weights
from .types import FLOAT, parse_type

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

# arguments of the running invocation minus --jobs and --out, which never change output bytes
_ARGV: list[str] = []


class ConfigError(Exception):
    """Bad flag value; ``flag`` names the offending option."""

    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _jobs_default() -> int:
    raw = os.environ.get("SYNTH_JOBS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError("SYNTH_JOBS", f"expected an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError("SYNTH_JOBS", "must be >= 1")
    return value


def _positive(flag: str):
    def conv(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} expects an integer, got {text!r}") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{flag} must be >= 1")
        return v

    return conv


def _nonneg(flag: str):
    def conv(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} expects an integer, got {text!r}") from None
        if v < 0:
            raise argparse.ArgumentTypeError(f"{flag} must be >= 0")
        return v

    return conv


def _load_dsl(path: str, flag: str = "--dsl") -> Dsl:
    if path in ("pendulum", "pendulum-extended", "pbe"):
        from .pbe import pbe_dsl
        from .pendulum import pendulum_dsl

        return pbe_dsl() if path == "pbe" else pendulum_dsl(path == "pendulum-extended")
    try:
        return Dsl.load(path)
    except FileNotFoundError:
        raise ConfigError(flag, f"no such file {path!r}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(flag, f"invalid DSL file ({exc})") from None


def _load_oracle(spec: str, dsl: Dsl):
    from .pendulum import expert_program
    from .policy import MlpOracle, ProgramOracle

    kind, _, path = spec.partition(":")
    if kind == "expert" and not path:
        return ProgramOracle(expert_program(dsl), dsl), {"kind": "expert"}
    if not path:
        raise ConfigError("--oracle", "expected program:<file>, mlp:<file> or expert")
    try:
        if kind == "program":
            return ProgramOracle(load_program(path, dsl, 3), dsl), {"kind": "program", "path": path}
        if kind == "mlp":
            return MlpOracle(load_weights(path)), {"kind": "mlp", "path": path}
    except FileNotFoundError:
        raise ConfigError("--oracle", f"no such file {path!r}") from None
    except (ParseError, MlpError, ValueError) as exc:
        raise ConfigError("--oracle", str(exc)) from None
    raise ConfigError("--oracle", f"unknown oracle kind {kind!r}")


def _out_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _write_manifest(out: str, command: str, config: dict) -> None:
    manifest = {
        "tool": "synth", "version": __version__, "command": command, "kernel": backend().NAME,
        "argv": _ARGV, "config": config,
    }
    with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parent(path: str) -> str:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return parent


def _write_json(path: str, data) -> None:
    _parent(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _search_config(args, loss: str, iters: int):
    from .neighborhood import SearchConfig

    try:
        return SearchConfig(
            d=args.depth, n=args.edits, max_iterations=iters, loss=loss, parallelism=args.jobs,
            metric=args.metric, count_raw=args.count_raw, semantic_dedup=args.semantic_dedup,
        )
    except ValueError as exc:
        raise ConfigError("--depth", str(exc)) from None


def _search_dict(cfg) -> dict:
    d = dict(cfg.__dict__)
    d.pop("parallelism")
    return d


# ----------------------------------------------------------------------------
# Commands


def cmd_enumerate(args) -> int:
    from .enumeration import count_programs, enumerate_programs

    dsl = _load_dsl(args.dsl)
    try:
        ty = parse_type(args.type)
    except ValueError as exc:
        raise ConfigError("--type", str(exc)) from None
    inputs = [FLOAT] * args.inputs
    if args.count_only:
        print(count_programs(dsl, ty, args.depth, inputs, args.metric))
        return EXIT_OK
    out = sys.stdout
    for t in enumerate_programs(dsl, ty, args.depth, inputs, args.metric):
        out.write(print_program(t) + "\n")
    return EXIT_OK


def cmd_search(args) -> int:
    from .neighborhood import iterate_search

    dsl = _load_dsl(args.dsl)
    try:
        data = Dataset.from_csv(args.data)
    except FileNotFoundError:
        raise ConfigError("--data", f"no such file {args.data!r}") from None
    except ValueError as exc:
        raise ConfigError("--data", str(exc)) from None
    try:
        target = parse_type(args.type)
    except ValueError as exc:
        raise ConfigError("--type", str(exc)) from None
    init = None
    if args.init:
        try:
            init = load_program(args.init, dsl, data.arity)
        except FileNotFoundError:
            raise ConfigError("--init", f"no such file {args.init!r}") from None
        except ParseError as exc:
            raise ConfigError("--init", str(exc)) from None
    cfg = _search_config(args, args.loss, args.iters)
    trace = iterate_search(dsl, init, data, cfg, [FLOAT] * data.arity, target)
    if args.trace:
        _parent(args.trace)
        trace.to_csv(args.trace)
    if args.out:
        out = _out_dir(args.out)
        save_program(os.path.join(out, "best.sexp"), trace.best)
        trace.to_csv(os.path.join(out, "trace.csv"))
        _write_manifest(out, "search", {
            "dsl": args.dsl, "data": args.data, "init": args.init, "type": args.type, "search": _search_dict(cfg),
        })
    print(print_program(trace.best))
    print(f"loss {trace.best_loss!r}", file=sys.stderr)
    return EXIT_OK


def cmd_pbe(args) -> int:
    from .pbe import PbeConfig, run_pbe

    config = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                config = json.load(fh)
        except FileNotFoundError:
            raise ConfigError("--config", f"no such file {args.config!r}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"invalid JSON ({exc})") from None
    dsl = _load_dsl(config.pop("dsl", args.dsl))
    pbe_fields = {k: config.pop(k) for k in list(config) if k in PbeConfig.__dataclass_fields__}
    pbe_fields.setdefault("num_programs", args.programs)
    pbe_fields["seed"] = args.seed
    try:
        if "target" in pbe_fields:
            pbe_fields["target"] = parse_type(pbe_fields["target"])
        pcfg = PbeConfig(dsl=dsl, **pbe_fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError("--config", str(exc)) from None
    if config:
        raise ConfigError("--config", f"unknown keys {sorted(config)}")
    scfg = _search_config(args, "abs", args.iters)
    out = _out_dir(args.out)
    report = run_pbe(pcfg, scfg)
    report.write(out)
    pbe_dict = {k: v for k, v in pcfg.__dict__.items() if k != "dsl"}
    pbe_dict["target"] = str(pcfg.target)
    pbe_dict["dsl"] = dsl.to_dict()
    _write_manifest(out, "pbe", {"pbe": pbe_dict, "search": _search_dict(scfg)})
    print(f"exact {report.exact_fraction:.3f} improved {report.improved_fraction:.3f}")
    return EXIT_OK


def cmd_imitate(args) -> int:
    import csv

    from .imitate import ImitationConfig, run_imitation

    dsl = _load_dsl(args.dsl)
    oracle, oracle_desc = _load_oracle(args.oracle, dsl)
    init = None
    if args.init:
        try:
            init = load_program(args.init, dsl, 3)
        except FileNotFoundError:
            raise ConfigError("--init", f"no such file {args.init!r}") from None
        except ParseError as exc:
            raise ConfigError("--init", str(exc)) from None
    scfg = _search_config(args, "mse", args.iters)
    try:
        icfg = ImitationConfig(
            N=args.N, M=args.M, K=args.rounds, aggregate=args.aggregate, search=scfg,
            round_iterations=args.round_iters, seed=args.seed, eval_rollouts=args.rollouts,
        )
    except ValueError as exc:
        raise ConfigError("--rounds", str(exc)) from None
    out = _out_dir(args.out)
    result = run_imitation(oracle, icfg, dsl, init)
    with open(os.path.join(out, "trace.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "iter", "loss", "evaluated", "tokens", "program"])
        for r in result.rounds:
            for rec in r.trace.records:
                w.writerow([r.round, rec.iteration, repr(rec.loss), rec.evaluated, rec.tokens, print_program(rec.program)])
    with open(os.path.join(out, "rewards.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "mean", "max", "min"])
        for r in result.rounds:
            if r.stats is not None:
                w.writerow([r.round, repr(r.stats.mean), repr(r.stats.max), repr(r.stats.min)])
    for r in result.rounds:
        save_program(os.path.join(out, f"policy_{r.round}.sexp"), r.program)
    _write_json(os.path.join(out, "summary.json"), {
        "rounds": [
            {
                "round": r.round, "loss": r.loss, "dataset_size": r.dataset_size, "program": print_program(r.program),
                "stats": None if r.stats is None else r.stats.to_dict(),
            }
            for r in result.rounds
        ],
    })
    search = _search_dict(scfg)
    _write_manifest(out, "imitate", {
        "dsl": dsl.to_dict(), "oracle": oracle_desc, "init": args.init, "N": args.N, "M": args.M,
        "rounds": args.rounds, "aggregate": args.aggregate, "round_iterations": args.round_iters,
        "seed": args.seed, "rollouts": args.rollouts, "search": search,
    })
    best = result.best
    print(print_program(best.program))
    return EXIT_OK


def cmd_eval_policy(args) -> int:
    from .pendulum import evaluate_policy

    dsl = _load_dsl(args.dsl)
    oracle, desc = _load_oracle(args.oracle, dsl)
    stats = evaluate_policy(oracle, args.rollouts, np.random.default_rng(args.seed))
    data = stats.to_dict()
    if args.out:
        _write_json(args.out, data)
        _write_manifest(_parent(args.out), "eval-policy", {
            "dsl": dsl.to_dict(), "oracle": desc, "rollouts": args.rollouts, "seed": args.seed,
        })
    print(json.dumps(data, sort_keys=True))
    return EXIT_OK


def _grid(text: str) -> tuple[int, int]:
    a, sep, b = text.lower().partition("x")
    try:
        g = (int(a), int(b)) if sep else None
    except ValueError:
        g = None
    if g is None or min(g) < 1:
        raise argparse.ArgumentTypeError(f"--grid expects AxB with positive integers, got {text!r}")
    return g


def cmd_heatmap(args) -> int:
    from .pendulum import heatmap, write_heatmap

    dsl = _load_dsl(args.dsl)
    oracle, desc = _load_oracle(args.oracle, dsl)
    thetas, thetadots, actions = heatmap(oracle, *args.grid)
    parent = _parent(args.out)
    write_heatmap(args.out, thetas, thetadots, actions)
    _write_manifest(parent, "heatmap", {
        "dsl": dsl.to_dict(), "oracle": desc, "grid": list(args.grid),
    })
    return EXIT_OK


def _strip_flag(argv: Sequence[str], flag: str) -> tuple[list[str], Optional[str]]:
    """``argv`` without ``flag`` (both ``--flag v`` and ``--flag=v`` forms) and the last value seen."""
    out, value, skip = [], None, False
    for i, a in enumerate(argv):
        if skip:
            skip = False
        elif a == flag:
            value = argv[i + 1] if i + 1 < len(argv) else None
            skip = True
        elif a.startswith(flag + "="):
            value = a[len(flag) + 1 :]
        else:
            out.append(a)
    return out, value


def cmd_rerun(args) -> int:
    try:
        with open(args.manifest, encoding="utf-8") as fh:
            manifest = json.load(fh)
        argv = list(manifest["argv"])
    except FileNotFoundError:
        raise ConfigError("MANIFEST", f"no such file {args.manifest!r}") from None
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError("MANIFEST", f"not a synth manifest ({exc})") from None
    return main(["--jobs", str(args.jobs), *argv, "--out", args.out])


# ----------------------------------------------------------------------------
# Parser


def _add_search_flags(p, depth: int = 4, iters: int = 10) -> None:
    p.add_argument("--depth", type=_positive("--depth"), default=depth, help="enumeration budget per edit")
    p.add_argument("--edits", type=_positive("--edits"), default=1, help="max simultaneous edits")
    p.add_argument("--iters", type=_positive("--iters"), default=iters, help="max search iterations")
    p.add_argument("--metric", choices=("size", "tree"), default="size")
    p.add_argument("--count-raw", action="store_true", help="count raw neighborhood yields, not unique programs")
    p.add_argument("--semantic-dedup", action="store_true", help="skip programs with already-seen outputs")


def build_parser() -> argparse.ArgumentParser:
    jobs = _jobs_default()
    parser = _Parser(prog="synth", description="Typed-neighborhood program synthesis.")
    parser.add_argument("--version", action="version", version=f"synth {__version__}")
    parser.add_argument("--jobs", type=_positive("--jobs"), default=jobs, help="worker threads (default: $SYNTH_JOBS or 1)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("enumerate", help="list or count programs of a type")
    p.add_argument("--dsl", required=True)
    p.add_argument("--type", required=True)
    p.add_argument("--depth", type=_positive("--depth"), required=True)
    p.add_argument("--inputs", type=_nonneg("--inputs"), default=0, help="number of Float inputs x1..xN")
    p.add_argument("--metric", choices=("tree", "size"), default="tree")
    p.add_argument("--count-only", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("search", help="iterated local search on a dataset")
    p.add_argument("--dsl", required=True)
    p.add_argument("--data", required=True, help="CSV with header x1..xN,action")
    p.add_argument("--init", help="initial program (S-expression file)")
    p.add_argument("--type", default="Float")
    p.add_argument("--loss", choices=("mse", "abs"), default="mse")
    p.add_argument("--trace", help="write the trace CSV here")
    p.add_argument("--out", help="output directory (best.sexp, trace.csv, manifest.json)")
    _add_search_flags(p, iters=20)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("pbe", help="programming-by-example experiment")
    p.add_argument("--config", help="JSON with PbeConfig fields")
    p.add_argument("--dsl", default="pbe", help="DSL file or a bundled name (pbe, pendulum)")
    p.add_argument("--programs", type=_nonneg("--programs"), default=20)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_search_flags(p)
    p.set_defaults(func=cmd_pbe)

    p = sub.add_parser("imitate", help="imitation loop against an oracle")
    p.add_argument("--oracle", required=True, help="program:<file>, mlp:<file> or expert")
    p.add_argument("--dsl", required=True)
    p.add_argument("--init")
    p.add_argument("--N", type=_positive("--N"), default=5)
    p.add_argument("--M", type=_nonneg("--M"), default=2)
    p.add_argument("--rounds", type=_positive("--rounds"), default=10)
    p.add_argument("--round-iters", type=_positive("--round-iters"), default=1)
    p.add_argument("--aggregate", choices=("full", "initial"), default="full")
    p.add_argument("--rollouts", type=_nonneg("--rollouts"), default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_search_flags(p)
    p.set_defaults(func=cmd_imitate)

    p = sub.add_parser("eval-policy", help="mean/max/min return and balance count")
    p.add_argument("--oracle", required=True)
    p.add_argument("--dsl", default="pendulum")
    p.add_argument("--rollouts", type=_positive("--rollouts"), default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_policy)

    p = sub.add_parser("heatmap", help="policy actions over a theta x theta_dot grid")
    p.add_argument("--oracle", required=True)
    p.add_argument("--dsl", default="pendulum")
    p.add_argument("--grid", type=_grid, default=(101, 101))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("rerun", help="replay the command recorded in a manifest")
    p.add_argument("manifest", metavar="MANIFEST")
    p.add_argument("--out", required=True, help="output path replacing the recorded one")
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    global _ARGV
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        _ARGV, _ = _strip_flag(_strip_flag(argv, "--jobs")[0], "--out")
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    except ConfigError as exc:
        print(f"synth: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - top-level boundary
        print(f"synth: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
