"""Command-line interface: run, enumerate, estimate, condition, bayes-demo.

Settings come from built-in defaults (bayes-demo uses precision 24 and 10**5
trials), then an optional TOML config file (``--config``), then command-line
flags; later sources win.

Exit status: 0 on a value, 1 on a static error (syntax, type, config), 2 when
the single trace of ``run`` ends in bottom.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, fields
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bits import SampleSource, Stream
from .conditioning import (
    GaussianLikelihood, bayes_consistency_report, box_muller, ConsistencyRow,
    pfl_conditioning_term,
)
from .interval import format_rational
from .lang import PflSyntaxError, PflTypeError, check_program, parse
from .machine import Outcome, run_trace
from .valuation import (
    SimpleValuation, monte_carlo, pushforward_exhaustive, pushforward_lazy,
    value_to_json, value_to_text, weighted_stats,
)

MAX_DEPTH = 24
EXIT_OK, EXIT_STATIC, EXIT_BOTTOM = 0, 1, 2
BAYES_EPSILONS = (Fraction(2, 5), Fraction(1, 5), Fraction(1, 10))


class UsageError(Exception):
    """A static problem with the command line, config or input file."""


@dataclass
class RunConfig:
    precision: int = 8
    trials: int = 1000
    depth: int = 8
    seed: int = 0
    fuel: int = 100_000
    max_rounds: int = 64
    format: str = "json"
    bins: Optional[int] = None
    trace_log: Optional[str] = None
    rejection_draws: int = 3000

    def validate(self, command: str) -> None:
        for name in ("precision", "depth", "seed", "fuel", "max_rounds", "trials", "rejection_draws"):
            if getattr(self, name) < 0:
                raise UsageError(f"{name} must be nonnegative")
        if not self.seed < 1 << 64:
            raise UsageError("seed must fit in 64 bits")
        if self.format not in ("json", "csv"):
            raise UsageError("format must be json or csv")
        if self.bins is not None and self.bins < 0:
            raise UsageError("bins must be nonnegative")
        if command in ("estimate", "bayes-demo") and self.trials < 1:
            raise UsageError("trials must be at least 1")
        if command in ("condition", "bayes-demo") and self.max_rounds < 1:
            raise UsageError("max-rounds must be at least 1")
        if command in ("enumerate", "condition") and self.depth > MAX_DEPTH:
            raise UsageError(f"depth {self.depth} exceeds the limit of {MAX_DEPTH}")


CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e.strerror}") from e
    except tomllib.TOMLDecodeError as e:
        raise UsageError(f"bad config {path}: {e}") from e
    out = {}
    for k, v in data.items():
        key = k.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise UsageError(f"unknown config key {k!r}")
        out[key] = v
    return out


COMMAND_DEFAULTS = {"bayes-demo": {"precision": 24, "trials": 100_000}}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = dict(COMMAND_DEFAULTS.get(args.command, {}))
    values.update(load_config(args.config))
    for name in CONFIG_KEYS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    try:
        cfg = RunConfig(**values)
    except TypeError as e:
        raise UsageError(str(e)) from e
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if f.name in ("format", "trace_log") or v is None:
            continue
        if not isinstance(v, int) or isinstance(v, bool):
            raise UsageError(f"{f.name} must be an integer")
    cfg.validate(args.command)
    return cfg


# -- program loading ----------------------------------------------------------

def corpus_names() -> list[str]:
    root = resources.files("pfl") / "examples"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".pfl"))


def read_program_text(name: str) -> str:
    """A file path, or the name of a shipped example."""
    p = Path(name)
    if p.exists():
        return p.read_text(encoding="utf-8")
    stem = name[:-4] if name.endswith(".pfl") else name
    if stem in corpus_names():
        return (resources.files("pfl") / "examples" / f"{stem}.pfl").read_text(encoding="utf-8")
    raise UsageError(f"no such program: {name}")


def load_program(name: str, ground: bool = True):
    text = read_program_text(name)
    try:
        term = parse(text)
        check_program(term, ground=ground)
    except (PflSyntaxError, PflTypeError) as e:
        raise UsageError(f"{name}: {e}") from e
    return term


# -- output -------------------------------------------------------------------

def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def outcome_to_json(out: Outcome) -> dict:
    return {
        "status": "bottom" if out.is_bottom else "value",
        "value": None if out.is_bottom else value_to_json(out.value),
        "text": "bottom" if out.is_bottom else value_to_text(out.value),
        "weight": format_rational(out.weight),
        "steps": out.steps,
        "reason": out.reason,
    }


def valuation_report(command: str, cfg: RunConfig, v: SimpleValuation, extra=None) -> dict:
    mean, sd, mass = weighted_stats(v)
    report = {
        "command": command,
        "precision": cfg.precision,
        "valuation": v.to_json(),
        "totalMass": format_rational(v.total),
        "stats": None if mass == 0 else {"mean": mean, "sd": sd},
    }
    report.update(extra or {})
    return report


def emit_valuation(command: str, cfg: RunConfig, v: SimpleValuation, extra=None) -> str:
    if cfg.format == "csv":
        return _csv(v.csv_rows())
    return _json(valuation_report(command, cfg, v, extra))


# -- commands -----------------------------------------------------------------

def cmd_run(args, cfg: RunConfig, out) -> int:
    term = load_program(args.file)
    src = Stream(SampleSource(cfg.seed))
    if cfg.trace_log:
        with open(cfg.trace_log, "w", encoding="utf-8") as log:
            res = run_trace(term, src, cfg.precision, cfg.fuel, trace_log=log, check=False)
    else:
        res = run_trace(term, src, cfg.precision, cfg.fuel, check=False)
    if cfg.format == "csv":
        d = outcome_to_json(res)
        out.write(_csv([["status", "value", "weight", "steps", "reason"],
                        [d["status"], d["text"], d["weight"], d["steps"], d["reason"] or ""]]))
    else:
        out.write(_json(outcome_to_json(res)))
    return EXIT_BOTTOM if res.is_bottom else EXIT_OK


def cmd_enumerate(args, cfg: RunConfig, out) -> int:
    term = load_program(args.file)
    if args.lazy:
        v = pushforward_lazy(term, cfg.precision, cfg.depth, cfg.fuel)
    else:
        v = pushforward_exhaustive(term, cfg.precision, cfg.depth, cfg.fuel)
    out.write(emit_valuation("enumerate", cfg, v, {"depth": cfg.depth, "lazy": args.lazy}))
    return EXIT_OK


def cmd_estimate(args, cfg: RunConfig, out) -> int:
    term = load_program(args.file)
    v = monte_carlo(term, cfg.precision, cfg.trials, cfg.seed, cfg.fuel, cfg.bins)
    out.write(emit_valuation("estimate", cfg, v,
                             {"trials": cfg.trials, "seed": cfg.seed, "bins": cfg.bins}))
    return EXIT_OK


def cmd_condition(args, cfg: RunConfig, out) -> int:
    thunk = load_program(args.sampler, ground=False)
    test = load_program(args.test, ground=False)
    try:
        term = pfl_conditioning_term(thunk, test)
    except PflTypeError as e:
        raise UsageError(str(e)) from e
    if args.estimate:
        v = monte_carlo(term, cfg.precision, cfg.trials, cfg.seed, cfg.fuel, cfg.bins)
        extra = {"trials": cfg.trials, "seed": cfg.seed}
    else:
        v = pushforward_lazy(term, cfg.precision, cfg.depth, cfg.fuel)
        extra = {"depth": cfg.depth}
    out.write(emit_valuation("condition", cfg, v, extra))
    return EXIT_OK


def cmd_bayes_demo(args, cfg: RunConfig, out) -> int:
    rows = bayes_consistency_report(
        box_muller, GaussianLikelihood(Fraction(1)), Fraction(1), BAYES_EPSILONS,
        n=cfg.precision, trials=cfg.trials, rejection_draws=cfg.rejection_draws,
        seed=cfg.seed, max_rounds=cfg.max_rounds)
    if cfg.format == "csv":
        out.write(_csv([list(ConsistencyRow.CSV_HEADER)] + [r.csv_row() for r in rows]))
    else:
        out.write(_json({
            "command": "bayes-demo", "precision": cfg.precision, "trials": cfg.trials,
            "rejectionDraws": cfg.rejection_draws, "maxRounds": cfg.max_rounds,
            "seed": cfg.seed, "rows": [r.to_json() for r in rows],
        }))
    return EXIT_OK


def cmd_examples(args, cfg: RunConfig, out) -> int:
    for name in corpus_names():
        out.write(name + "\n")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("settings (override the config file)")
    g.add_argument("--config", help="TOML file with default settings")
    g.add_argument("--precision", "-n", type=int, help="precision index n")
    g.add_argument("--trials", type=int, help="Monte Carlo traces")
    g.add_argument("--depth", type=int, help=f"bits to enumerate (at most {MAX_DEPTH})")
    g.add_argument("--seed", type=int, help="64-bit seed")
    g.add_argument("--fuel", type=int, help="step limit per trace")
    g.add_argument("--max-rounds", dest="max_rounds", type=int, help="rejection rounds per draw")
    g.add_argument("--format", choices=("json", "csv"))
    g.add_argument("--bins", type=int, help="bin real outcomes into dyadic cells of width 2^-BINS")
    g.add_argument("--trace-log", dest="trace_log", help="write one JSON line per step (run)")
    g.add_argument("--rejection-draws", dest="rejection_draws", type=int,
                   help="conditioned draws per epsilon (bayes-demo)")


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage, which would read as a bottom outcome
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_STATIC, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pfl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one seeded trace")
    p.add_argument("file")
    _common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("enumerate", help="exact valuation over all bit prefixes")
    p.add_argument("file")
    p.add_argument("--lazy", action="store_true",
                   help="branch only on bits the program reads (depth bounds the bits)")
    _common(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("estimate", help="Monte Carlo valuation from seeded traces")
    p.add_argument("file")
    _common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("condition", help="condition a sampler thunk on a test by rejection")
    p.add_argument("sampler", help="program of type unit -> T")
    p.add_argument("test", help="program of type T -> bool")
    p.add_argument("--estimate", action="store_true", help="Monte Carlo instead of exact")
    _common(p)
    p.set_defaults(func=cmd_condition)

    p = sub.add_parser("bayes-demo", help="rejection versus score on the Gaussian example")
    _common(p)
    p.set_defaults(func=cmd_bayes_demo)

    p = sub.add_parser("examples", help="list the shipped example programs")
    p.set_defaults(func=cmd_examples, config=None)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg, out)
    except UsageError as e:
        print(f"pfl: error: {e}", file=sys.stderr)
        return EXIT_STATIC


if __name__ == "__main__":
    sys.exit(main())
