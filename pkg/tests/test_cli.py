import csv
import io
import json
import shutil
import subprocess
import sys
from fractions import Fraction as F

import pytest

from pfl.cli import COMMAND_DEFAULTS, MAX_DEPTH, RunConfig, UsageError, corpus_names, main
from pfl.interval import interval
from pfl.valuation import SimpleValuation

from oracles import FROZEN


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def run_json(*argv):
    code, text = run(*argv)
    return code, json.loads(text)


# -- run ----------------------------------------------------------------------

def test_run_sample(schema_validator):
    code, d = run_json("run", "sample", "--precision", "2", "--seed", "7")
    assert code == 0
    schema_validator(d, "run.json")
    lo, hi = (F(x) for x in d["value"])
    assert hi - lo == F(1, 4)
    assert (lo * 4).denominator == 1


def test_run_illtyped_is_static_error(capsys):
    code, text = run("run", "illtyped")
    assert code == 1 and text == ""
    assert "error" in capsys.readouterr().err


def test_run_diverge_runs_out_of_fuel(schema_validator):
    code, d = run_json("run", "diverge", "--fuel", "100")
    assert code == 2
    assert d["status"] == "bottom" and d["reason"] == "fuel"
    schema_validator(d, "run.json")


def test_run_accepts_paths(tmp_path):
    p = tmp_path / "prog.pfl"
    p.write_text("succ (succ 1)\n")
    code, d = run_json("run", str(p))
    assert code == 0 and d["value"] == 3


def test_run_missing_file():
    assert run("run", "no-such-program")[0] == 1


def test_run_syntax_error(tmp_path, capsys):
    p = tmp_path / "bad.pfl"
    p.write_text("lam x:nat.\n (x")
    assert run("run", str(p))[0] == 1
    assert "2:" in capsys.readouterr().err


def test_run_csv():
    code, text = run("run", "const3", "--format", "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["status", "value", "weight", "steps", "reason"]
    assert rows[1][:3] == ["value", "3", "1/1"]


def test_trace_log(tmp_path, schema_validator):
    log = tmp_path / "trace.jsonl"
    code, d = run_json("run", "uniform", "--precision", "4", "--trace-log", str(log))
    lines = [json.loads(x) for x in log.read_text().splitlines()]
    assert len(lines) == d["steps"] > 0
    for x in lines:
        schema_validator(x, "trace-step.json")


def test_bad_flags_are_static_errors():
    with pytest.raises(SystemExit) as e:
        main(["run", "sample", "--bogus"])
    assert e.value.code == 1


# -- enumerate / estimate / condition -------------------------------------------

def test_enumerate_sample(schema_validator):
    code, d = run_json("enumerate", "sample", "--precision", "1", "--depth", "1")
    assert code == 0
    schema_validator(d, "valuation.json")
    v = SimpleValuation.from_json(d["valuation"])
    assert v.support == {interval(*k): m for k, m in FROZEN["pushforward_sample_n1"].items()}


def test_enumerate_const3():
    _, d = run_json("enumerate", "const3")
    assert SimpleValuation.from_json(d["valuation"]) == SimpleValuation({3: 1})


def test_enumerate_score_half():
    _, d = run_json("enumerate", "score-half")
    assert d["totalMass"] == "1/2"


def test_enumerate_lazy_matches():
    _, a = run_json("enumerate", "categorical", "--precision", "3", "--depth", "12")
    _, b = run_json("enumerate", "categorical", "--precision", "3", "--depth", "12", "--lazy")
    assert a["valuation"] == b["valuation"]


def test_depth_guard():
    assert run("enumerate", "sample", "--depth", str(MAX_DEPTH + 1))[0] == 1


def test_enumerate_csv():
    _, text = run("enumerate", "sample", "--precision", "1", "--depth", "1", "--format", "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["value", "lo", "hi", "mass", "mass_float"]
    assert rows[-1][0] == "bottom" and len(rows) == 4


def test_estimate(schema_validator):
    code, d = run_json("estimate", "uniform", "--precision", "12", "--trials", "300",
                       "--bins", "2", "--seed", "5")
    assert code == 0
    schema_validator(d, "valuation.json")
    assert d["totalMass"] == "1/1"
    assert len(d["valuation"]["support"]) <= 8
    assert abs(d["stats"]["mean"]) < 0.2


def test_condition(schema_validator):
    code, d = run_json("condition", "rejection-sampler", "rejection-test",
                       "--precision", "3", "--depth", "9")
    assert code == 0
    schema_validator(d, "valuation.json")
    v = SimpleValuation.from_json(d["valuation"])
    assert v.support == {0: F(21, 64), 1: F(21, 64)}
    assert v.bottom == F(11, 32)


def test_condition_estimate(schema_validator):
    code, d = run_json("condition", "rejection-sampler", "rejection-test", "--estimate",
                       "--precision", "3", "--trials", "200")
    assert code == 0
    schema_validator(d, "valuation.json")
    v = SimpleValuation.from_json(d["valuation"])
    assert set(v.support) <= {0, 1}


def test_condition_type_error():
    assert run("condition", "rejection-sampler", "sample")[0] == 1


# -- bayes-demo -------------------------------------------------------------------

SMALL_BAYES = ("bayes-demo", "--precision", "10", "--trials", "400",
               "--rejection-draws", "60", "--seed", "2")


def test_bayes_demo_json(schema_validator):
    code, d = run_json(*SMALL_BAYES)
    assert code == 0
    schema_validator(d, "bayes.json")
    assert [r["epsilon"] for r in d["rows"]] == ["2/5", "1/5", "1/10"]
    fr = [r["acceptedFraction"] for r in d["rows"]]
    assert fr[0] > fr[1] > fr[2]


def test_bayes_demo_csv():
    _, text = run(*SMALL_BAYES, "--format", "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["epsilon", "rejMean", "rejSD", "scoreMean", "scoreSD", "gap",
                       "acceptedFraction", "truncationBound"]
    assert len(rows) == 4


# -- configuration ----------------------------------------------------------------

def test_config_precedence(tmp_path):
    cfg = tmp_path / "pfl.toml"
    cfg.write_text('precision = 1\ndepth = 1\nmax-rounds = 5\n')
    _, d = run_json("enumerate", "sample", "--config", str(cfg))
    assert d["precision"] == 1 and d["depth"] == 1
    _, d = run_json("enumerate", "sample", "--config", str(cfg), "--precision", "2")
    assert d["precision"] == 2 and d["depth"] == 1


def test_command_defaults_then_config(tmp_path):
    assert COMMAND_DEFAULTS["bayes-demo"]["precision"] == 24
    cfg = tmp_path / "pfl.toml"
    cfg.write_text('precision = 9\ntrials = 100\nrejection_draws = 20\n')
    _, d = run_json("bayes-demo", "--config", str(cfg))
    assert d["precision"] == 9 and d["trials"] == 100 and d["rejectionDraws"] == 20


@pytest.mark.parametrize("text", ['nonsense = 3\n', 'precision = "high"\n', 'precision = [\n',
                                  'precision = -1\n'])
def test_bad_config(tmp_path, text):
    cfg = tmp_path / "pfl.toml"
    cfg.write_text(text)
    assert run("run", "sample", "--config", str(cfg))[0] == 1


def test_run_config_validation():
    with pytest.raises(UsageError):
        RunConfig(trials=0).validate("estimate")
    with pytest.raises(UsageError):
        RunConfig(seed=1 << 64).validate("run")
    RunConfig(trials=0).validate("run")


def test_examples_listing():
    code, text = run("examples")
    assert code == 0
    names = text.split()
    assert names == corpus_names()
    for needed in ("uniform", "categorical", "box-muller", "score-gaussian",
                   "rejection-conditioning", "nested-interval"):
        assert needed in names


@pytest.mark.parametrize("name", [n for n in corpus_names() if n not in
                                  ("illtyped", "diverge", "rejection-sampler", "rejection-test")])
def test_every_example_runs(name):
    code, d = run_json("run", name, "--precision", "6", "--seed", "1")
    assert code in (0, 2)
    assert d["status"] in ("value", "bottom")


# -- determinism ---------------------------------------------------------------------

def _console(*argv):
    exe = shutil.which("pfl")
    cmd = [exe] if exe else [sys.executable, "-m", "pfl.cli"]
    return subprocess.run(cmd + list(argv), capture_output=True, check=False)


@pytest.mark.parametrize("argv", [
    ("run", "box-muller", "--precision", "10", "--seed", "3"),
    ("estimate", "score-gaussian", "--precision", "10", "--trials", "50", "--seed", "3"),
    ("enumerate", "categorical", "--precision", "3", "--depth", "12", "--format", "csv"),
])
def test_byte_identical_output(argv):
    a, b = _console(*argv), _console(*argv)
    assert a.returncode == 0
    assert a.stdout == b.stdout and a.stdout


def test_console_exit_codes():
    assert _console("run", "illtyped").returncode == 1
    assert _console("run", "diverge", "--fuel", "100").returncode == 2
