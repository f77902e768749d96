import json
import math
import subprocess
import sys
from importlib.resources import files
from pathlib import Path

import jsonschema
import pytest

from cli_cases import DATA, GOLDEN_CASES, SAMPLES
from mediv.cli import main

GOLDEN = Path(__file__).parent / "golden"
SCHEMA = json.loads(files("mediv").joinpath("report.schema.json").read_text())


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _close(a, b, path="$"):
    if isinstance(a, float) or isinstance(b, float):
        assert isinstance(a, (int, float)) and isinstance(b, (int, float)), path
        assert math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12), f"{path}: {a} != {b}"
    elif isinstance(a, dict):
        assert list(a) == list(b), path
        for key in a:
            _close(a[key], b[key], f"{path}.{key}")
    elif isinstance(a, list):
        assert len(a) == len(b), path
        for i, (x, y) in enumerate(zip(a, b)):
            _close(x, y, f"{path}[{i}]")
    else:
        assert a == b, f"{path}: {a!r} != {b!r}"


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden(name, capsys):
    code, out, _ = run(GOLDEN_CASES[name], capsys)
    assert code == 0
    expected = (GOLDEN / name).read_text(encoding="utf-8")
    if name.endswith(".json"):
        report = json.loads(out)
        jsonschema.validate(report, SCHEMA)
        _close(report, json.loads(expected))
    else:
        assert out == expected


def test_shannon_values(capsys):
    _, out, _ = run(["shannon", "--counts", DATA / "uniform4.csv", "--format", "json"], capsys)
    rep = json.loads(out)
    assert rep["s_traditional"] == pytest.approx(math.log(4), abs=1e-12)
    _, out, _ = run(["shannon", "--counts", DATA / "uniform4.csv", "--format", "json",
                     "--log-base", "bits"], capsys)
    assert json.loads(out)["s_traditional"] == pytest.approx(2.0, abs=1e-12)


def test_estimate_codependence(capsys):
    _, out, _ = run(["estimate", "--counts", DATA / "five.csv", "--constraint",
                     DATA / "codependence.json", *SAMPLES, "--format", "json"], capsys)
    rep = json.loads(out)
    sp = {s["label"]: s for s in rep["species"]}
    diff = sp["s2"]["posterior_mean"] - 2 * sp["s5"]["posterior_mean"]
    se = math.hypot(sp["s2"]["posterior_stderr"], 2 * sp["s5"]["posterior_stderr"])
    assert abs(diff) <= 4 * se
    assert rep["s_me"] == rep["log_zeta"] - rep["beta"] * 0.0
    assert rep["diagnostics"]["solver"]["converged"]


def test_estimate_without_constraint_has_zero_beta(capsys):
    _, out, _ = run(["estimate", "--counts", DATA / "five.csv", *SAMPLES, "--format", "json"],
                    capsys)
    rep = json.loads(out)
    assert rep["beta"] == 0.0
    assert rep["constraint"] is None
    assert rep["s_me"] == pytest.approx(-math.log(21 * 22 * 23 * 24), abs=1e-12)


def test_json_round_trips_and_is_deterministic(capsys):
    argv = ["estimate", "--counts", DATA / "five.csv", "--constraint",
            DATA / "codependence.json", *SAMPLES, "--format", "json"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv, capsys)
    assert a == b
    assert json.dumps(json.loads(a), indent=2) + "\n" == a


@pytest.mark.parametrize("cmd", ["estimate", "compare"])
@pytest.mark.parametrize("fmt", ["text", "json"])
def test_thread_count_invariance(cmd, fmt, capsys):
    base = [cmd, "--counts", DATA / "five.csv", "--constraint", DATA / "codependence.json",
            "--samples", "150000", "--seed", "3", "--format", fmt]
    _, one, _ = run([*base, "--threads", "1"], capsys)
    _, four, _ = run([*base, "--threads", "4"], capsys)
    assert one == four


def test_seed_env_fallback(capsys, monkeypatch):
    base = ["estimate", "--counts", DATA / "five.csv", "--constraint",
            DATA / "codependence.json", "--samples", "5000", "--format", "json"]
    monkeypatch.setenv("MEDIV_SEED", "99")
    _, env_out, _ = run(base, capsys)
    assert json.loads(env_out)["sampling"]["seed"] == 99
    _, flag_out, _ = run([*base, "--seed", "5"], capsys)
    assert json.loads(flag_out)["sampling"]["seed"] == 5
    monkeypatch.delenv("MEDIV_SEED")
    _, default_out, _ = run(base, capsys)
    assert json.loads(default_out)["sampling"]["seed"] == 0


def test_compare_flags_scale_difference(capsys):
    _, out, _ = run(["compare", "--counts", DATA / "five.csv", "--counts",
                     DATA / "five_x10.csv", *SAMPLES, "--format", "json"], capsys)
    rep = json.loads(out)
    a, b = rep["rows"]
    assert a["s_traditional"] == b["s_traditional"]
    assert a["s_me"] == pytest.approx(math.lgamma(21) - math.lgamma(25), abs=1e-12)
    assert b["s_me"] == pytest.approx(math.lgamma(201) - math.lgamma(205), abs=1e-12)
    assert len(rep["flags"]) == 1


def test_compare_uniform_no_warnings(capsys):
    code, out, err = run(["compare", "--counts", DATA / "uniform4.csv", *SAMPLES,
                          "--format", "json"], capsys)
    assert code == 0 and err == ""
    rep = json.loads(out)
    assert rep["warnings"] == [] and rep["flags"] == []


@pytest.mark.parametrize(
    "argv, code, needle",
    [
        (["shannon", "--counts", DATA / "malformed.csv"], 2, "row 3"),
        (["shannon", "--counts", DATA / "duplicate.csv"], 2, "duplicate"),
        (["shannon", "--counts", DATA / "missing.csv"], 2, "missing.csv"),
        (["estimate", "--counts", DATA / "five.csv", "--constraint", DATA / "broken.json"],
         2, "broken.json:"),
        (["estimate", "--counts", DATA / "five.csv", "--constraint",
          DATA / "unknown_species.json"], 2, "s9"),
        (["estimate", "--counts", DATA / "five.csv", "--samples", "10"], 2, "samples"),
        (["shannon", "--counts", DATA / "empty.csv"], 3, "n = 0"),
        (["shannon", "--counts", DATA / "single.csv"], 3, "k >= 2"),
        (["compare", "--counts", DATA / "single.csv"], 3, "k >= 2"),
        (["estimate", "--counts", DATA / "five.csv", "--constraint",
          DATA / "unattainable.json", *SAMPLES], 4, "(-2, 1)"),
        (["compare", "--counts", DATA / "five.csv", "--constraint",
          DATA / "unattainable.json", *SAMPLES], 4, "attainable"),
        (["estimate", "--counts", DATA / "five.csv", "--constraint",
          DATA / "degenerate.json", *SAMPLES], 5, "constant"),
    ],
)
def test_exit_codes(argv, code, needle, capsys):
    got, out, err = run(argv, capsys)
    assert got == code
    assert out == ""
    assert needle in err


def test_malformed_row_cites_line_and_column(capsys):
    _, _, err = run(["shannon", "--counts", DATA / "malformed.csv"], capsys)
    assert "malformed.csv:3:5:" in err


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["estimate"])
    assert exc.value.code == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mediv", "shannon", "--counts",
                           str(DATA / "uniform4.csv")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "S_traditional = 1.386294 nats" in proc.stdout
