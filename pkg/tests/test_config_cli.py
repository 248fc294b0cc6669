import json

import pytest

from noncoercive import ConfigParseError, preset
from noncoercive.cli import main
from noncoercive.config import load_config, scenario_from_dict
from noncoercive.reports import COLUMNS, SCHEMA_VERSION, read_table
from noncoercive.runner import EXIT_OK, EXIT_USAGE, load_summaries

BASE = {"a": "1", "b": "1", "alpha": 1, "beta": 1, "B": 1, "f": "x*(1-x)", "grid": [7, 7]}


def _write(tmp_path, obj, name="case.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj, indent=2))
    return path


def test_load_config_round_trip(tmp_path):
    sc = load_config(_write(tmp_path, BASE, "mine.json"))
    assert sc.name == "mine"
    assert sc.ladder == [(7, 7)] and sc.scheme == "upwind"
    # the default mode follows the flux: distributional unless a flux lacks a growth bound
    assert sc.mode == "distributional"
    flux = scenario_from_dict({**BASE, "phi": ["t**3", "0"]})
    assert flux.mode == "entropy"


def test_invalid_json_reports_line(tmp_path):
    with pytest.raises(ConfigParseError) as err:
        load_config(_write(tmp_path, '{\n  "a": 1,,\n}'))
    assert err.value.line == 2 and "line 2" in str(err.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigParseError):
        load_config(tmp_path / "absent.json")


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"mode": "weak"}, "mode"),
        ({"scheme": "lax"}, "scheme"),
        ({"grid": [0, 3]}, "grid"),
        ({"alpha": "x"}, "alpha"),
        ({"phi": ["t**2"]}, "phi"),
        ({"solver": {"picard_tol": 1e-9, "speed": 3}}, "solver"),
        ({"mode": "distributional", "phi": ["t**2", "0"]}, "phi_growth_C"),
        ({"k_list": "1"}, "k_list"),
    ],
)
def test_field_errors(patch, field):
    with pytest.raises(ConfigParseError) as err:
        scenario_from_dict({**BASE, **patch})
    assert err.value.field == field


def test_unknown_key_and_missing_datum():
    with pytest.raises(ConfigParseError, match="unknown key"):
        scenario_from_dict({**BASE, "colour": "red"})
    raw = dict(BASE)
    del raw["f"]
    with pytest.raises(ConfigParseError) as err:
        scenario_from_dict(raw)
    assert err.value.field == "f"
    with pytest.raises(ConfigParseError):
        scenario_from_dict([1, 2])


def test_unknown_preset():
    with pytest.raises(ConfigParseError, match="unknown preset"):
        preset("no-such-preset")


def test_cli_presets(capsys):
    assert main(["presets"]) == EXIT_OK
    out = capsys.readouterr().out
    for name in ("paper-core", "spike", "paper-core-mms"):
        assert name in out


def test_cli_solve_writes_tables(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["solve", "paper-core", "--grid", "15", "--out", str(out), "--dump-matrix"]) == EXIT_OK
    level = out / "level_15x15"
    for table in ("solve", "estimates", "residuals"):
        header, *rows = (level / f"{table}.csv").read_text().splitlines()
        assert header.split(",") == COLUMNS[table]
        assert rows and all(r.startswith(f"{SCHEMA_VERSION},") for r in rows)
    assert (level / "matrix.mtx").exists() and (level / "matrix_rhs.mtx").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["exit_code"] == 0 and summary["passed"] is True
    assert "pass" in capsys.readouterr().out.lower()


def test_cli_json_format(tmp_path):
    out = tmp_path / "run"
    assert main(["verify", "linear-sanity", "--grid", "7x9", "--k-list", "0", "1", "--format", "json",
                 "--out", str(out)]) == EXIT_OK
    doc = json.loads((out / "level_7x9" / "estimates.json").read_text())
    assert doc["schema_version"] == SCHEMA_VERSION and doc["table"] == "estimates"
    assert sorted({r["k"] for r in doc["rows"]}) == [0.0, 1.0]
    rows = read_table(out / "level_7x9" / "estimates.json")
    assert len(rows) == len(doc["rows"])


def test_cli_rerun_is_byte_identical(tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        assert main(["sequence", "spike", "--grid", "15", "--n-list", "1", "4", "16", "--out", str(d)]) == EXIT_OK
    files = sorted(p.relative_to(dirs[0]) for p in dirs[0].rglob("*") if p.is_file())
    assert files
    for rel in files:
        assert (dirs[0] / rel).read_bytes() == (dirs[1] / rel).read_bytes(), rel


def test_cli_mms(tmp_path):
    out = tmp_path / "mms"
    assert main(["mms", "linear-sanity-mms", "--ladder", "7", "15", "31", "--out", str(out)]) == EXIT_OK
    rows = read_table(out / "convergence.csv")
    assert [int(r["nx"]) for r in rows] == [7, 15, 31]


def test_cli_usage_errors(tmp_path, capsys):
    assert main(["mms", "linear-sanity-mms", "--ladder", "7"]) == EXIT_USAGE
    assert "InsufficientLevels" in capsys.readouterr().err
    bad = _write(tmp_path, {**BASE, "b": "-1"})
    assert main(["solve", str(bad)]) == EXIT_USAGE
    assert "(ab)" in capsys.readouterr().err
    assert main(["solve", str(_write(tmp_path, "{\n,", "broken.json"))]) == EXIT_USAGE
    assert "line" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["solve", "paper-core", "--grid", "zero"])


def test_cli_report(tmp_path, capsys):
    for name in ("linear-sanity", "bco-limit"):
        assert main(["solve", name, "--grid", "7", "--out", str(tmp_path / name)]) == EXIT_OK
    assert len(load_summaries(tmp_path)) == 2
    capsys.readouterr()
    assert main(["report", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "linear-sanity" in out and "bco-limit" in out


def test_scheme_reaches_solver_config():
    sc = scenario_from_dict({**BASE, "scheme": "central", "solver": {"picard_tol": 1e-9}})
    assert sc.solver.scheme == "central" and sc.solver.picard_tol == 1e-9
    assert preset("paper-core-mms", scheme="central").solver.scheme == "central"
