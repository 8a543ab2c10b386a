import json

import pytest

from magheat.cli import main
from magheat.config import ConfigError, load_config, parse_config_text, schema_text
from magheat.runner import RunRecord, recheck, run, sweep, worker_count

QUICK_GAUGE = """\
[field]
dimension = 2
preset = two-bump
flux = 0.7

[gauge]
points = 400
sample_rows = 5
"""

QUICK_EVOLVE = """\
[field]
flux = 0.5

[grid]
nodes = 600

[evolve]
s_max = 8
ds = 0.02
"""


def write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_defaults_and_digest():
    a = load_config(None, "evolve")
    b = load_config(None, "evolve")
    assert a.digest() == b.digest()
    assert a["evolve"]["ds"] == 1e-3
    assert a["grid"]["nodes"] == 4000
    c = a.with_value("field", "flux", 0.3)
    assert c["field"]["flux"] == 0.3 and c.digest() != a.digest()
    assert "[evolve]" in schema_text()


def test_malformed_value_names_key_and_line():
    text = "[field]\nflux = 0.5\n\n[evolve]\nds = fast\n"
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text, "evolve")
    msg = str(exc.value)
    assert "ds" in msg and "line 5" in msg


@pytest.mark.parametrize("text,needle", [
    ("[field]\nfluxx = 0.5\n", "fluxx"),
    ("[fields]\nflux = 0.5\n", "fields"),
    ("[evolve]\nds = -1\n", "ds"),
    ("[field]\ndimension = 3\npreset = radial-bump\n", "preset"),
    ("[evolve]\ns_max = 16\nfit_window = 2:16\n", "fit_window"),
    ("[grid]\nrho_min = 5\nrho_max = 1\n", "rho_min"),
    ("not an ini file", ""),
])
def test_config_errors(text, needle):
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text, "evolve")
    assert needle in str(exc.value)


def test_cli_gauge_check_writes_record(tmp_path, capsys):
    cfg = write(tmp_path, QUICK_GAUGE)
    out = tmp_path / "runs" / "g"
    assert main(["gauge-check", "--config", str(cfg), "--out", str(out)]) == 0
    assert "PASS transversality" in capsys.readouterr().out
    data = json.loads((out / "record.json").read_text())
    assert data["experiment"] == "gauge-check"
    assert recheck(data)
    assert recheck(RunRecord.from_json(data))
    assert (out / "gauge_samples.csv").read_text().startswith("x1,x2,B12,A1,A2")
    index = (out.parent / "runs.jsonl").read_text().splitlines()
    assert json.loads(index[-1])["dir"] == "g"


def test_recheck_detects_tampering(tmp_path):
    rec = run(parse_config_text(QUICK_GAUGE, "gauge-check"), tmp_path / "r")
    data = rec.to_json()
    data["assertions"][0]["measured"] = 1.0
    assert not recheck(data)


def test_runs_are_deterministic(tmp_path):
    cfg = parse_config_text("[field]\npreset = two-bump\nflux = 0.7\n[nu]\nmethod = numeric\nn_theta = 128\nradii = 0.5:2:3\n",
                            "nu-profile")
    run(cfg, tmp_path / "a")
    run(cfg, tmp_path / "b")
    a = (tmp_path / "a" / "nu_profile.csv").read_bytes()
    assert a == (tmp_path / "b" / "nu_profile.csv").read_bytes()
    assert (tmp_path / "a" / "plot.gp").exists()


def test_cli_flag_form_and_overrides(tmp_path, capsys):
    out = tmp_path / "h"
    code = main(["--hardy", "--flux", "0.5", "--weight", "none", "--out", str(out)])
    assert code == 0
    data = json.loads((out / "record.json").read_text())
    assert data["config"]["values"]["field"]["flux"] == 0.5
    assert data["config"]["values"]["hardy"]["weight"] in (None, "none")


def test_cli_exit_codes(tmp_path, capsys):
    bad = write(tmp_path, "[field]\nflux = abc\n")
    assert main(["evolve", "--config", str(bad)]) == 2
    assert "flux" in capsys.readouterr().err
    assert main(["hardy", "--flux", "1.0", "--weight", "lw", "--out", str(tmp_path / "x")]) == 3
    assert main(["--schema"]) == 0


def test_sweep_empty_and_failures(tmp_path):
    cfg = parse_config_text(QUICK_EVOLVE, "evolve")
    assert sweep(cfg, "flux", [], tmp_path / "empty") == []
    recs = sweep(cfg, "R", [1.0, -1.0], tmp_path / "s", workers=1)
    assert len(recs) == 2
    assert recs[0].passed and recs[0].error is None
    assert recs[1].error is not None and not recs[1].passed
    lines = (tmp_path / "s" / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("R,passed,slope")
    assert len(lines) == 3
    with pytest.raises(ConfigError):
        sweep(cfg, "colour", [1])


def test_cli_sweep(tmp_path, capsys):
    cfg = write(tmp_path, QUICK_EVOLVE)
    code = main(["evolve", "--config", str(cfg), "--sweep", "flux=0,0.5", "--out", str(tmp_path / "sw")])
    assert code == 0
    assert (tmp_path / "sw" / "flux=0.5" / "record.json").exists()
    assert main(["evolve", "--sweep", "colour=1"]) == 2


def test_worker_count(monkeypatch):
    monkeypatch.setenv("MAGHEAT_THREADS", "1")
    assert worker_count() == 1
    monkeypatch.setenv("MAGHEAT_THREADS", "many")
    with pytest.raises(ConfigError):
        worker_count()
    monkeypatch.delenv("MAGHEAT_THREADS")
    assert worker_count() >= 1


@pytest.mark.slow
def test_full_report(tmp_path):
    cfg = parse_config_text(QUICK_EVOLVE + "[gauge]\npoints = 400\n[hardy]\ntrials = 100\n", "full-report")
    rec = run(cfg, tmp_path / "full")
    names = {a.name for a in rec.assertions}
    assert "gamma_fit_vs_nu" in names
    assert any(n.startswith("hardy/") for n in names)
    assert rec.passed, [a for a in rec.assertions if not a.passed]
