import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from homlab import cli
from homlab.errors import SchemaError, UsageError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
ADDITIVE = str(CONFIGS / "additive_mac.json")
DEPENDENT = str(CONFIGS / "dependent_bc.json")


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_no_args_is_a_usage_error(capsys):
    with pytest.raises(UsageError) as exc:
        cli.parse_config([])
    assert "region" in str(exc.value) and "simulate-mac" in str(exc.value)
    code, _, err = run([], capsys)
    assert code == 2 and json.loads(err)["error"] == "UsageError"


def test_unknown_subcommand(capsys):
    code, _, err = run(["frobnicate"], capsys)
    assert code == 2


def test_defaults_filled(monkeypatch):
    monkeypatch.delenv(cli.OUT_ENV, raising=False)
    cfg = cli.parse_config(["region", "--kind", "star", "--spec", ADDITIVE])
    o = cfg.overrides
    assert (o["eps"], o["eps_prime"], o["delta"], o["grid"], o["trials"], o["seed"]) == \
        (0.1, 0.2, 0.0, 200, 2000, 0)
    assert cfg.out_dir == cli.DEFAULT_OUT
    monkeypatch.setenv(cli.OUT_ENV, "/tmp/elsewhere")
    assert cli.parse_config(["region", "--kind", "mac", "--spec", ADDITIVE]).out_dir == \
        "/tmp/elsewhere"


def test_alpha_out_of_range(capsys):
    with pytest.raises(SchemaError) as exc:
        cli.parse_config(["region", "--kind", "marton", "--spec", DEPENDENT, "--alpha", "1.5"])
    assert exc.value.field == "alpha"
    code, _, err = run(["region", "--kind", "marton", "--spec", DEPENDENT, "--alpha", "1.5"],
                       capsys)
    assert code == 3 and json.loads(err)["field"] == "alpha"


def test_bad_spec_files(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["region", "--kind", "mac", "--spec", str(bad)], capsys)[0] == 3
    bad.write_text(json.dumps({"kind": "mac", "q": 2}))
    code, _, err = run(["region", "--kind", "mac", "--spec", str(bad)], capsys)
    assert code == 3 and "field" in json.loads(err)
    assert run(["region", "--kind", "mac", "--spec", str(tmp_path / "nope.json")], capsys)[0] == 2
    assert run(["region", "--kind", "marton", "--spec", ADDITIVE], capsys)[0] == 3


def test_region_star_square(tmp_path, capsys):
    code, out, _ = run(["region", "--kind", "star", "--spec", ADDITIVE, "--out", str(tmp_path)],
                       capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    pts = {(round(float(r["R1"]), 3), round(float(r["R2"]), 3)) for r in rows}
    assert pts == {(0.0, 0.0), (0.531, 0.0), (0.531, 0.531), (0.0, 0.531)}
    doc = json.loads((tmp_path / "region_star.json").read_text())
    assert doc["config"]["overrides"]["kind"] == "star"
    assert (tmp_path / "region_star.csv").read_text() == out


@pytest.mark.parametrize("kind", ["cf", "mac", "r1", "r2", "outer-general"])
def test_every_mac_region_kind(kind, tmp_path, capsys):
    code, out, _ = run(["region", "--kind", kind, "--spec", ADDITIVE, "--out", str(tmp_path)],
                       capsys)
    assert code == 0 and out.startswith("cell_id,R1,R2")


def test_marton_region(tmp_path, capsys):
    code, out, _ = run(["region", "--kind", "marton", "--spec", DEPENDENT,
                        "--out", str(tmp_path)], capsys)
    assert code == 0 and len(out.splitlines()) > 2


def test_verify_prop1_and_failure_code(tmp_path, capsys):
    code, out, _ = run(["verify", "--check", "prop1", "--spec", ADDITIVE, "--out", str(tmp_path)],
                       capsys)
    assert code == 0 and "statistic=0" in out and "PASS" in out
    doc = json.loads((tmp_path / "verify_prop1.json").read_text())
    assert doc["reports"][0]["statistic"] == 0
    code, out, _ = run(["verify", "--check", "fullrank", "--q", "2", "--k", "2", "--n", "3",
                        "--out", str(tmp_path)], capsys)
    assert code == 0
    code, out, _ = run(["verify", "--check", "coverage", "--eps", "0.5", "--samples", "50",
                        "--out", str(tmp_path)], capsys)
    assert code == 0
    # 40 samples cannot resolve a 20-element type class to within TV 0.05
    code, out, _ = run(["verify", "--check", "uniformtype", "--n", "6", "--samples", "40",
                        "--out", str(tmp_path)], capsys)
    assert code == 5 and "FAIL" in out


def test_verify_lemma9(tmp_path, capsys):
    code, out, _ = run(["verify", "--check", "lemma9", "--spec", DEPENDENT, "--grid", "50",
                        "--out", str(tmp_path)], capsys)
    assert code == 0


def test_simulate_mac_is_reproducible(tmp_path, capsys):
    argv = ["simulate-mac", "--spec", ADDITIVE, "--rate", "0.25", "0.25", "--n", "8",
            "--trials", "20", "--eps", "0.125", "--eps-prime", "0.6"]
    names = ("simulate_mac.json", "simulate_mac.csv")
    assert run(argv + ["--out", str(tmp_path)], capsys)[0] == 0
    first = [(tmp_path / name).read_bytes() for name in names]
    assert run(argv + ["--out", str(tmp_path)], capsys)[0] == 0
    assert [(tmp_path / name).read_bytes() for name in names] == first


def test_simulate_bc(tmp_path, capsys):
    code, out, _ = run(["simulate-bc", "--spec", DEPENDENT, "--rate", "0.1", "0.1", "--n", "8",
                        "--trials", "5", "--eps", "0.05", "--eps-prime", "1.0",
                        "--out", str(tmp_path)], capsys)
    assert code == 0 and "trials=5" in out


def test_budget_exit_code(tmp_path, capsys):
    code, _, err = run(["export", "--spec", ADDITIVE, "--n", "8", "--k", "6", "6",
                        "--budget", "64", "--out", str(tmp_path)], capsys)
    assert code == 4 and json.loads(err)["error"] == "BudgetExceeded"


def test_export_codebooks(tmp_path, capsys):
    code, out, _ = run(["export", "--spec", ADDITIVE, "--n", "8", "--k", "2", "2",
                        "--out", str(tmp_path)], capsys)
    assert code == 0
    doc = json.loads((tmp_path / "codebook_homologous.json").read_text())
    assert doc["codebook"]["format"] == "homlab.homologous"
    code, _, _ = run(["export", "--spec", DEPENDENT, "--n", "6", "--k", "1", "1",
                      "--out", str(tmp_path)], capsys)
    assert code == 0 and (tmp_path / "codebook_marton.json").exists()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "homlab", "region", "--kind", "mac",
                          "--spec", ADDITIVE, "--out", str(tmp_path)],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0 and res.stdout.startswith("cell_id")
