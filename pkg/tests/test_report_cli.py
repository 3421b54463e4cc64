import csv
import json

import pytest

from annealemu.cli import main
from annealemu.report import ConfigError, run_report


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_empty_sweep_header_only(tmp_path):
    run_report({"sweeps": [{"kind": "table1", "name": "t", "jt": []}]}, tmp_path)
    assert read_rows(tmp_path / "t.csv") == [[
        "JT", "N_M", "N_T", "model", "noise", "tvd", "fidelity",
        "total_steps", "bound_steps", "bound_steps_spectral", "reference_steps"]]
    assert json.loads((tmp_path / "manifest.json").read_text())["sweeps"][0]["files"] == ["t.csv"]


def test_schema_error_lists_keys():
    with pytest.raises(ConfigError) as exc:
        run_report({"sweeps": [{"kind": "table1", "jt": [1], "colour": 3}], "bogus": 1})
    assert "bogus" in str(exc.value) and "sweeps[0].colour" in str(exc.value)


def test_report_is_deterministic(tmp_path):
    cfg = {"seed": 3, "sweeps": [
        {"kind": "table1", "name": "t", "jt": [0.1, 1]},
        {"kind": "noise", "name": "n", "settings": [[1.06, 2, 2]], "presets": ["ideal", "noisy-1"]},
        {"kind": "svmc", "name": "s", "beta": [3.19], "n_sweeps": 51, "n_trials": 20, "reference_jt": 1},
        {"kind": "runtime", "name": "r", "plans": [[100, 70, 2]]},
    ]}
    a, b = tmp_path / "a", tmp_path / "b"
    run_report(cfg, a)
    run_report(cfg, b)
    for name in ["t.csv", "n.csv", "s.csv", "r.csv", "t_populations.svg", "r.svg", "manifest.json"]:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    rt = read_rows(a / "r.csv")
    assert rt[1][3] == rt[1][4] == "14025"


def test_cli_commands(tmp_path, capsys):
    main(["runtime", "--jt", "100", "--nm", "70", "--nt", "2"])
    doc = json.loads(capsys.readouterr().out)
    assert doc["circuit_ns"] == 14025 and doc["ratio"] > 100
    main(["search", "--jt", "1"])
    doc = json.loads(capsys.readouterr().out)
    assert (doc["N_M"], doc["N_T"]) == (5, 1)
    sol = tmp_path / "sol.json"
    main(["solve", "--jt", "1", "--out", str(sol)])
    assert "populations" in json.loads(sol.read_text())
    main(["emulate", "--jt", "1.06", "--nm", "2", "--nt", "2", "--noise", "noisy-1",
          "--circuit-out", str(tmp_path / "c.json")])
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["JT", "N_M", "N_T", "model", "noise", "tvd", "fidelity"]
    assert json.loads((tmp_path / "c.json").read_text())["layers"][0]["type"] == "rx"
    main(["svmc", "--beta", "3.19", "--trials", "20", "--sweeps", "51", "--reference", str(sol)])
    assert "tvd" in json.loads(capsys.readouterr().out)
    main(["noise-sweep", "--jt", "3.4", "--noise", "noisy-1", "--nm", "2,3"])
    assert len(capsys.readouterr().out.splitlines()) == 3
