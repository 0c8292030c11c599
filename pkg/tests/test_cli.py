import csv
import json
import subprocess
import sys

import pytest

from fockmel.cli import main
from fockmel.io import read_samples_csv


def run(capsys, *argv):
    status = main(list(argv))
    out = capsys.readouterr()
    return status, out.out, out.err


def test_pint_prints_exact_value(capsys):
    status, out, _ = run(capsys, "pint", "--iota", "0", "--logpow", "0", "--nu", "0", "--ell", "0", "--mu", "0")
    assert status == 0 and out == "1\n"
    status, out, _ = run(capsys, "pint", "--iota", "0", "--logpow", "0", "--nu", "2", "--ell", "0", "--mu", "1")
    assert out == "40\n"


def test_pint_index_violation_exit_code(capsys):
    status, _, err = run(capsys, "pint", "--iota", "-4", "--logpow", "1", "--nu", "4", "--ell", "0", "--mu", "0")
    assert status == 4 and "index-set" in err


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as info:
        main(["pint", "--iota", "0"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["solve", "--delta", "1", "--delta-scan", "1:2:5"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["solve", "--precision", "16"])
    assert info.value.code == 2


def test_solve_single_term_json(capsys):
    status, out, err = run(capsys, "solve", "--single-term", "--delta", "4", "--digits", "20")
    assert status == 0
    data = json.loads(out)
    assert data["energy"] == "-2.75"
    assert data["size"] == 1 and data["method"] == "jacobi"
    assert "E = -2.750 000" in err


def test_solve_repeat_runs_are_byte_identical(tmp_path, capsys):
    paths = [tmp_path / f"run{k}.json" for k in range(2)]
    for p in paths:
        assert main(["solve", "--no-composites", "--omega", "1", "--delta", "3.5", "--out", str(p)]) == 0
    capsys.readouterr()
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_csv_and_json_carry_the_same_values(tmp_path, capsys):
    js, cs = tmp_path / "r.json", tmp_path / "r.csv"
    common = ["solve", "--no-composites", "--omega", "1", "--delta", "3.5"]
    main(common + ["--out", str(js)])
    main(common + ["--format", "csv", "--out", str(cs)])
    capsys.readouterr()
    data = json.loads(js.read_text())
    rows = {r[0]: r[1] for r in csv.reader(cs.read_text().splitlines())}
    assert rows["energy"] == data["energy"]
    assert rows["delta"] == data["delta"]
    coeffs = [v for k, v in rows.items() if k.startswith("C[")]
    assert coeffs == [c["value"] for c in data["coefficients"]]


def test_matrices_csv_writes_three_files(tmp_path, capsys):
    out = tmp_path / "m.csv"
    assert main(["matrices", "--single-term", "--delta", "4", "--format", "csv", "--out", str(out)]) == 0
    capsys.readouterr()
    texts = {name: (tmp_path / f"m_{name}.csv").read_text() for name in "SUK"}
    values = {name: t.strip().splitlines()[-1] for name, t in texts.items()}
    assert values == {"S": "-32", "U": "54", "K": "8"}


def test_coalescence_csv(capsys):
    status, out, _ = run(capsys, "coalescence", "--single-term", "--delta", "3.375", "--line", "ee",
                         "--points", "4", "--format", "csv")
    assert status == 0
    comments, rows = read_samples_csv(out)
    assert len(rows) == 4
    assert set(rows[0]) == {"R", "wf_value", "residual", "log10_ratio"}
    assert any("kind=ee" in c for c in comments)


def test_selftest_identities_passes(capsys):
    status, out, _ = run(capsys, "selftest", "--suite", "identities")
    assert status == 0 and out.startswith("PASS identities")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fockmel", "pint", "--iota", "0", "--logpow", "0",
                           "--nu", "0", "--ell", "2", "--mu", "1"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "8\n"


def test_precision_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("FOCKMEL_PRECISION", "128")
    status, out, _ = run(capsys, "pint", "--iota", "0", "--logpow", "1", "--nu", "0", "--ell", "0",
                         "--mu", "0", "--digits", "50")
    assert status == 0
    monkeypatch.setenv("FOCKMEL_PRECISION", "256")
    _, out256, _ = run(capsys, "pint", "--iota", "0", "--logpow", "1", "--nu", "0", "--ell", "0",
                       "--mu", "0", "--digits", "50")
    assert out != out256 and out[:30] == out256[:30]
