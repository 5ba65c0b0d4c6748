import subprocess
import sys
from pathlib import Path

import pytest

from retroloop.cli import EXIT_DIAGNOSTIC, EXIT_IO, EXIT_OK, OUT_ENV, bundled_circuit, main

FIXTURES = Path(__file__).parent / "fixtures"
MALFORMED = ["undeclared_mode.circ", "bad_reflectivity.circ", "duplicate_scenario.circ"]


@pytest.fixture
def golden(tmp_path):
    paths = []
    for name in ("fig2", "fig3"):
        p = tmp_path / f"{name}.circ"
        p.write_text(bundled_circuit(name))
        paths.append(str(p))
    return paths


def test_validate_golden_files(golden, capsys):
    assert main(["validate", *golden]) == EXIT_OK
    assert capsys.readouterr().out.count(": ok") == 2


@pytest.mark.parametrize("name,line", list(zip(MALFORMED, [4, 3, 9])))
def test_validate_malformed_files(name, line, capsys):
    path = str(FIXTURES / name)
    assert main(["validate", path]) == EXIT_DIAGNOSTIC
    err = capsys.readouterr().err.strip().splitlines()
    assert err and err[0].startswith(f"{path}:{line}:")


def test_missing_file_is_io_error(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "nope.circ")]) == EXIT_IO
    assert main(["run", str(tmp_path / "nope.circ")]) == EXIT_IO


def test_unwritable_output_is_io_error(tmp_path):
    assert main(["demo", "fig3", "--out", str(tmp_path / "missing_dir" / "x.csv")]) == EXIT_IO


def test_non_utf8_is_a_diagnostic(tmp_path, capsys):
    p = tmp_path / "bad.circ"
    p.write_bytes(b"modes a\n\xff\xfe\n")
    assert main(["validate", str(p)]) == EXIT_DIAGNOSTIC
    assert ":2:" in capsys.readouterr().err


def test_bad_sweep_option(capsys):
    assert main(["demo", "fig3", "--sweep", "phi=1:0:3"]) == EXIT_DIAGNOSTIC


def test_run_writes_to_out(golden, tmp_path):
    out = tmp_path / "t.json"
    assert main(["run", golden[1], "--format", "json", "--out", str(out)]) == EXIT_OK
    assert '"schema": "retroloop.table/1"' in out.read_text()


def test_env_var_sets_output_path(tmp_path, monkeypatch, capsys):
    out = tmp_path / "env.csv"
    monkeypatch.setenv(OUT_ENV, str(out))
    assert main(["demo", "fig2"]) == EXIT_OK
    assert capsys.readouterr().out == ""
    assert out.read_text().startswith("outcome,probability,oracle_probability,out_0,out_1\n")


def test_module_entry_point_is_byte_stable():
    cmd = [sys.executable, "-m", "retroloop", "demo", "fig3", "--sweep", "phi=0:2*pi:9"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first == second
    assert first.splitlines()[0] == b"phi,outcome,cycle_probability,oracle_probability,verdict"
    assert len(first.splitlines()) == 1 + 2 * 9
