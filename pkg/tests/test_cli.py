import json

import numpy as np
import pytest

import cphabc.cli as cli
from cphabc.cli import main
from cphabc.sparse import SingularMatrixError

SMALL = ["--case", "11", "--h", "0.05", "--T", "0.2", "--order", "4"]

PADE_TABLE = """N,count_gt_1,count_gt_10,count_gt_100
4,2,1,0
8,4,2,1
16,8,3,1
32,16,6,2
64,32,13,4
128,64,25,8
256,128,50,16
512,256,100,33
1024,512,200,65
"""


def test_pade_table_stdout(capsys):
    assert main(["pade-table"]) == 0
    assert capsys.readouterr().out == PADE_TABLE


def test_pade_table_file_and_orders(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["pade-table", "--orders", "8,1024", "--out", str(out)]) == 0
    assert out.read_text() == "N,count_gt_1,count_gt_10,count_gt_100\n8,4,2,1\n1024,512,200,65\n"


def test_pade_error_csv(tmp_path):
    out = tmp_path / "e.csv"
    assert main(["pade-error", "--orders", "2,8", "--points", "3", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "X,N2,N8"
    assert lines[1] == "0,0,0"
    assert len(lines) == 4


def test_run_writes_outputs(tmp_path):
    out = tmp_path / "r"
    assert main(["run", *SMALL, "--out", str(out)]) == 0
    for name in ("energies.csv", "errors.csv", "meta.json", "config.toml", "fields/phi.npy", "reference/eta.npy"):
        assert (out / name).exists(), name
    assert (out / "errors.csv").read_text().startswith("t,e_eta,e_phi\n0,0,0\n")
    meta = json.loads((out / "meta.json").read_text())
    assert meta["provenance"]["order"] == "flag" and meta["provenance"]["stride"] == "default"
    assert meta["case"]["order"] == 4
    # the saved config reproduces the run configuration
    again = tmp_path / "again"
    assert main(["run", "--config", str(out / "config.toml"), "--out", str(again)]) == 0
    assert (again / "energies.csv").read_bytes() == (out / "energies.csv").read_bytes()


def test_run_without_reference_and_dump(tmp_path):
    out = tmp_path / "r"
    assert main(["run", *SMALL, "--no-reference", "--out", str(out), "--dump-system", str(tmp_path / "m")]) == 0
    assert not (out / "errors.csv").exists()
    assert {p.name for p in (tmp_path / "m").iterdir()} == {"M.mtx", "C.mtx", "K.mtx"}


def test_reference_then_compare(tmp_path):
    assert main(["run", *SMALL, "--no-reference", "--out", str(tmp_path / "r")]) == 0
    assert main(["reference", *SMALL, "--out", str(tmp_path / "ref")]) == 0
    assert main(["compare", str(tmp_path / "r/fields"), str(tmp_path / "ref/reference"),
                 "--out", str(tmp_path / "cmp")]) == 0
    assert main(["run", *SMALL, "--out", str(tmp_path / "full")]) == 0
    assert (tmp_path / "cmp/errors.csv").read_bytes() == (tmp_path / "full/errors.csv").read_bytes()


def test_study(tmp_path):
    args = ["study", *SMALL, "--T", "0.12", "--orders", "2,4", "--meshes", "0.05", "--out", str(tmp_path)]
    assert main(args) == 0
    lines = (tmp_path / "study.csv").read_text().splitlines()
    assert lines[0] == "mesh,order,E_eta,E_phi" and len(lines) == 3


def test_plot_command(tmp_path):
    csv = tmp_path / "energies.csv"
    csv.write_text("t,E_surface,E_basin\n0,1,2\n1,0.5,1\n")
    assert main(["plot", str(csv), "--log"]) == 0
    assert (tmp_path / "energies.svg").read_text().count("<polyline") == 2
    assert main(["plot", str(csv), "--columns", "missing"]) == 2


@pytest.mark.parametrize("argv", [
    ["nonsense"],
    ["run", "--case", "999"],
    ["run", "--set", "sigma=0.1", "--set", "epsilon=0"],
    ["run", "--set", "unknown=1"],
    ["run", "--config", "/nonexistent/file.toml"],
    ["pade-table", "--orders", "a,b"],
    ["compare", "/nonexistent/a", "/nonexistent/b"],
])
def test_config_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_thread_cap(monkeypatch, capsys):
    monkeypatch.setenv("HABC_THREADS", "0")
    assert main(["pade-table", "--orders", "4"]) == 2
    monkeypatch.setenv("HABC_THREADS", "2")
    assert main(["pade-table", "--orders", "4"]) == 0


@pytest.mark.parametrize("exc", [FloatingPointError("blow-up"), SingularMatrixError("singular"),
                                 np.linalg.LinAlgError("bad")])
def test_numerical_failure_exit_3(exc, monkeypatch, tmp_path):
    def boom(*a, **k):
        raise exc
    monkeypatch.setattr(cli, "run_case", boom)
    assert main(["run", *SMALL, "--out", str(tmp_path)]) == 3


def test_help_exits_zero():
    assert main(["--help"]) == 0
