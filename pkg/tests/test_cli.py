import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from risrecip.cli import emit_plotdata, run
from risrecip.errors import ConfigurationError
from risrecip.experiments import TrajectoryPoint, load_scenario, voltage_sweep
from risrecip.nonreciprocal import HarmonicMap

SUBCOMMANDS = ("sweep", "table", "reciprocity", "harmonics", "roundtrip", "nonlinear",
               "optimize")


def test_sweep_writes_rows(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    assert run(["sweep", "--scenario", "ris1-a", "--steps", "211", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert len(rows) == 212 and rows[0][0] == "voltage_v"
    assert "circle" in capsys.readouterr().out


def test_bogus_flag_is_usage_error(capsys):
    assert run(["--bogus"]) == 2
    assert "usage:" in capsys.readouterr().err
    assert run([]) == 2


def test_reciprocity_output(capsys):
    assert run(["reciprocity", "--scenario", "ris1-a", "--pattern", "gradient"]) == 0
    out = capsys.readouterr().out
    assert "deviation 0.000000 dB / 0.000000°" in out
    assert "verdict Reciprocal" in out


def test_missing_scenario_and_output_dir(tmp_path, capsys):
    assert run(["sweep", "--scenario", "nope"]) == 2
    assert run(["table", "--out", str(tmp_path / "no" / "dir.csv")]) == 2
    assert run(["harmonics", "--schedule", str(tmp_path / "missing.ini")]) == 2
    capsys.readouterr()


def test_domain_error_exit_one(tmp_path, capsys):
    # binary scene cannot be swept
    assert run(["sweep", "--scenario", "ris2-a"]) == 1
    assert "ConfigurationError" in capsys.readouterr().err
    assert run(["optimize", "--scenario", "ris1-a", "--mode", "greedy_bits"]) == 1


def test_table_and_json(tmp_path, capsys):
    assert run(["table", "--out", str(tmp_path / "t.json")]) == 0
    recs = json.loads((tmp_path / "t.json").read_text())
    assert len(recs) == 8 and all(r["p_up_dbm"] == r["p_down_dbm"] for r in recs)
    assert "RIS coding pattern" in capsys.readouterr().out


def test_harmonics_roundtrip_nonlinear_optimize(tmp_path, capsys):
    assert run(["harmonics", "--grid-res", "0.1", "--out", str(tmp_path / "h.csv")]) == 0
    head = (tmp_path / "h.csv").read_text().splitlines()[0]
    assert head == "k,theta_deg,re,im,abs"
    assert run(["roundtrip", "--out", str(tmp_path / "rt.json")]) == 0
    rec = json.loads((tmp_path / "rt.json").read_text())
    assert rec["reciprocal"] is False and rec["f3_hz"] == 11e9
    assert run(["roundtrip", "--reverse-down"]) == 0
    assert "reciprocal false" in capsys.readouterr().out
    assert run(["nonlinear", "--steps", "3", "--out", str(tmp_path / "n.csv")]) == 0
    rows = list(csv.DictReader((tmp_path / "n.csv").open()))
    assert all(float(r["downlink_amplitude"]) > float(r["uplink_amplitude"]) for r in rows)
    assert run(["optimize", "--scenario", "ris2-b", "--mode", "exhaustive_bits"]) == 0
    out = capsys.readouterr().out
    up, down = out.split("uplink ")[1].split(" dB")[0], out.split("downlink ")[1].split(" dB")[0]
    assert up == down


def test_schedule_file_via_cli(tmp_path, capsys):
    sched = tmp_path / "s.ini"
    sched.write_text("[schedule]\nperiod_s = 2e-9\n" + "".join(
        f"[group.{g}]\nsegments = 0 0.5 0; 0.5 1 1\n" for g in range(4)))
    assert run(["harmonics", "--scenario", "ris2-a", "--schedule", str(sched),
                "--theta-in", "20", "--grid-res", "0.5"]) == 0
    out = capsys.readouterr().out
    assert "dominant: k=" in out and "k=+1  f=27.500000 GHz" in out
    three = tmp_path / "three.ini"
    three.write_text("[schedule]\nperiod_s = 2e-9\n" + "".join(
        f"[group.{g}]\nsegments = 0 0.5 0; 0.5 1 1\n" for g in range(3)))
    assert run(["harmonics", "--scenario", "ris1-a", "--schedule", str(three),
                "--grid-res", "0.5"]) == 1
    assert "3 groups" in capsys.readouterr().err
    assert run(["harmonics", "--schedule", str(sched)]) == 2


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help_documents_schemas(cmd, capsys):
    assert run([cmd, "--help"]) == 0
    out = capsys.readouterr().out
    assert "--" in out and "file schemas" in out


def test_emit_plotdata(tmp_path):
    pts = [TrajectoryPoint(float(i), 1j * i, 1j * i) for i in range(3)]
    rows = list(csv.reader(emit_plotdata(pts, tmp_path / "p.csv").open()))
    assert len(rows) == 4 and all(len(r) == 5 for r in rows)
    with pytest.raises(ConfigurationError):
        emit_plotdata([], tmp_path / "e.csv")
    sweep = voltage_sweep(load_scenario("ris1-b").scene("identical"), 11)
    rows = list(csv.DictReader(emit_plotdata(sweep, tmp_path / "b.csv").open()))
    for r in rows:
        assert (r["re_up"], r["im_up"]) == (r["re_down"], r["im_down"])
    with pytest.raises(ConfigurationError):
        emit_plotdata(HarmonicMap(np.array([0]), np.array([]), np.zeros((1, 0)), 1e9, 1e8),
                      tmp_path / "h.csv")


def test_repeated_runs_byte_identical(tmp_path):
    for i in range(2):
        d = tmp_path / str(i)
        d.mkdir()
        assert run(["sweep", "--scenario", "ris1-a", "--out", str(d / "t.csv"),
                    "--noise", "0.01", "--seed", "4"]) == 0
        assert run(["table", "--out", str(d / "r.csv")]) == 0
    for name in ("t.csv", "r.csv"):
        assert (tmp_path / "0" / name).read_bytes() == (tmp_path / "1" / name).read_bytes()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "risrecip", "reciprocity", "--scenario",
                           "ris2-b"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "verdict Reciprocal" in proc.stdout
