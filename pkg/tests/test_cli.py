import csv
import json
import subprocess
import sys

import pytest

from tdc_forge.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_830_to_930ns(capsys):
    code, out, _ = run(capsys, "simulate", "--tin", "100ns", "--start", "830ns")
    rec = json.loads(out)
    assert code == 0
    assert rec["time_ns"] == 100 and rec["d_out"] == 6400 and rec["n_c"] == 80


def test_simulate_one_period(capsys):
    code, out, _ = run(capsys, "simulate", "--tin", "1.25ns")
    assert code == 0 and json.loads(out)["d_out"] == 80


def test_simulate_zero(capsys):
    code, _, err = run(capsys, "simulate", "--tin", "0ns")
    assert code == 2 and "NonPositiveInterval" in err


def test_simulate_structural_matches(capsys):
    a = run(capsys, "simulate", "--tin", "3.3ns", "--start", "0.7ns")[1]
    b = run(capsys, "simulate", "--tin", "3.3ns", "--start", "0.7ns", "--mode", "structural")[1]
    assert a == b


def test_bad_args_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["simulate", "--tin", "100"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["density"])
    assert e.value.code == 2
    assert run(capsys, "simulate")[0] == 2
    assert run(capsys, "simulate", "--tin", "1ns", "--event-log", "x.csv")[0] == 2


def test_range_exit_1(capsys):
    code, _, err = run(capsys, "simulate", "--tin", "1us", "--coarse-width", "4")
    assert code == 1 and "RangeExceeded" in err


def test_overflow_exit_1(capsys):
    code, out, _ = run(capsys, "simulate", "--tin", "1us", "--adder-width", "8")
    assert code == 1 and json.loads(out)["overflow"] is True


def test_event_log(tmp_path, capsys):
    log = tmp_path / "ev.csv"
    code, _, _ = run(capsys, "simulate", "--tin", "2ns", "--mode", "structural", "--event-log", str(log))
    assert code == 0
    first = log.read_text().splitlines()[0].split(",")
    assert len(first) == 3 and first[0] == "0"


def test_config_file_and_override(tmp_path, capsys, monkeypatch):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"coarse_width": 4, "characterization": {"tin": "1.25ns"}}))
    code, out, _ = run(capsys, "simulate", "--config", str(p))
    assert code == 0 and json.loads(out)["d_out"] == 80
    assert run(capsys, "simulate", "--config", str(p), "--tin", "1us")[0] == 1
    assert run(capsys, "simulate", "--config", str(p), "--tin", "1us", "--coarse-width", "35")[0] == 0
    monkeypatch.setenv("TDC_FORGE_CONFIG", str(p))
    code, out, _ = run(capsys, "simulate")
    assert code == 0 and json.loads(out)["d_out"] == 80


def test_config_errors(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"fine": {"lanes": 2}}')
    assert run(capsys, "simulate", "--tin", "1ns", "--config", str(p))[0] == 2
    assert run(capsys, "simulate", "--tin", "1ns", "--config", str(tmp_path / "missing.json"))[0] == 2


def test_sweep(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, summary, _ = run(capsys, "sweep", "--tmin", "1ns", "--tmax", "2ns", "--step", "15625fs", "--out", str(out))
    assert code == 0 and "sweep:" in summary
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 65
    codes = [int(r["d_out"]) for r in rows]
    assert all(b - a == 1 for a, b in zip(codes, codes[1:]))
    meta = json.loads((tmp_path / "s.csv.meta.json").read_text())
    assert meta["config"]["t_clk"] == "1250ps" and meta["params"]["phase_fs"] == 0


def test_density_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "density", "--samples", "3000", "--seed", "7", "--out", str(a))[0] == 0
    assert run(capsys, "density", "--samples", "3000", "--seed", "7", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv.meta.json").read_bytes() == (tmp_path / "b.csv.meta.json").read_bytes()
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert meta["params"]["seed"] == 7 and meta["params"]["rng"] == "numpy.random.PCG64"
    assert len(a.read_text().splitlines()) == 81


def test_sensor(tmp_path, capsys):
    out = tmp_path / "s.csv"
    args = ["sensor", "--alpha", "1e6", "--rmin", "100", "--rmax", "1e9", "--points", "10", "--log", "--out", str(out)]
    assert run(capsys, *args)[0] == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 10
    codes = [int(r["d_out"]) for r in rows if r["d_out"]]
    assert len(codes) == 10 and codes == sorted(codes)
    # ~1 s at the top end overflows the 35-bit signed ALU; flagged, not dropped
    assert [r["status"] for r in rows][-1] == "overflow"
    assert {r["status"] for r in rows} <= {"ok", "overflow"}
    assert run(capsys, *args, "--coarse-width", "10")[0] == 0
    rows = list(csv.DictReader(out.open()))
    assert any(r["status"] == "RangeExceeded" and r["d_out"] == "" for r in rows)


def test_sensor_missing_args(tmp_path, capsys):
    assert run(capsys, "sensor", "--alpha", "1", "--out", str(tmp_path / "x.csv"))[0] == 2


def test_codegen(tmp_path, capsys):
    gen = tmp_path / "gen"
    code, summary, _ = run(capsys, "codegen", "--out", str(gen))
    assert code == 0
    m = json.loads((gen / "manifest.json").read_text())
    assert m["adders"] == 76 and m["buffers"] == 80 and m["counters"] == 80
    assert run(capsys, "codegen", "--out", str(gen), "--top-name", "entity")[0] == 2


def test_io_failure(tmp_path, capsys):
    code, _, err = run(capsys, "sweep", "--tmin", "1ns", "--tmax", "1ns", "--step", "1fs", "--out", str(tmp_path / "no" / "x.csv"))
    assert code == 1


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "tdc_forge", "simulate", "--tin", "1.25ns"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["d_out"] == 80
