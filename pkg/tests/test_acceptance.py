"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary (see conftest.py) and also when this file is run directly.
"""

import io
import json
import random
import time
from fractions import Fraction

import pytest

from tdc_forge import characterization as ch
from tdc_forge.cli import main
from tdc_forge.dtdc import TdcConfig, build_dtdc_netlist, convert, effective_lsb
from tdc_forge.fine import FineTdcConfig, build_fine_tdc_netlist
from tdc_forge.hdlgen import CodegenRequest, manifest
from tdc_forge.timebase import NS, US
from tdc_forge.tpg import tpg_decompose

RESULTS: list[str] = []

T = 1_250_000
LSB = 15_625
TOY = TdcConfig(t_clk=1_200_000, fine=FineTdcConfig.uniform(1_200_000, 2, 3))
TOY_DUP = TdcConfig(t_clk=1_200_000, fine=FineTdcConfig.uniform(1_200_000, 2, 3, tap_perturbations=(0, 0, 0, -200_000, 0, 0)))


def report(num, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_c1_100ns_interval(capsys):
    t0 = time.perf_counter()
    code = main(["simulate", "--tin", "100ns", "--start", "830ns"])
    dt = time.perf_counter() - t0
    rec = json.loads(capsys.readouterr().out)
    ok = code == 0 and rec["time_fs"] == 100 * NS and rec["d_out"] == 6400 and rec["n_c"] == 80 and dt < 1.0
    report(1, ok, f"time={rec['time_ns']} ns d_out={rec['d_out']} n_c={rec['n_c']} in {dt:.3f}s (want 100 ns, 6400, 80, <1s)")


def test_c2_identity():
    rng = random.Random(2)
    t0 = time.perf_counter()
    fails = 0
    n = 10_000
    for _ in range(n):
        t_clk = rng.randrange(1, 10**7)
        t_start = rng.randrange(-(10**12), 10**12)
        t_in = rng.randrange(1, 10**12)
        o = tpg_decompose(t_start, t_start + t_in, t_clk)
        fails += o.tc + o.tf1 - o.tf2 != t_in
    dt = time.perf_counter() - t0
    report(2, fails == 0 and dt < 5, f"{n} triples, {fails} identity failures in {dt:.2f}s (want 0, <5s)")


def test_c3_quantization():
    rng = random.Random(3)
    cfg = TdcConfig()
    t0 = time.perf_counter()
    worst = 0
    n = 1000
    for _ in range(n):
        t_in = rng.randrange(NS, 10 * US + 1)
        ph = rng.randrange(0, T)
        worst = max(worst, abs(convert(ph, ph + t_in, cfg).time_fs - t_in))
    dt = time.perf_counter() - t0
    report(3, worst <= LSB and dt < 30, f"{n} cases, max|err| = {worst} fs in {dt:.2f}s (want <= {LSB} fs, <30s)")


def test_c4_equivalence():
    rng = random.Random(4)
    t0 = time.perf_counter()
    mismatches = 0
    counts = {}
    for name, cfg in (("default", TdcConfig()), ("toy 2x3", TOY)):
        nl = build_dtdc_netlist(cfg)
        for _ in range(200):
            t_start = rng.randrange(0, 20 * cfg.t_clk)
            t_stop = t_start + rng.randrange(1, 200 * cfg.t_clk)
            mismatches += convert(t_start, t_stop, cfg, "structural", nl) != convert(t_start, t_stop, cfg)
        counts[name] = 200
    dt = time.perf_counter() - t0
    report(4, mismatches == 0 and dt < 60, f"{counts} conversions, {mismatches} mismatches in {dt:.2f}s (want 0, <60s)")


def test_c5_effective_lsb():
    cfg = TdcConfig()
    lsb = effective_lsb(cfg)
    curve = ch.transfer_sweep(cfg, 50 * NS, 50 * NS + 4 * LSB, 1, phase=4_321)
    tr = curve.transitions()
    spacing = {b - a for a, b in zip(tr, tr[1:])}
    ok = lsb == Fraction(LSB) and len(tr) >= 3 and spacing == {LSB}
    report(5, ok, f"effective_lsb = {lsb} fs, {len(tr)} transitions in a 1 fs sweep, spacings {sorted(spacing)} (want {LSB}); no 1 ps resolution at defaults")


def test_c6_dnl():
    t0 = time.perf_counter()
    n = 100_000
    rep = ch.code_density(TdcConfig(), 100 * NS, n, seed=7)
    bound = ch.dnl_bound(n, rep.n_bins)
    toy = ch.code_density(TOY_DUP, 10 * TOY_DUP.t_clk, 5000, seed=7)
    dt = time.perf_counter() - t0
    ok = rep.max_abs_dnl() < bound and -1.0 in toy.dnl and dt < 60
    report(
        6,
        ok,
        f"max|DNL| = {rep.max_abs_dnl():.4f} < 3-sigma bound {bound:.4f} ({n} samples, {rep.n_bins} bins); "
        f"duplicated-residue toy min DNL = {min(toy.dnl):.1f} (want -1); {dt:.1f}s (<60s)",
    )


def test_c7_counts():
    cfg = TdcConfig()
    m = manifest(CodegenRequest(cfg))
    net = build_fine_tdc_netlist(cfg.fine, cfg.t_clk).counts()
    want = {"buffers": 80, "counters": 80, "adders": 76, "mux": 1}
    got = {k: m[k] for k in want}
    from_net = {"buffers": net["buffer"], "counters": net["counter"], "adders": net["adder"], "mux": net["mux"]}
    report(7, got == want == from_net, f"manifest {got}, netlist {from_net} (want {want})")


def test_c8_determinism(tmp_path, capsys):
    cmds = {
        "simulate": ["simulate", "--tin", "3.3ns", "--start", "0.7ns", "--mode", "structural", "--event-log", "{out}"],
        "sweep": ["sweep", "--tmin", "1ns", "--tmax", "20ns", "--step", "0.37ns", "--seed", "5", "--out", "{out}"],
        "density": ["density", "--samples", "20000", "--seed", "7", "--out", "{out}"],
        "sensor": ["sensor", "--alpha", "1e6", "--rmin", "100", "--rmax", "1e9", "--points", "10", "--log", "--out", "{out}"],
        "perturbed": ["sweep", "--tmin", "1ns", "--tmax", "5ns", "--step", "0.1ns", "--sigma", "2ps", "--perturbation-seed", "3", "--out", "{out}"],
    }
    differ = []
    for name, argv in cmds.items():
        blobs = []
        for rep in range(2):
            out = tmp_path / f"{name}{rep}.csv"
            main([a.replace("{out}", str(out)) for a in argv])
            stdout = capsys.readouterr().out.replace(str(out), "OUT")
            meta = out.with_name(out.name + ".meta.json")
            blobs.append((out.read_bytes(), meta.read_bytes() if meta.exists() else b"", stdout))
        if blobs[0] != blobs[1]:
            differ.append(name)
    gens = []
    for rep in range(2):
        main(["codegen", "--out", str(tmp_path / f"gen{rep}")])
        gens.append({p.name: p.read_bytes() for p in sorted((tmp_path / f"gen{rep}").iterdir())})
    if gens[0] != gens[1]:
        differ.append("codegen")
    report(8, not differ, f"{len(cmds) + 1} seeded commands run twice, differing outputs: {differ or 'none'}")


def test_c9_table1_documented():
    # not reproducible without FPGA synthesis; substituted by criteria 4 and 7
    RESULTS.append("[N/A ] criterion 9: resource-utilization table not reproducible (needs synthesis); covered by criteria 4 and 7")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
