import io
import math

import pytest
from hypothesis import given, strategies as st

from tdc_forge import characterization as ch
from tdc_forge.dtdc import TdcConfig, convert
from tdc_forge.errors import InvalidConfig, RangeExceeded
from tdc_forge.fine import FineTdcConfig
from tdc_forge.timebase import NS

T = 1_250_000
L = 15_625
CFG = TdcConfig()
DUP = TdcConfig(t_clk=1_200_000, fine=FineTdcConfig.uniform(1_200_000, 2, 3, tap_perturbations=(0, 0, 0, -200_000, 0, 0)))


def test_staircase():
    curve = ch.transfer_sweep(CFG, T, 10 * T, L)
    codes = [p.d_out for p in curve.points]
    assert all(b - a == 1 for a, b in zip(codes, codes[1:]))
    assert curve.points[-1].t_in == 10 * T


def test_fine_step_transitions():
    curve = ch.transfer_sweep(CFG, 10 * NS, 10 * NS + 5 * L, 125, phase=3_000)
    tr = curve.transitions()
    assert len(tr) >= 4
    assert {b - a for a, b in zip(tr, tr[1:])} == {L}


def test_single_point():
    curve = ch.transfer_sweep(CFG, 7 * NS, 7 * NS, 1, phase=100)
    assert len(curve.points) == 1
    assert curve.points[0].d_out == convert(100, 100 + 7 * NS).d_out


def test_random_phase_deterministic():
    a = ch.transfer_sweep(CFG, NS, 3 * NS, 100_000, seed=9)
    b = ch.transfer_sweep(CFG, NS, 3 * NS, 100_000, seed=9)
    c = ch.transfer_sweep(CFG, NS, 3 * NS, 100_000, seed=10)
    assert a == b and a.points != c.points
    assert a.rng == "numpy.random.PCG64"


def test_sweep_args():
    with pytest.raises(ValueError):
        ch.transfer_sweep(CFG, 5, 4, 1)
    with pytest.raises(ValueError):
        ch.transfer_sweep(CFG, 5, 6, 0)


def test_curve_csv():
    out = io.StringIO()
    ch.transfer_sweep(CFG, T, 2 * T, T).write_csv(out)
    assert out.getvalue().splitlines() == ["t_in_fs,phase_fs,d_out,time_fs", "1250000,0,80,1250000", "2500000,0,160,2500000"]


def test_density_uniform_histogram():
    rep = ch.density_from_counts([50] * 8)
    assert rep.dnl == [0.0] * 8 and rep.inl == [0.0] * 8
    with pytest.raises(ValueError):
        ch.density_from_counts([0, 0])


def test_density_exact_fractions():
    rep = ch.density_from_counts([1, 2, 3, 2])
    assert rep.dnl == [-0.5, 0.0, 0.5, 0.0]
    assert rep.inl == [-0.5, -0.5, 0.0, 0.0]


def test_density_ideal_small():
    rep = ch.code_density(CFG, 100 * NS, 4000, seed=1)
    assert rep.n_bins == 80 and sum(rep.counts) == 4000
    assert rep.max_abs_dnl() < ch.dnl_bound(4000, 80)
    assert abs(rep.inl[-1]) < 1e-9


def test_density_missing_code():
    rep = ch.code_density(DUP, 10 * DUP.t_clk, 3000, seed=2)
    assert rep.n_bins == 6
    assert rep.dnl.count(-1.0) == 1
    miss = rep.dnl.index(-1.0)
    assert max(rep.dnl) > 0.8
    assert rep.dnl[(miss + 1) % 6] > 0.8 or rep.dnl[miss - 1] > 0.8


def test_dnl_bound():
    assert ch.dnl_bound(100_000, 80, familywise=False) == pytest.approx(3 * math.sqrt(79 / 100_000 * 80 / 80), rel=1e-12)
    fw = ch.dnl_bound(100_000, 80)
    assert 0.11 < fw < 0.12
    assert fw > ch.dnl_bound(100_000, 80, familywise=False)


def test_density_csv():
    out = io.StringIO()
    ch.density_from_counts([1, 3]).write_csv(out)
    assert out.getvalue().splitlines() == ["bin,count,dnl,inl", "0,1,-0.5,-0.5", "1,3,0.5,0.0"]


def test_single_shot_fixed_phase_zero():
    mean, std = ch.single_shot_precision(CFG, 8 * T, 20, phase=0)
    assert std == 0 and mean == 8 * T


def test_single_shot_random_phase_bernoulli():
    # code flips between two adjacent values: std = L*sqrt(p(1-p)), p = frac(t_in/L)
    t_in = 100 * NS + 5_000
    _, std = ch.single_shot_precision(CFG, t_in, 4000, seed=3)
    p = (t_in % L) / L
    assert std == pytest.approx(L * math.sqrt(p * (1 - p)), rel=0.05)


def test_single_shot_phase_averaged_quantization():
    # averaged over input positions the rms error is the classic L/sqrt(12)
    errs = []
    for k in range(200):
        t_in = 50 * NS + k * 397
        errs.append(convert(1234, 1234 + t_in).time_fs - t_in)
    rms = math.sqrt(sum(e * e for e in errs) / len(errs) - (sum(errs) / len(errs)) ** 2)
    assert rms <= L / math.sqrt(12) * 1.1


def test_single_shot_monotone_in_sigma():
    t_in = 100 * NS + 40 * L
    stds = []
    for sigma in (0, 1000, 3000, 6000, 9000):
        vals = []
        for s in range(6):
            fine = FineTdcConfig(perturbation_sigma=sigma, seed=s) if sigma else FineTdcConfig()
            vals.append(ch.single_shot_precision(TdcConfig(fine=fine), t_in, 400, seed=100 + s)[1])
        stds.append(sum(vals) / len(vals))
    assert stds[0] == 0
    assert all(b >= a for a, b in zip(stds, stds[1:]))


def test_single_shot_args():
    with pytest.raises(ValueError):
        ch.single_shot_precision(CFG, T, 1, seed=0)
    with pytest.raises(ValueError):
        ch.single_shot_precision(CFG, T, 5)


def test_sensor_point():
    model = ch.SensorModel(alpha=1000, r_min=100_000, r_max=100_000)
    rows = ch.sensor_sweep(model, CFG, 5)
    assert len(rows) == 1
    assert rows[0].t == 100 * NS and rows[0].time_fs == 100 * NS


@given(st.floats(1, 10**4), st.floats(0, 10**5), st.floats(0, 10**5))
def test_sensor_linear(alpha, r1, r2):
    lo, hi = sorted((r1, r2))
    a = ch.SensorModel(alpha, lo, hi)
    b = ch.SensorModel(2 * alpha, lo, hi)
    for r in ch.sensor_resistances(a, 4):
        assert abs(b.period(r) - 2 * a.period(r)) <= 1


def test_sensor_log_spacing_monotone():
    model = ch.SensorModel(1e6, 100, 1e9)
    rows = ch.sensor_sweep(model, CFG, 10, "log")
    assert len(rows) == 10
    codes = [r.d_out for r in rows]
    assert codes == sorted(codes)
    assert rows[0].r == 100 and rows[-1].r == pytest.approx(1e9)


def test_sensor_range_flagged():
    small = TdcConfig(coarse_width=10)
    model = ch.SensorModel(1e6, 100, 1e9)
    with pytest.raises(RangeExceeded):
        ch.sensor_sweep(model, small, 10, "log")
    rows = ch.sensor_sweep(model, small, 10, "log", flag_errors=True)
    flagged = [r for r in rows if r.status == "RangeExceeded"]
    assert flagged and all(r.d_out is None for r in flagged)
    ok = [r.d_out for r in rows if r.status == "ok"]
    assert ok == sorted(ok)
    out = io.StringIO()
    ch.write_sensor_csv(rows, out)
    assert out.getvalue().splitlines()[0] == "r_ohm,t_fs,d_out,time_fs,status"


def test_sensor_validation():
    with pytest.raises(InvalidConfig):
        ch.SensorModel(0, 1, 2)
    with pytest.raises(InvalidConfig):
        ch.SensorModel(1, 5, 2)
    with pytest.raises(InvalidConfig):
        ch.sensor_resistances(ch.SensorModel(1, 0, 10), 3, "log")
    with pytest.raises(ValueError):
        ch.sensor_resistances(ch.SensorModel(1, 1, 10), 3, "cubic")
