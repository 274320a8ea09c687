"""Converter assembly: TPG, two fine TDCs, coarse counter and ALU.

The output code counts fine LSBs: ``d_out = scale_k*n_c + n_f1 - n_f2`` where
``scale_k`` is the number of taps per fine TDC, i.e. ``t_clk / lsb``.
"""

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import InvalidConfig, NotSynchronous, RangeExceeded
from .fine import FineCode, FineTdcConfig, add_fine_tdc, fine_count_behavioral, readout_fine
from .primitives import DEFAULT_WIDTH, Alu, ClockSource, Counter, CounterState, alu_fixed
from .sim import HIGH, Netlist, Simulator
from .timebase import NS, check_time, period_from_frequency
from .tpg import add_tpg, tpg_decompose

MODES = ("behavioral", "structural")


@dataclass(frozen=True)
class TdcConfig:
    f_clk: float = 800_000_000
    fine: FineTdcConfig = field(default_factory=FineTdcConfig)
    coarse_width: int = DEFAULT_WIDTH
    t_clk: Optional[int] = None

    def __post_init__(self):
        if self.t_clk is None:
            object.__setattr__(self, "t_clk", period_from_frequency(self.f_clk))
        else:
            check_time(self.t_clk, "t_clk")
            if self.t_clk <= 0:
                raise InvalidConfig(f"t_clk must be > 0, got {self.t_clk}")
            object.__setattr__(self, "f_clk", 1e15 / self.t_clk)
        if self.t_clk <= 0:
            raise InvalidConfig(f"clock period rounds to {self.t_clk} fs")
        if self.coarse_width < 1:
            raise InvalidConfig("coarse_width must be >= 1")

    @property
    def scale_k(self) -> int:
        return self.fine.n_taps

    @property
    def lsb(self) -> Fraction:
        return Fraction(self.t_clk, self.scale_k)

    @property
    def alu_width(self) -> int:
        return self.fine.adder_width


@dataclass(frozen=True)
class ConversionResult:
    n_c: int
    n_f1: int
    n_f2: int
    d_out: int
    time_fs: int
    time_ns: float
    overflow: bool

    def to_record(self) -> dict:
        return asdict(self)


def coarse_count(tc: int, tc_start: int, t_clk: int, width: int = DEFAULT_WIDTH) -> CounterState:
    """Edges counted over the coarse pulse, saturating at ``2**width - 1``."""
    if tc < 0 or tc % t_clk or tc_start % t_clk:
        raise NotSynchronous(f"coarse pulse ({tc_start}, +{tc}) is not aligned to t_clk = {t_clk}")
    state = CounterState(width)
    n = tc // t_clk
    if n > state.limit:
        return CounterState(width, state.limit, True)
    return CounterState(width, n, False)


def alu_compose(n_c: int, n_f1: int, n_f2: int, scale_k: int) -> int:
    return scale_k * n_c + n_f1 - n_f2


def effective_lsb(cfg: TdcConfig) -> Fraction:
    """``t_clk`` over the number of distinct tap phases within one period."""
    residues = {d % cfg.t_clk for line in cfg.fine.tap_delays for d in line}
    return Fraction(cfg.t_clk, len(residues))


def _result(n_c: int, f1: FineCode, f2: FineCode, cfg: TdcConfig, overflow: bool) -> ConversionResult:
    d_out = alu_compose(n_c, f1.total, f2.total, cfg.scale_k)
    _, alu_ovf = alu_fixed(n_c, f1.total, f2.total, cfg.scale_k, cfg.alu_width)
    time_fs = (2 * d_out * cfg.t_clk + cfg.scale_k) // (2 * cfg.scale_k)
    return ConversionResult(
        n_c=n_c,
        n_f1=f1.total,
        n_f2=f2.total,
        d_out=d_out,
        time_fs=time_fs,
        time_ns=time_fs / NS,
        overflow=bool(overflow or f1.overflow or f2.overflow or alu_ovf),
    )


def _check_range(t_start: int, t_stop: int, cfg: TdcConfig):
    tpg = tpg_decompose(t_start, t_stop, cfg.t_clk)
    limit = (1 << cfg.coarse_width) - 1
    if tpg.tc // cfg.t_clk > limit:
        raise RangeExceeded(
            f"interval of {t_stop - t_start} fs needs {tpg.tc // cfg.t_clk} coarse counts; "
            f"the {cfg.coarse_width}-bit coarse counter holds {limit}"
        )
    return tpg


def convert_behavioral(t_start: int, t_stop: int, cfg: TdcConfig) -> ConversionResult:
    tpg = _check_range(t_start, t_stop, cfg)
    coarse = coarse_count(tpg.tc, tpg.tc_start, cfg.t_clk, cfg.coarse_width)
    f1 = fine_count_behavioral(tpg.tf1_start, tpg.tf1, cfg.fine, cfg.t_clk)
    f2 = fine_count_behavioral(tpg.tf2_start, tpg.tf2, cfg.fine, cfg.t_clk)
    return _result(coarse.value, f1, f2, cfg, coarse.overflowed)


def build_dtdc_netlist(cfg: TdcConfig) -> Netlist:
    nl = Netlist("dtdc")
    start, stop = nl.net("start"), nl.net("stop")
    en = nl.net("en", reset=HIGH)
    clk = nl.net("clk", clock=True)
    nl.add(ClockSource("clkgen", clk, cfg.t_clk))
    tpg = add_tpg(nl, "tpg_", clk, start, stop)
    fine1 = add_fine_tdc(nl, "f1_", clk, en, tpg["tf1"], cfg.fine)
    fine2 = add_fine_tdc(nl, "f2_", clk, en, tpg["tf2"], cfg.fine)
    n_c = nl.bus("n_c")
    coarse = nl.add(Counter("coarse_counter", clk, en, tpg["tc"], n_c, cfg.coarse_width))
    n_f1, n_f2, d_out = nl.bus("n_f1"), nl.bus("n_f2"), nl.bus("d_out")
    alu = nl.add(Alu("alu", n_c, n_f1, n_f2, d_out, cfg.scale_k, cfg.alu_width))
    nl.ports = {"clk": clk, "start": start, "stop": stop, "en": en, **tpg}
    nl.blocks = {"fine1": fine1, "fine2": fine2, "coarse": coarse, "alu": alu}
    return nl.build()


def convert_structural(t_start: int, t_stop: int, cfg: TdcConfig, netlist: Netlist = None, log_fh=None) -> ConversionResult:
    """Event-driven run of the full netlist; ``log_fh`` receives the applied-event log."""
    _check_range(t_start, t_stop, cfg)
    if t_start < 0:
        raise InvalidConfig("structural simulation starts at t = 0; t_start must be >= 0")
    nl = netlist or build_dtdc_netlist(cfg)
    sim = Simulator(nl, record=log_fh is not None)
    sim.schedule(t_start, nl.ports["start"], 1)
    sim.schedule(t_stop, nl.ports["stop"], 1)
    longest = max(line[-1] for line in cfg.fine.tap_delays)
    sim.run_until(t_stop + 4 * cfg.t_clk + longest)
    b = nl.blocks
    f1 = readout_fine(sim, b["fine1"])
    f2 = readout_fine(sim, b["fine2"])
    sim.set_word("n_f1", f1.total)
    sim.set_word("n_f2", f2.total)
    sim.settle_words()
    if log_fh is not None:
        sim.dump_log(log_fh)
    coarse = b["coarse"].state
    res = _result(coarse.value, f1, f2, cfg, coarse.overflowed or b["alu"].overflow)
    if not res.overflow and sim.word("d_out") != res.d_out:
        raise AssertionError(f"ALU datapath produced {sim.word('d_out')}, expected {res.d_out}")
    return res


def convert(
    t_start: int, t_stop: int, cfg: TdcConfig = None, mode: str = "behavioral", netlist: Netlist = None, log_fh=None
) -> ConversionResult:
    cfg = cfg or TdcConfig()
    if log_fh is not None and mode != "structural":
        raise ValueError("an event log is only available in structural mode")
    if mode == "behavioral":
        return convert_behavioral(t_start, t_stop, cfg)
    if mode == "structural":
        return convert_structural(t_start, t_stop, cfg, netlist, log_fh)
    raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
