"""Multiple-delay-line fine interpolator.

A one-shot pulse enters ``n_lines`` parallel buffer chains.  Every tap feeds
a counter that counts system-clock rising edges while the delayed pulse is
High at that tap.  Each line's counters are summed by a chain of two-input
adders and a multiplexer walks the line sums into the fine code.

Lines are staggered by ``line_offset`` so the tap delays, taken modulo the
clock period, interleave; with the defaults at 800 MHz the 80 taps land on 80
distinct phases 15.625 ps apart.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import IndexOutOfRange, InvalidConfig
from .primitives import DEFAULT_WIDTH, AdderSpec, Adder, Buffer, ClockSource, Counter, Mux, add_fixed
from .sim import HIGH, Netlist, Simulator
from .timebase import ceil_div

RNG_ALGORITHM = "numpy.random.PCG64"


@dataclass(frozen=True)
class FineTdcConfig:
    n_lines: int = 4
    taps_per_line: int = 20
    cell_delay: int = 62_500
    line_offset: int = 15_625
    counter_width: int = DEFAULT_WIDTH
    adder_width: int = DEFAULT_WIDTH
    tap_perturbations: Optional[tuple[int, ...]] = None
    perturbation_sigma: int = 0
    seed: Optional[int] = None
    perturbations: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_lines < 1 or self.taps_per_line < 1:
            raise InvalidConfig("n_lines and taps_per_line must be >= 1")
        if self.cell_delay <= 0:
            raise InvalidConfig(f"cell_delay must be > 0 fs, got {self.cell_delay}")
        if self.line_offset < 0:
            raise InvalidConfig(f"line_offset must be >= 0 fs, got {self.line_offset}")
        if self.counter_width < 1 or self.adder_width < 1:
            raise InvalidConfig("counter and adder widths must be >= 1 bit")
        if self.perturbation_sigma < 0:
            raise InvalidConfig("perturbation_sigma must be >= 0")
        n = self.n_taps
        if self.tap_perturbations is not None:
            pert = tuple(int(x) for x in self.tap_perturbations)
            if len(pert) != n:
                raise InvalidConfig(f"tap_perturbations has {len(pert)} entries, expected {n}")
            object.__setattr__(self, "tap_perturbations", pert)
        elif self.perturbation_sigma > 0:
            if self.seed is None:
                raise InvalidConfig("perturbation_sigma needs a seed")
            rng = np.random.Generator(np.random.PCG64(self.seed))
            pert = tuple(int(x) for x in np.rint(rng.normal(0.0, self.perturbation_sigma, n)))
        else:
            pert = (0,) * n
        object.__setattr__(self, "perturbations", pert)
        for l, line in enumerate(self.buffer_delays):
            for k, d in enumerate(line):
                if d <= 0:
                    raise InvalidConfig(f"perturbed delay of buffer (line {l}, tap {k}) is {d} fs; must stay > 0")

    @classmethod
    def uniform(cls, t_clk: int, n_lines: int = 4, taps_per_line: int = 20, **kw) -> "FineTdcConfig":
        """Delay-wrapped placement: one line spans one period, lines interleave."""
        cell = t_clk // taps_per_line
        return cls(n_lines=n_lines, taps_per_line=taps_per_line, cell_delay=cell, line_offset=cell // n_lines, **kw)

    @property
    def n_taps(self) -> int:
        return self.n_lines * self.taps_per_line

    @cached_property
    def tap_delays(self) -> tuple[tuple[int, ...], ...]:
        return tuple(
            tuple(
                l * self.line_offset + (k + 1) * self.cell_delay + self.perturbations[l * self.taps_per_line + k]
                for k in range(self.taps_per_line)
            )
            for l in range(self.n_lines)
        )

    @cached_property
    def buffer_delays(self) -> tuple[tuple[int, ...], ...]:
        # the line offset is folded into each line's first buffer
        out = []
        for line in self.tap_delays:
            prev = 0
            row = []
            for d in line:
                row.append(d - prev)
                prev = d
            out.append(tuple(row))
        return tuple(out)


@dataclass(frozen=True)
class FineCode:
    per_tap: tuple[tuple[int, ...], ...]
    per_line_sum: tuple[int, ...]
    total: int
    overflow: bool


def tap_delay(l: int, k: int, cfg: FineTdcConfig) -> int:
    if not (0 <= l < cfg.n_lines and 0 <= k < cfg.taps_per_line):
        raise IndexOutOfRange(f"tap ({l}, {k}) outside {cfg.n_lines} x {cfg.taps_per_line}")
    return cfg.tap_delays[l][k]


def count_edges(a: int, width: int, t_clk: int) -> int:
    """Number of clock edges ``m*t_clk`` (m >= 0) inside ``[a, a + width)``."""
    lo = max(ceil_div(a, t_clk), 0)
    hi = ceil_div(a + width, t_clk)
    return max(hi - lo, 0)


def _wrapping_sum(words: Sequence[int], width: int) -> tuple[int, bool]:
    # non-negative addends: a chain of width-bit adders wraps at most into
    # (sum mod 2^width) and carries iff the true sum reaches 2^width
    total = sum(words)
    mod = 1 << width
    return total % mod, total >= mod


def _line_sum(counts: Sequence[int], width: int) -> tuple[int, bool]:
    return _wrapping_sum(counts, width)


def _accumulate(per_line_sum: Sequence[int], width: int) -> tuple[int, bool]:
    return _wrapping_sum(per_line_sum, width)


def fine_total(code: FineCode, cfg: FineTdcConfig) -> tuple[int, bool]:
    """Grand sum of the line sums, read out one mux position at a time."""
    total, carry = _accumulate(code.per_line_sum, cfg.adder_width)
    return total, carry or code.overflow


def _compose(per_tap, cfg: FineTdcConfig, overflow: bool) -> FineCode:
    sums = []
    for row in per_tap:
        s, cy = _line_sum(row, cfg.adder_width)
        sums.append(s)
        overflow |= cy
    total, cy = _accumulate(sums, cfg.adder_width)
    return FineCode(tuple(tuple(r) for r in per_tap), tuple(sums), total, overflow or cy)


def fine_count_behavioral(pulse_start: int, pulse_width: int, cfg: FineTdcConfig, t_clk: int) -> FineCode:
    if pulse_width < 0:
        raise ValueError(f"pulse_width must be >= 0, got {pulse_width}")
    limit = (1 << cfg.counter_width) - 1
    end = pulse_start + pulse_width
    per_tap = []
    for line in cfg.tap_delays:
        # count_edges inlined: edges m*t_clk, m >= 0, in [start + d, end + d)
        per_tap.append([max(-((-end - d) // t_clk) - max(-((-pulse_start - d) // t_clk), 0), 0) for d in line])
    overflow = False
    if any(n > limit for row in per_tap for n in row):
        overflow = True
        per_tap = [[min(n, limit) for n in row] for row in per_tap]
    return _compose(per_tap, cfg, overflow)


# -- structural --------------------------------------------------------------


@dataclass
class FineTdcBlock:
    """Handles into one instantiated fine TDC inside a larger netlist."""

    cfg: FineTdcConfig
    counters: list[list[Counter]]
    adders: list[list[Adder]]
    line_out: list[str]
    mux: Mux
    sel: str
    out: str


def add_fine_tdc(nl: Netlist, prefix: str, clk: str, en: str, pulse: str, cfg: FineTdcConfig) -> FineTdcBlock:
    p = prefix
    counters, adders, line_out = [], [], []
    for l, delays in enumerate(cfg.buffer_delays):
        src = pulse
        row_c, row_a = [], []
        acc = None
        for k, d in enumerate(delays):
            tap = nl.net(f"{p}tap_{l}_{k}")
            nl.add(Buffer(f"{p}buf_{l}_{k}", src, tap, d))
            q = nl.bus(f"{p}cnt_{l}_{k}")
            row_c.append(nl.add(Counter(f"{p}counter_{l}_{k}", clk, en, tap, q, cfg.counter_width)))
            if acc is None:
                acc = q
            else:
                s = nl.bus(f"{p}sum_{l}_{k - 1}")
                row_a.append(nl.add(Adder(f"{p}adder_{l}_{k - 1}", acc, q, s, cfg.adder_width)))
                acc = s
            src = tap
        counters.append(row_c)
        adders.append(row_a)
        line_out.append(acc)
    sel = nl.bus(f"{p}mux_sel")
    out = nl.bus(f"{p}mux_out")
    mux = nl.add(Mux(f"{p}mux", line_out, sel, out))
    return FineTdcBlock(cfg, counters, adders, line_out, mux, sel, out)


def readout_fine(sim: Simulator, blk: FineTdcBlock) -> FineCode:
    """Settle the adder trees, then step the mux over every line and accumulate."""
    sim.settle_words()
    per_tap = tuple(tuple(c.state.value for c in row) for row in blk.counters)
    overflow = any(c.state.overflowed for row in blk.counters for c in row)
    overflow |= any(a.carry for row in blk.adders for a in row)
    per_line = tuple(sim.word(b) for b in blk.line_out)
    spec = AdderSpec(blk.cfg.adder_width)
    acc = 0
    for sel in range(len(blk.line_out)):
        sim.set_word(blk.sel, sel)
        sim.settle_words()
        acc, cy = add_fixed(acc, sim.word(blk.out), spec)
        overflow |= cy
    return FineCode(per_tap, per_line, acc, overflow)


def build_fine_tdc_netlist(cfg: FineTdcConfig, t_clk: int) -> Netlist:
    nl = Netlist("fine_tdc")
    pulse = nl.net("pulse")
    en = nl.net("en", reset=HIGH)
    clk = nl.net("clk", clock=True)
    nl.add(ClockSource("clkgen", clk, t_clk))
    nl.block = add_fine_tdc(nl, "", clk, en, pulse, cfg)
    nl.ports = {"clk": clk, "en": en, "pulse": pulse}
    return nl.build()


def simulate_fine(pulse_start: int, pulse_width: int, cfg: FineTdcConfig, t_clk: int, netlist: Netlist = None) -> FineCode:
    if pulse_width < 0:
        raise ValueError(f"pulse_width must be >= 0, got {pulse_width}")
    nl = netlist or build_fine_tdc_netlist(cfg, t_clk)
    sim = Simulator(nl, record=False)
    sim.schedule(pulse_start, nl.ports["pulse"], 1)
    sim.schedule(pulse_start + pulse_width, nl.ports["pulse"], 0)
    longest = max(line[-1] for line in cfg.tap_delays)
    sim.run_until(pulse_start + pulse_width + longest + t_clk)
    return readout_fine(sim, nl.block)
