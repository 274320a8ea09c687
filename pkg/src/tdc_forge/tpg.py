"""Time-to-pulse generator.

Splits an input interval ``[t_start, t_stop)`` into a clock-synchronous
coarse pulse and two fractional pulses, each fractional pulse lengthened by
one clock period so it is never narrower than ``t_clk``.
"""

from dataclasses import dataclass

from .errors import NonPositiveClock, NonPositiveInterval
from .primitives import ClockSource, DFlipFlop, Nor, Not, Xor
from .sim import Netlist, Simulator, high_intervals
from .timebase import ceil_div, check_time


@dataclass(frozen=True)
class TpgOutput:
    tc: int
    tf1: int
    tf2: int
    tc_start: int
    tf1_start: int
    tf2_start: int


def next_edge(t: int, t_clk: int) -> int:
    """First clock edge at or after ``t``; edges sit at multiples of ``t_clk``."""
    return ceil_div(t, t_clk) * t_clk


def tpg_decompose(t_start: int, t_stop: int, t_clk: int) -> TpgOutput:
    check_time(t_start, "t_start")
    check_time(t_stop, "t_stop")
    check_time(t_clk, "t_clk")
    if t_clk <= 0:
        raise NonPositiveClock(f"t_clk must be > 0, got {t_clk}")
    if t_stop <= t_start:
        raise NonPositiveInterval(f"t_stop ({t_stop}) must be after t_start ({t_start})")
    e1 = next_edge(t_start, t_clk)
    e2 = next_edge(t_stop, t_clk)
    return TpgOutput(
        tc=e2 - e1,
        tf1=e1 - t_start + t_clk,
        tf2=e2 - t_stop + t_clk,
        tc_start=e1,
        tf1_start=t_start,
        tf2_start=t_stop,
    )


def add_tpg(nl: Netlist, prefix: str, clk: str, start: str, stop: str) -> dict[str, str]:
    """Instantiate the TPG gate network; returns the names of its output nets.

    Two flip-flop pairs synchronise START and STOP.  The first stage of each
    pair marks the first clock edge at or after the event; the XOR of the two
    first stages is the coarse pulse.  Each fractional pulse is its event
    level NOR'ed (via an inverter) with the second stage, so it lasts from
    the event until one period past its synchronising edge.
    """
    p = prefix
    a1, a2, b1, b2 = (nl.net(f"{p}{n}") for n in ("start_s1", "start_s2", "stop_s1", "stop_s2"))
    nstart, nstop = nl.net(f"{p}start_n"), nl.net(f"{p}stop_n")
    tf1, tf2, tc = nl.net(f"{p}tf1"), nl.net(f"{p}tf2"), nl.net(f"{p}tc")
    nl.add(DFlipFlop(f"{p}ff_start1", start, clk, a1))
    nl.add(DFlipFlop(f"{p}ff_start2", a1, clk, a2))
    nl.add(DFlipFlop(f"{p}ff_stop1", stop, clk, b1))
    nl.add(DFlipFlop(f"{p}ff_stop2", b1, clk, b2))
    nl.add(Not(f"{p}inv_start", start, nstart))
    nl.add(Not(f"{p}inv_stop", stop, nstop))
    nl.add(Nor(f"{p}nor_tf1", [nstart, a2], tf1))
    nl.add(Nor(f"{p}nor_tf2", [nstop, b2], tf2))
    nl.add(Xor(f"{p}xor_tc", a1, b1, tc))
    return {"tf1": tf1, "tf2": tf2, "tc": tc, "start_sync": a1, "stop_sync": b1}


def build_tpg_netlist(t_clk: int) -> Netlist:
    if t_clk <= 0:
        raise NonPositiveClock(f"t_clk must be > 0, got {t_clk}")
    nl = Netlist("tpg")
    start, stop = nl.net("start"), nl.net("stop")
    clk = nl.net("clk", clock=True)
    nl.add(ClockSource("clkgen", clk, t_clk))
    nl.ports = {"clk": clk, "start": start, "stop": stop, **add_tpg(nl, "", clk, start, stop)}
    return nl.build()


def _pulse(sim: Simulator, net: str) -> tuple[int, int]:
    spans = [s for s in high_intervals(sim.waveform(net)) if s[1] is not None]
    if len(spans) != 1:
        raise AssertionError(f"expected exactly one pulse on {net}, got {spans}")
    return spans[0]


def simulate_tpg(t_start: int, t_stop: int, t_clk: int, netlist: Netlist = None) -> TpgOutput:
    """Run the gate-level TPG and measure its three pulses."""
    if t_stop <= t_start:
        raise NonPositiveInterval(f"t_stop ({t_stop}) must be after t_start ({t_start})")
    if t_start < 0:
        raise NonPositiveInterval("structural simulation starts at t = 0; t_start must be >= 0")
    nl = netlist or build_tpg_netlist(t_clk)
    sim = Simulator(nl)
    ports = nl.ports
    sim.schedule(t_start, ports["start"], 1)
    sim.schedule(t_stop, ports["stop"], 1)
    sim.run_until(t_stop + 3 * t_clk)
    r1, f1 = _pulse(sim, ports["tf1"])
    r2, f2 = _pulse(sim, ports["tf2"])
    sync = sim.waveform(ports["start_sync"])[0][0]
    coarse = [s for s in high_intervals(sim.waveform(ports["tc"])) if s[1] is not None]
    tc = sum(b - a for a, b in coarse)
    return TpgOutput(tc=tc, tf1=f1 - r1, tf2=f2 - r2, tc_start=sync, tf1_start=r1, tf2_start=r2)
