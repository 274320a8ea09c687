"""Gate-level building blocks: buffer, NOT/NOR/XOR, D flip-flop, counter,
fixed-width adder, multiplexer, plus the clock source and ALU.

Each block exists twice: as a pure function over explicit state (used by the
closed-form models) and as a :class:`~tdc_forge.sim.Component` for the
structural simulator.  The components call the pure functions so both views
share one arithmetic.
"""

from dataclasses import dataclass, replace
from typing import Sequence

from .errors import IndexOutOfRange, InvalidConfig
from .sim import HIGH, LOW, Component, Event, Level

DEFAULT_WIDTH = 35


@dataclass(frozen=True)
class BufferSpec:
    delay: int

    def __post_init__(self):
        if self.delay <= 0:
            raise InvalidConfig(f"buffer delay must be > 0 fs, got {self.delay}")


@dataclass(frozen=True)
class CounterState:
    width: int = DEFAULT_WIDTH
    value: int = 0
    overflowed: bool = False

    @property
    def limit(self) -> int:
        return (1 << self.width) - 1


@dataclass(frozen=True)
class AdderSpec:
    width: int = DEFAULT_WIDTH


def buffer_react(edge: Event, spec: BufferSpec) -> Event:
    return Event(edge.at + spec.delay, edge.net, edge.seq, edge.new_level)


def dff_capture(d: Level, clk_rising: Event) -> Level:
    """Q after a rising edge: the D level settled when the edge is evaluated.

    Same-instant ordering is the kernel's job; by the time a clock edge is
    applied every other transition pending at that instant already is, and
    transitions the edge itself causes are not yet.
    """
    return Level(d)


def counter_step(state: CounterState, enable: Level, gate: Level, clk_rising: Event = None) -> CounterState:
    if not (enable and gate):
        return state
    if state.value >= state.limit:
        return replace(state, overflowed=True)
    return replace(state, value=state.value + 1)


def add_fixed(a: int, b: int, spec: AdderSpec = AdderSpec()) -> tuple[int, bool]:
    mod = 1 << spec.width
    if not (0 <= a < mod and 0 <= b < mod):
        raise ValueError(f"adder operands must be in [0, 2^{spec.width})")
    s = a + b
    return s % mod, s >= mod


def mux_select(inputs: Sequence[int], sel: int) -> int:
    if not 0 <= sel < len(inputs):
        raise IndexOutOfRange(f"mux select {sel} out of range for {len(inputs)} inputs")
    return inputs[sel]


def nor(*levels: Level) -> Level:
    return LOW if any(levels) else HIGH


def xor(a: Level, b: Level) -> Level:
    return Level(int(a) ^ int(b))


# -- structural components -------------------------------------------------


class Buffer(Component):
    kind = "buffer"

    def __init__(self, name, inp, out, delay):
        super().__init__(name)
        self.spec = BufferSpec(delay)
        self.inputs = {"a": inp}
        self.outputs = {"y": out}

    @property
    def delay(self):
        return self.spec.delay

    def react(self, sim, port, level):
        sim.schedule(sim.now + self.spec.delay, self.outputs["y"], level)


class _Gate(Component):
    zero_delay = True

    def __init__(self, name, inputs, out):
        super().__init__(name)
        self.inputs = {f"a{i}": n for i, n in enumerate(inputs)}
        self.outputs = {"y": out}
        self._out = None

    def compute(self, levels):
        raise NotImplementedError

    def _eval(self, sim):
        y = self.compute([sim.probe(n) for n in self.inputs.values()])
        if y != self._out:
            self._out = y
            sim.schedule(sim.now, self.outputs["y"], y)

    def reset(self, sim):
        self._out = sim.netlist.nets[self.outputs["y"]].reset
        self._eval(sim)

    def react(self, sim, port, level):
        self._eval(sim)


class Not(_Gate):
    kind = "not"

    def __init__(self, name, inp, out):
        super().__init__(name, [inp], out)

    def compute(self, levels):
        return ~levels[0]


class Nor(_Gate):
    kind = "nor"

    def compute(self, levels):
        return nor(*levels)


class Xor(_Gate):
    kind = "xor"

    def __init__(self, name, a, b, out):
        super().__init__(name, [a, b], out)

    def compute(self, levels):
        return xor(*levels)


class ClockSource(Component):
    """Free-running clock; rising edges at every multiple of ``period``."""

    kind = "clock"

    def __init__(self, name, out, period):
        super().__init__(name)
        if period < 2:
            raise InvalidConfig(f"structural clock period must be >= 2 fs, got {period}")
        self.period = period
        self.high = period // 2
        self.outputs = {"y": out}
        self.inputs = {"fb": out}

    def reset(self, sim):
        sim.schedule(0, self.outputs["y"], HIGH)

    def react(self, sim, port, level):
        if level:
            sim.schedule(sim.now + self.high, self.outputs["y"], LOW)
        else:
            sim.schedule(sim.now - self.high + self.period, self.outputs["y"], HIGH)


class DFlipFlop(Component):
    kind = "dff"

    def __init__(self, name, d, clk, q):
        super().__init__(name)
        self.inputs = {"d": d, "clk": clk}
        self.outputs = {"q": q}
        self.q = LOW

    def reset(self, sim):
        self.q = LOW

    def react(self, sim, port, level):
        if port != "clk" or not level:
            return
        q = dff_capture(sim.probe(self.inputs["d"]), None)
        if q != self.q:
            self.q = q
            sim.schedule(sim.now, self.outputs["q"], q)


class Counter(Component):
    """Saturating counter of rising clock edges seen while ``en`` and ``gate`` are High.

    The component only subscribes to the clock while both qualifiers are High,
    which is equivalent to testing them on every edge but far cheaper.
    """

    kind = "counter"
    lazy_ports = ("clk",)

    def __init__(self, name, clk, en, gate, out, width=DEFAULT_WIDTH):
        super().__init__(name)
        self.inputs = {"clk": clk, "en": en, "gate": gate}
        self.clk = clk
        self.word_outputs = {"q": out}
        self.width = width
        self.state = CounterState(width)
        self._armed = False

    def reset(self, sim):
        self.state = CounterState(self.width)
        sim.set_word(self.word_outputs["q"], 0)
        self._armed = False
        self._rearm(sim)

    def _rearm(self, sim):
        want = bool(sim.probe(self.inputs["en"]) and sim.probe(self.inputs["gate"]))
        if want and not self._armed:
            sim.listen(self.clk, self, "clk")
        elif not want and self._armed:
            sim.unlisten(self.clk, self, "clk")
        self._armed = want

    def react(self, sim, port, level):
        if port == "clk":
            if level:
                self.state = counter_step(self.state, HIGH, HIGH)
                sim.set_word(self.word_outputs["q"], self.state.value)
        else:
            self._rearm(sim)


class Adder(Component):
    kind = "adder"

    def __init__(self, name, a, b, out, width=DEFAULT_WIDTH):
        super().__init__(name)
        self.word_inputs = {"a": a, "b": b}
        self.word_outputs = {"s": out}
        self.spec = AdderSpec(width)
        self.carry = False

    def evaluate_words(self, sim):
        s, self.carry = add_fixed(sim.word(self.word_inputs["a"]), sim.word(self.word_inputs["b"]), self.spec)
        sim.set_word(self.word_outputs["s"], s)


class Mux(Component):
    kind = "mux"

    def __init__(self, name, inputs, sel, out):
        super().__init__(name)
        self.word_inputs = {f"i{k}": b for k, b in enumerate(inputs)}
        self.word_inputs["sel"] = sel
        self.word_outputs = {"y": out}
        self._data = list(inputs)

    def evaluate_words(self, sim):
        v = mux_select([sim.word(b) for b in self._data], sim.word(self.word_inputs["sel"]))
        sim.set_word(self.word_outputs["y"], v)


def alu_fixed(n_c: int, n_f1: int, n_f2: int, scale_k: int, width: int) -> tuple[int, bool]:
    """``scale_k*n_c + n_f1 - n_f2`` on a ``width``-bit two's-complement datapath.

    Returns the signed result and an overflow flag.
    """
    mod = 1 << width
    spec = AdderSpec(width)
    product = n_c * scale_k
    overflow = product >= mod
    acc, carry = add_fixed(product % mod, n_f1, spec)
    acc, _ = add_fixed(acc, (mod - n_f2) % mod, spec)
    signed = acc - mod if acc >> (width - 1) else acc
    overflow = overflow or carry or signed != product + n_f1 - n_f2
    return signed, overflow


class Alu(Component):
    kind = "alu"

    def __init__(self, name, coarse, fine1, fine2, out, scale_k, width=DEFAULT_WIDTH):
        super().__init__(name)
        self.word_inputs = {"n_c": coarse, "n_f1": fine1, "n_f2": fine2}
        self.word_outputs = {"d_out": out}
        self.scale_k = scale_k
        self.width = width
        self.overflow = False

    def evaluate_words(self, sim):
        d, self.overflow = alu_fixed(
            sim.word(self.word_inputs["n_c"]),
            sim.word(self.word_inputs["n_f1"]),
            sim.word(self.word_inputs["n_f2"]),
            self.scale_k,
            self.width,
        )
        sim.set_word(self.word_outputs["d_out"], d)
