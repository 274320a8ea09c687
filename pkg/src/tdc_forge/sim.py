"""Deterministic discrete-event kernel over integer femtosecond time.

Nets carry two-valued logic levels; buses carry unsigned words.  Events are
ordered by ``(at, net rank, seq)``.  Net ranks follow declaration order except
that clock nets always rank last, so at any instant every pending stimulus or
delayed transition is applied before the clock edge is seen, while anything a
clock edge itself causes is applied after every clocked element has sampled.
"""

import heapq
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Optional

from .errors import CombinationalCycle, NetlistError, SchedulingInPast, UnknownNet
from .timebase import check_time


class Level(IntEnum):
    LOW = 0
    HIGH = 1

    def __invert__(self):
        return Level.HIGH if self is Level.LOW else Level.LOW


LOW = Level.LOW
HIGH = Level.HIGH


@dataclass(frozen=True, order=True)
class Event:
    at: int
    net: int
    seq: int
    new_level: Level = field(compare=False)


@dataclass
class Net:
    name: str
    reset: Level = LOW
    clock: bool = False
    rank: int = -1
    driver: Optional["Component"] = None


class Component:
    """A primitive instance.

    ``inputs``/``outputs`` map port names to net names; ``word_inputs``/
    ``word_outputs`` do the same for buses.  ``zero_delay`` marks elements
    whose outputs follow their inputs within the same instant; only those
    take part in the combinational-cycle check.  Ports in ``lazy_ports`` are
    not subscribed automatically; the component calls
    :meth:`Simulator.listen` itself.
    """

    kind = "component"
    zero_delay = False
    lazy_ports: tuple = ()

    def __init__(self, name: str):
        self.name = name
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        self.word_inputs: dict[str, str] = {}
        self.word_outputs: dict[str, str] = {}

    def reset(self, sim: "Simulator") -> None:
        pass

    def react(self, sim: "Simulator", port: str, level: Level) -> None:
        pass

    def evaluate_words(self, sim: "Simulator") -> None:
        pass

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class Netlist:
    def __init__(self, name: str = "top"):
        self.name = name
        self.nets: dict[str, Net] = {}
        self.buses: dict[str, Optional[Component]] = {}
        self.components: list[Component] = []
        self._names: set[str] = set()
        self._built = False
        self.ports: dict[str, str] = {}

    def net(self, name: str, reset: Level = LOW, clock: bool = False) -> str:
        if name in self.nets:
            raise NetlistError(f"net {name!r} declared twice")
        self.nets[name] = Net(name, Level(reset), clock)
        self._built = False
        return name

    def bus(self, name: str) -> str:
        if name in self.buses:
            raise NetlistError(f"bus {name!r} declared twice")
        self.buses[name] = None
        return name

    def add(self, comp: Component) -> Component:
        if comp.name in self._names:
            raise NetlistError(f"component {comp.name!r} added twice")
        self._names.add(comp.name)
        self.components.append(comp)
        self._built = False
        return comp

    def count(self, kind: str) -> int:
        return sum(1 for c in self.components if c.kind == kind)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.components:
            out[c.kind] = out.get(c.kind, 0) + 1
        return dict(sorted(out.items()))

    def build(self) -> "Netlist":
        """Bind drivers, assign net ranks and reject malformed structure."""
        for n in self.nets.values():
            n.driver = None
        for b in self.buses:
            self.buses[b] = None
        for c in self.components:
            for port, name in c.inputs.items():
                if name not in self.nets:
                    raise NetlistError(f"{c.name}.{port} bound to undeclared net {name!r}")
            for port, name in c.word_inputs.items():
                if name not in self.buses:
                    raise NetlistError(f"{c.name}.{port} bound to undeclared bus {name!r}")
            for port, name in c.outputs.items():
                net = self.nets.get(name)
                if net is None:
                    raise NetlistError(f"{c.name}.{port} drives undeclared net {name!r}")
                if net.driver is not None:
                    raise NetlistError(f"net {name!r} driven by both {net.driver.name} and {c.name}")
                net.driver = c
            for port, name in c.word_outputs.items():
                if name not in self.buses:
                    raise NetlistError(f"{c.name}.{port} drives undeclared bus {name!r}")
                if self.buses[name] is not None:
                    raise NetlistError(f"bus {name!r} driven by both {self.buses[name].name} and {c.name}")
                self.buses[name] = c
        ordered = [n for n in self.nets.values() if not n.clock] + [n for n in self.nets.values() if n.clock]
        for rank, n in enumerate(ordered):
            n.rank = rank
        self._check_cycles()
        self._word_order = self._word_topo()
        self._built = True
        return self

    def _check_cycles(self) -> None:
        # zero-delay components only; buffers and registers break loops
        succ: dict[int, list[Component]] = {}
        for c in self.components:
            if not c.zero_delay:
                continue
            for name in c.inputs.values():
                drv = self.nets[name].driver
                if drv is not None and drv.zero_delay:
                    succ.setdefault(id(drv), []).append(c)
        state: dict[int, int] = {}
        for root in self.components:
            if not root.zero_delay or id(root) in state:
                continue
            stack = [(root, iter(succ.get(id(root), ())))]
            state[id(root)] = 1
            while stack:
                node, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    state[id(node)] = 2
                    stack.pop()
                elif state.get(id(nxt)) == 1:
                    raise CombinationalCycle(f"combinational loop through {nxt.name}")
                elif id(nxt) not in state:
                    state[id(nxt)] = 1
                    stack.append((nxt, iter(succ.get(id(nxt), ()))))

    def _word_topo(self) -> list[Component]:
        evaluators = [c for c in self.components if c.word_inputs and c.word_outputs]
        done: set[int] = set()
        order: list[Component] = []
        visiting: set[int] = set()

        def visit(c):
            if id(c) in done:
                return
            if id(c) in visiting:
                raise CombinationalCycle(f"word-level loop through {c.name}")
            visiting.add(id(c))
            for b in c.word_inputs.values():
                drv = self.buses[b]
                if drv is not None and drv.word_inputs:
                    visit(drv)
            visiting.discard(id(c))
            done.add(id(c))
            order.append(c)

        for c in evaluators:
            visit(c)
        return order


class Simulator:
    """Single-run event-driven simulation of a built :class:`Netlist`."""

    def __init__(self, netlist: Netlist, record: bool = True):
        if not netlist._built:
            netlist.build()
        self.netlist = netlist
        self.now = 0
        self.record = record
        self.log: list[tuple[int, str, int]] = []
        self._queue: list[tuple[int, int, int, int]] = []
        self._seq = 0
        self._last_applied = 0
        nets = list(netlist.nets.values())
        self._by_rank: list[Net] = sorted(nets, key=lambda n: n.rank)
        self._rank = {n.name: n.rank for n in nets}
        self._level = [int(n.reset) for n in self._by_rank]
        self._words = {b: 0 for b in netlist.buses}
        self._listeners: list[list[tuple[Component, str]]] = [[] for _ in nets]
        for c in netlist.components:
            for port, name in c.inputs.items():
                if port not in c.lazy_ports:
                    self._listeners[self._rank[name]].append((c, port))
        for c in netlist.components:
            c.reset(self)

    # -- nets ------------------------------------------------------------
    def _rank_of(self, net) -> int:
        if isinstance(net, int) and not isinstance(net, bool):
            if not 0 <= net < len(self._level):
                raise UnknownNet(f"unknown net id {net}")
            return net
        try:
            return self._rank[net]
        except KeyError:
            raise UnknownNet(f"unknown net {net!r}") from None

    def net_name(self, rank: int) -> str:
        return self._by_rank[rank].name

    def probe(self, net) -> Level:
        return Level(self._level[self._rank_of(net)])

    def listen(self, net: str, comp: Component, port: str) -> None:
        self._listeners[self._rank[net]].append((comp, port))

    def unlisten(self, net: str, comp: Component, port: str) -> None:
        self._listeners[self._rank[net]].remove((comp, port))

    # -- buses -----------------------------------------------------------
    def word(self, bus: str) -> int:
        try:
            return self._words[bus]
        except KeyError:
            raise UnknownNet(f"unknown bus {bus!r}") from None

    def set_word(self, bus: str, value: int) -> None:
        if bus not in self._words:
            raise UnknownNet(f"unknown bus {bus!r}")
        self._words[bus] = value

    def settle_words(self) -> None:
        for c in self.netlist._word_order:
            c.evaluate_words(self)

    # -- events ----------------------------------------------------------
    def schedule(self, at: int, net, level) -> Event:
        check_time(at, "event time")
        if at < self.now:
            raise SchedulingInPast(f"event at {at} fs scheduled when now = {self.now} fs")
        rank = self._rank_of(net)
        ev = Event(at, rank, self._seq, Level(level))
        heapq.heappush(self._queue, (at, rank, self._seq, int(level)))
        self._seq += 1
        return ev

    def drive(self, net, waveform: Iterable[tuple[int, int]]) -> None:
        """Schedule a stimulus given as ``(time, level)`` pairs."""
        for at, level in waveform:
            self.schedule(at, net, level)

    def pending(self) -> int:
        return len(self._queue)

    def _apply(self, at: int, rank: int, level: int) -> None:
        self.now = at
        self._last_applied = at
        if self._level[rank] == level:
            return
        self._level[rank] = level
        if self.record:
            self.log.append((at, self._by_rank[rank].name, level))
        lv = Level(level)
        # snapshot: reactions may change the subscriber list
        for comp, port in tuple(self._listeners[rank]):
            comp.react(self, port, lv)

    def step(self) -> Optional[Event]:
        if not self._queue:
            return None
        at, rank, seq, level = heapq.heappop(self._queue)
        self._apply(at, rank, level)
        return Event(at, rank, seq, Level(level))

    def run_until(self, t: int) -> None:
        check_time(t, "run_until")
        if t < self.now:
            raise SchedulingInPast(f"run_until({t}) is before now = {self.now}")
        q = self._queue
        pop = heapq.heappop
        apply = self._apply
        while q and q[0][0] <= t:
            at, rank, _, level = pop(q)
            apply(at, rank, level)
        self.now = t

    def dump_log(self, fh) -> None:
        for at, name, level in self.log:
            fh.write(f"{at},{name},{level}\n")

    def waveform(self, net: str) -> list[tuple[int, int]]:
        """Settled transitions of one net: zero-width glitches removed."""
        if net not in self._rank:
            raise UnknownNet(f"unknown net {net!r}")
        level = int(self.netlist.nets[net].reset)
        settled: dict[int, int] = {}
        for at, name, lv in self.log:
            if name == net:
                settled[at] = lv
        out = []
        for at in sorted(settled):
            if settled[at] != level:
                level = settled[at]
                out.append((at, level))
        return out


def high_intervals(waveform: list[tuple[int, int]], initial: int = 0) -> list[tuple[int, int]]:
    """Turn a settled waveform into ``[rise, fall)`` intervals of High."""
    out = []
    start = 0 if initial else None
    for at, level in waveform:
        if level and start is None:
            start = at
        elif not level and start is not None:
            out.append((start, at))
            start = None
    if start is not None:
        out.append((start, None))
    return out
