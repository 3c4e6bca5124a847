"""Deterministic discrete-event simulator driving detector nodes over ADD channels.

Global time is exact.  Node ``p``'s local tick ``k`` happens at global time
``phase_p + k / rate_p``.  Internally every time is an integer count of a
quantum that divides all phases, tick lengths, delays and crash times of the
scenario, so the event queue never compares rationals.  Simultaneous events
run in the order they were scheduled.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction

from . import core
from .channel import DELAY_RESOLUTION, ChannelState
from .scenario import Scenario
from .trace import (CRASH, DELIVER, DISCARD, DROP, SEND, SUBMIT, SUSPECT, TIMEOUT,
                    TIMER, Record, Trace)

_CRASH, _TICK, _DELIVER, _TIMER = range(4)


@dataclass(frozen=True)
class ClockMap:
    rates: tuple[Fraction, ...]
    phases: tuple[Fraction, ...]

    @classmethod
    def from_scenario(cls, s: Scenario) -> "ClockMap":
        return cls(tuple(p.rate for p in s.nodes), tuple(p.phase for p in s.nodes))


def local_to_global(clocks: ClockMap, node: int, tick: int) -> Fraction:
    if tick < 0:
        raise ValueError("tick must be non-negative")
    return clocks.phases[node] + tick / clocks.rates[node]


def global_to_local(clocks: ClockMap, node: int, t) -> int:
    """Whole local ticks elapsed by global time `t` (0 before the node starts)."""
    return max(0, math.floor((t - clocks.phases[node]) * clocks.rates[node]))


def time_quantum(s: Scenario) -> int:
    """Smallest N such that every scenario time is a multiple of 1/N."""
    dens = [s.horizon.denominator]
    dens += [t.denominator for _, t in s.crashes]
    for node in s.nodes:
        dens.append(node.phase.denominator)
        dens.append((1 / node.rate).denominator)
    for c in s.channels.values():
        dens.append((c.d / DELAY_RESOLUTION).denominator)
        dens.append((c.unprivileged_delay_max / DELAY_RESOLUTION).denominator)
    return math.lcm(*dens)


class _Engine:
    def __init__(self, scenario: Scenario, grow_neighbor_paths: bool = True):
        self.s = scenario
        self.q = time_quantum(scenario)
        self.phase = [self.units(p.phase) for p in scenario.nodes]
        self.tick_len = [self.units(1 / p.rate) for p in scenario.nodes]
        self.states = [
            core.new_node_state(p, scenario.neighbors(p), scenario.n, scenario.nodes[p].T,
                                grow_neighbor_paths)
            for p in range(scenario.n)
        ]
        self.channels = {
            key: ChannelState.create(params, scenario.seed, *key)
            for key, params in sorted(scenario.channels.items())
        }
        self.queue: list = []
        self.seq = 0
        self.msg_ids = 0
        self.timer_gen: dict[tuple[int, int], int] = {}
        self.records: list[Record] = []
        self.now = Fraction(0)

    def units(self, x) -> int:
        x = Fraction(x)
        return x.numerator * (self.q // x.denominator)

    def global_time(self, p: int, tick: int) -> int:
        return self.phase[p] + tick * self.tick_len[p]

    def local_clock(self, p: int, t: int) -> int:
        return max(0, (t - self.phase[p]) // self.tick_len[p])

    def push(self, time: int, kind, *args):
        heapq.heappush(self.queue, (time, self.seq, kind, args))
        self.seq += 1

    def arm_timer(self, p: int, q: int):
        gen = self.timer_gen.get((p, q), 0) + 1
        self.timer_gen[(p, q)] = gen
        self.push(self.global_time(p, core.timer_deadline(self.states[p], q)), _TIMER, p, q, gen)

    def emit_changes(self, p, changes):
        clock = self.states[p].clock
        for ch in changes:
            self.records.append(Record(SUSPECT, self.now, p, ch.target, clock=clock,
                                       value=ch.suspected))

    def run(self) -> Trace:
        s = self.s
        for node, t in s.crashes:
            self.push(self.units(t), _CRASH, node)
        for p in range(s.n):
            self.push(self.global_time(p, 0), _TICK, p, 0)
            for q in sorted(self.states[p].neighbors):
                self.arm_timer(p, q)

        handlers = {_CRASH: self.on_crash, _TICK: self.on_tick,
                    _DELIVER: self.on_deliver, _TIMER: self.on_timer}
        horizon = self.units(s.horizon)
        queue = self.queue
        last = None
        while queue and queue[0][0] <= horizon:
            t, _, kind, args = heapq.heappop(queue)
            if t != last:
                self.now = Fraction(t, self.q)
                last = t
            handlers[kind](t, *args)

        return Trace(
            records=tuple(self.records),
            final_states={st.self_id: st for st in self.states},
            channel_logs={key: tuple(ch.log) for key, ch in self.channels.items()},
            horizon=s.horizon,
        )

    def on_crash(self, t, p):
        self.states[p].crashed = True
        self.records.append(Record(CRASH, self.now, p))

    def on_tick(self, t, p, k):
        st = self.states[p]
        if st.crashed:
            return
        st.clock = k
        out = core.on_heartbeat_tick(st)
        mid = self.msg_ids
        self.msg_ids += 1
        digest = out[0][1].digest if out else None
        self.records.append(Record(SEND, self.now, p, msg=mid, clock=k,
                                   dests=tuple(q for q, _ in out), digest=digest))
        for q, msg in out:
            dec = self.channels[(p, q)].submit(self.now)
            if dec.dropped:
                self.records.append(Record(DROP, self.now, p, q, msg=mid, privileged=False))
            else:
                self.records.append(Record(SUBMIT, self.now, p, q, msg=mid,
                                           privileged=dec.privileged, delay=dec.delay))
                self.push(t + self.units(dec.delay), _DELIVER, q, p, msg, mid)
        self.push(self.global_time(p, k + st.T), _TICK, p, k + st.T)

    def on_deliver(self, t, p, src, msg, mid):
        st = self.states[p]
        if st.crashed:
            self.records.append(Record(DISCARD, self.now, p, src, msg=mid))
            return
        st.clock = self.local_clock(p, t)
        old_timeout = st.timeout[src]
        self.records.append(Record(DELIVER, self.now, p, src, msg=mid, clock=st.clock))
        changes = core.on_receive(st, msg)
        if st.timeout[src] != old_timeout:
            self.records.append(Record(TIMEOUT, self.now, p, src, clock=st.clock,
                                       value=st.timeout[src]))
        self.emit_changes(p, changes)
        self.arm_timer(p, src)

    def on_timer(self, t, p, q, gen):
        st = self.states[p]
        if st.crashed or self.timer_gen[(p, q)] != gen:
            return
        st.clock = self.local_clock(p, t)
        if not core.timer_due(st, q):
            return
        self.records.append(Record(TIMER, self.now, p, q, clock=st.clock))
        self.emit_changes(p, core.on_timer_expiry(st, q))


def run(scenario: Scenario, grow_neighbor_paths: bool = True) -> Trace:
    """Simulate `scenario` up to its horizon and return the full trace.

    With ``grow_neighbor_paths=False`` path sets for direct neighbors stay at
    their initial single edge; suspicion decisions are the same either way.
    """
    scenario.validate()
    return _Engine(scenario, grow_neighbor_paths).run()
