"""Rebuild node states from a recorded trace by re-driving the detector.

Only the inputs recorded in the trace are used: heartbeat sends (to rebuild
each payload from the sender's replayed state), deliveries with the
receiver's clock, timer firings and crashes.  The payload digests and the
recorded suspicion changes must come out the same.
"""
from __future__ import annotations

from collections import defaultdict

from . import core
from .channel import DeliveryDecision
from .scenario import Scenario
from .trace import (CRASH, DELIVER, DROP, SEND, SUBMIT, SUSPECT, TIMEOUT, TIMER, Record,
                    Trace, read_trace_file)


class ReplayMismatch(AssertionError):
    pass


def replay(records, scenario: Scenario, grow_neighbor_paths: bool = True) -> dict[int, core.NodeState]:
    states = {
        p: core.new_node_state(p, scenario.neighbors(p), scenario.n, scenario.nodes[p].T,
                               grow_neighbor_paths)
        for p in range(scenario.n)
    }
    sent: dict[int, core.HeartbeatMessage] = {}
    produced: list[tuple] = []
    expected: list[tuple] = []

    for rec in records:
        st = states.get(rec.node)
        if st is None:
            raise ReplayMismatch(f"unknown node in {rec}")
        if rec.kind == SEND:
            st.clock = rec.clock
            out = core.on_heartbeat_tick(st)
            if tuple(q for q, _ in out) != tuple(rec.dests):
                raise ReplayMismatch(f"destinations differ at {rec}")
            if out:
                msg = out[0][1]
                if msg.digest != rec.digest:
                    raise ReplayMismatch(f"payload digest differs at {rec}")
                sent[rec.msg] = msg
        elif rec.kind == DELIVER:
            st.clock = rec.clock
            before = st.timeout[rec.target]
            changes = core.on_receive(st, sent[rec.msg])
            if st.timeout[rec.target] != before:
                produced.append((TIMEOUT, rec.time, rec.node, rec.target, st.timeout[rec.target]))
            produced.extend((SUSPECT, rec.time, rec.node, c.target, c.suspected) for c in changes)
        elif rec.kind == TIMER:
            st.clock = rec.clock
            changes = core.on_timer_expiry(st, rec.target)
            produced.extend((SUSPECT, rec.time, rec.node, c.target, c.suspected) for c in changes)
        elif rec.kind == CRASH:
            st.crashed = True
        elif rec.kind in (SUSPECT, TIMEOUT):
            expected.append((rec.kind, rec.time, rec.node, rec.target, rec.value))

    if produced != expected:
        for i, (a, b) in enumerate(zip(produced, expected)):
            if a != b:
                raise ReplayMismatch(f"record {i}: replay gives {a}, trace has {b}")
        raise ReplayMismatch(f"replay produced {len(produced)} changes, trace has {len(expected)}")
    return states


def channel_logs_from_records(records) -> dict:
    """Per-channel decision logs in submission order, read back from a trace."""
    logs = defaultdict(list)
    for rec in records:
        if rec.kind in (SUBMIT, DROP):
            log = logs[(rec.node, rec.target)]
            log.append(DeliveryDecision(len(log), bool(rec.privileged),
                                        rec.delay if rec.kind == SUBMIT else None))
    return {key: tuple(log) for key, log in logs.items()}


def trace_from_records(records: list[Record], scenario: Scenario, horizon) -> Trace:
    """Reassemble a Trace (final states included) from serialized records."""
    states = replay(records, scenario)
    return Trace(records=tuple(records), final_states=states,
                 channel_logs=channel_logs_from_records(records), horizon=horizon)


def read_trace_and_rebuild(path, scenario: Scenario) -> Trace:
    """Load a JSONL trace, replay it and check the recorded final states."""
    records, horizon, finals = read_trace_file(path)
    if horizon is None:
        raise ValueError(f"{path}: no horizon record")
    trace = trace_from_records(records, scenario, horizon)
    for p, recorded in finals.items():
        if p not in trace.final_states:
            raise ReplayMismatch(f"final state for unknown node {p}")
        rebuilt = core.state_to_dict(trace.final_states[p])
        if rebuilt != {k: v for k, v in recorded.items() if k != "kind"}:
            raise ReplayMismatch(f"final state of node {p} differs from replay")
    return trace
