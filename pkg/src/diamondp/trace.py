"""Trace records and their line-delimited JSON encoding."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .core import NodeState, state_to_dict

# record kinds
SEND = "send"          # node broadcast heartbeat `msg` to `dests`
SUBMIT = "submit"      # channel node->target accepted `msg`, will deliver after `delay`
DROP = "drop"          # channel node->target lost `msg`
DELIVER = "deliver"    # node received `msg` from target
DISCARD = "discard"    # `msg` from target arrived at crashed node
SUSPECT = "suspect"    # node's suspect[target] became `value`
TIMEOUT = "timeout"    # node's timeout[target] became `value`
TIMER = "timer"        # node's timer for target fired
CRASH = "crash"

_FIELDS = ("kind", "time", "node", "target", "msg", "clock", "value",
           "privileged", "delay", "dests", "digest")


@dataclass(frozen=True, slots=True)
class Record:
    kind: str
    time: Fraction
    node: int
    target: Optional[int] = None
    msg: Optional[int] = None
    clock: Optional[int] = None
    value: object = None
    privileged: Optional[bool] = None
    delay: Optional[Fraction] = None
    dests: Optional[tuple[int, ...]] = None
    digest: Optional[str] = None

    def to_json(self) -> dict:
        out = {}
        for name in _FIELDS:
            v = getattr(self, name)
            if v is None:
                continue
            if isinstance(v, Fraction):
                v = str(v)
            elif isinstance(v, tuple):
                v = list(v)
            out[name] = v
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Record":
        kw = dict(obj)
        kw["time"] = Fraction(kw["time"])
        if "delay" in kw:
            kw["delay"] = Fraction(kw["delay"])
        if "dests" in kw:
            kw["dests"] = tuple(kw["dests"])
        return cls(**kw)


@dataclass(frozen=True)
class Trace:
    records: tuple[Record, ...]
    final_states: dict[int, NodeState] = field(hash=False)
    channel_logs: dict = field(hash=False)  # (src, dst) -> list[DeliveryDecision]
    horizon: Fraction = Fraction(0)

    def of_kind(self, *kinds: str):
        return (rec for rec in self.records if rec.kind in kinds)


def dump_trace_lines(trace: Trace):
    """Yield the trace as JSON lines; final node states close the stream."""
    for rec in trace.records:
        yield json.dumps(rec.to_json(), separators=(",", ":"))
    yield json.dumps({"kind": "horizon", "time": str(trace.horizon)}, separators=(",", ":"))
    for node in sorted(trace.final_states):
        yield json.dumps({"kind": "final", **state_to_dict(trace.final_states[node])},
                         separators=(",", ":"))


def dumps_trace(trace: Trace) -> str:
    return "\n".join(dump_trace_lines(trace)) + "\n"


def read_trace_file(path):
    """Return (records, horizon, final state dicts) from a JSONL trace."""
    records, finals, horizon = [], {}, None
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{lineno}: {e.msg}") from None
            kind = obj.get("kind")
            if kind == "final":
                finals[obj["node"]] = obj
            elif kind == "horizon":
                horizon = Fraction(obj["time"])
            else:
                records.append(Record.from_json(obj))
    return records, horizon, finals
