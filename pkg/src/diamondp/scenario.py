"""Scenario description, validation and the JSON scenario file format.

File layout (every time, rate and probability may be a JSON number or a
string such as ``"3/2"`` or ``"0.25"``; both parse to exact rationals)::

    {
      "n": 3,
      "edges": [[0, 1], [1, 2]],
      "seed": 0,
      "horizon": 2000,
      "stability_window": null,
      "node_defaults": {"T": 5, "rate": "1", "phase": 0},
      "nodes": {"1": {"rate": "3/2"}},
      "channel_defaults": {"d": 1, "r": 2, "drop_probability": 0.5,
                           "p_priv": 0.2, "unprivileged_delay_max": 5,
                           "enforce_bound": true},
      "channels": {"0->1": {"r": 0}, "1-2": {"d": 2}},
      "crashes": [[2, 10]]
    }

A channel key ``"a->b"`` overrides one direction; ``"a-b"`` overrides both.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from typing import Optional

import networkx as nx

from .channel import ChannelParams


class ScenarioError(ValueError):
    """Scenario file could not be parsed or violates an invariant."""


@dataclass(frozen=True)
class NodeParams:
    T: int = 5
    rate: Fraction = Fraction(1)
    phase: Fraction = Fraction(0)


@dataclass(frozen=True)
class Scenario:
    n: int
    edges: tuple[tuple[int, int], ...]
    nodes: tuple[NodeParams, ...]
    channels: dict = field(hash=False)  # (src, dst) -> ChannelParams
    crashes: tuple[tuple[int, Fraction], ...] = ()
    seed: int = 0
    horizon: Fraction = Fraction(2000)
    stability_window: Optional[Fraction] = None

    def neighbors(self, p: int) -> frozenset[int]:
        return frozenset(b if a == p else a for a, b in self.edges if p in (a, b))

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g

    @property
    def crash_times(self) -> dict[int, Fraction]:
        return dict(self.crashes)

    def gap_bound(self, src: int, dst: int) -> Fraction:
        """Worst-case global time between deliveries on channel src->dst."""
        c = self.channels[(src, dst)]
        node = self.nodes[src]
        return (c.r + 1) * Fraction(node.T) / node.rate + c.d

    def effective_window(self) -> Fraction:
        if self.stability_window is not None:
            return self.stability_window
        if not self.channels:
            return Fraction(0)
        return 5 * max(self.gap_bound(s, t) for s, t in self.channels)

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed)

    def validate(self) -> "Scenario":
        if self.n < 1:
            raise ScenarioError("n must be at least 1")
        if len(self.nodes) != self.n:
            raise ScenarioError("one NodeParams per node required")
        for a, b in self.edges:
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ScenarioError(f"edge ({a}, {b}) names a node id >= n")
            if a == b:
                raise ScenarioError(f"self-loop at node {a}")
        if len(set(self.edges)) != len(self.edges):
            raise ScenarioError("duplicate edge")
        if not nx.is_connected(self.graph()):
            raise ScenarioError("initial graph disconnected")
        for i, node in enumerate(self.nodes):
            if not isinstance(node.T, int) or node.T < 1:
                raise ScenarioError(f"node {i}: T must be a positive integer")
            if node.rate <= 0:
                raise ScenarioError(f"node {i}: clock rate must be positive")
            if node.phase < 0:
                raise ScenarioError(f"node {i}: phase must be non-negative")
        expected = {(a, b) for a, b in self.edges} | {(b, a) for a, b in self.edges}
        if set(self.channels) != expected:
            raise ScenarioError("channels must be exactly both directions of every edge")
        for key, c in self.channels.items():
            try:
                c.validate()
            except ValueError as e:
                raise ScenarioError(f"channel {key[0]}->{key[1]}: {e}") from None
        seen = set()
        for node, t in self.crashes:
            if not 0 <= node < self.n:
                raise ScenarioError(f"crash names unknown node {node}")
            if node in seen:
                raise ScenarioError(f"duplicate crash entry for node {node}")
            seen.add(node)
            if t < 0:
                raise ScenarioError("crash time must be non-negative")
            if t >= self.horizon:
                raise ScenarioError(f"crash time of node {node} must be < horizon")
        if self.horizon <= 0:
            raise ScenarioError("horizon must be positive")
        if self.stability_window is not None and self.stability_window < 0:
            raise ScenarioError("stability_window must be non-negative")
        return self


def to_fraction(v, what="value") -> Fraction:
    if isinstance(v, bool):
        raise ScenarioError(f"{what}: expected a number, got {v!r}")
    try:
        return Fraction(v) if not isinstance(v, float) else Fraction(str(v))
    except (ValueError, TypeError, ZeroDivisionError):
        raise ScenarioError(f"{what}: cannot parse {v!r} as a rational") from None


def fraction_text(x: Fraction) -> str:
    return str(x)


_CHANNEL_FIELDS = {f.name for f in fields(ChannelParams)}
_NODE_FIELDS = {f.name for f in fields(NodeParams)}


def _node_params(base: NodeParams, entry: dict, where: str) -> NodeParams:
    unknown = set(entry) - _NODE_FIELDS
    if unknown:
        raise ScenarioError(f"{where}: unknown field(s) {sorted(unknown)}")
    kw = {}
    if "T" in entry:
        if not isinstance(entry["T"], int) or isinstance(entry["T"], bool):
            raise ScenarioError(f"{where}.T: expected an integer")
        kw["T"] = entry["T"]
    for name in ("rate", "phase"):
        if name in entry:
            kw[name] = to_fraction(entry[name], f"{where}.{name}")
    return replace(base, **kw)


def _channel_params(base: ChannelParams, entry: dict, where: str) -> ChannelParams:
    unknown = set(entry) - _CHANNEL_FIELDS
    if unknown:
        raise ScenarioError(f"{where}: unknown field(s) {sorted(unknown)}")
    kw = {}
    for name, v in entry.items():
        if name == "r":
            if not isinstance(v, int) or isinstance(v, bool):
                raise ScenarioError(f"{where}.r: expected an integer")
            kw[name] = v
        elif name == "enforce_bound":
            if not isinstance(v, bool):
                raise ScenarioError(f"{where}.enforce_bound: expected true/false")
            kw[name] = v
        else:
            kw[name] = to_fraction(v, f"{where}.{name}")
    return replace(base, **kw)


def _parse_channel_key(key: str, n: int):
    try:
        if "->" in key:
            a, b = (int(x) for x in key.split("->"))
            return [(a, b)]
        a, b = (int(x) for x in key.split("-"))
        return [(a, b), (b, a)]
    except ValueError:
        raise ScenarioError(f"channels: bad key {key!r} (use 'a->b' or 'a-b')") from None


_TOP_FIELDS = {"n", "edges", "seed", "horizon", "stability_window", "node_defaults",
               "nodes", "channel_defaults", "channels", "crashes"}


def scenario_from_dict(raw: dict) -> Scenario:
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")
    unknown = set(raw) - _TOP_FIELDS
    if unknown:
        raise ScenarioError(f"unknown top-level field(s) {sorted(unknown)}")
    if "n" not in raw or not isinstance(raw["n"], int):
        raise ScenarioError("n: required integer")
    n = raw["n"]
    try:
        edges = tuple(sorted({tuple(sorted((int(a), int(b)))) for a, b in raw.get("edges", [])}))
    except (TypeError, ValueError):
        raise ScenarioError("edges: expected a list of [a, b] pairs") from None

    node_base = _node_params(NodeParams(), raw.get("node_defaults", {}), "node_defaults")
    nodes = [node_base] * n
    for key, entry in raw.get("nodes", {}).items():
        i = int(key)
        if not 0 <= i < n:
            raise ScenarioError(f"nodes: unknown node {key}")
        nodes[i] = _node_params(node_base, entry, f"nodes.{key}")

    chan_base = _channel_params(ChannelParams(), raw.get("channel_defaults", {}), "channel_defaults")
    channels = {}
    for a, b in edges:
        channels[(a, b)] = chan_base
        channels[(b, a)] = chan_base
    overrides = raw.get("channels", {})
    # both-direction keys first so that per-direction keys win
    for key in sorted(overrides, key=lambda k: "->" in k):
        for pair in _parse_channel_key(key, n):
            if pair not in channels:
                raise ScenarioError(f"channels: {key} is not an edge")
            channels[pair] = _channel_params(channels[pair], overrides[key], f"channels.{key}")

    crashes = []
    for item in raw.get("crashes", []):
        try:
            node, t = item
        except (TypeError, ValueError):
            raise ScenarioError("crashes: expected [node, time] pairs") from None
        crashes.append((int(node), to_fraction(t, f"crash time of node {node}")))
    window = raw.get("stability_window")
    s = Scenario(
        n=n,
        edges=edges,
        nodes=tuple(nodes),
        channels=channels,
        crashes=tuple(sorted(crashes, key=lambda c: (c[1], c[0]))),
        seed=int(raw.get("seed", 0)),
        horizon=to_fraction(raw.get("horizon", 2000), "horizon"),
        stability_window=None if window is None else to_fraction(window, "stability_window"),
    )
    return s.validate()


def scenario_to_dict(s: Scenario) -> dict:
    """Fully explicit form: every node and channel is written out."""
    def chan(c: ChannelParams):
        return {
            "d": fraction_text(c.d),
            "r": c.r,
            "drop_probability": fraction_text(c.drop_probability),
            "p_priv": fraction_text(c.p_priv),
            "unprivileged_delay_max": fraction_text(c.unprivileged_delay_max),
            "enforce_bound": c.enforce_bound,
        }

    return {
        "n": s.n,
        "edges": [list(e) for e in s.edges],
        "seed": s.seed,
        "horizon": fraction_text(s.horizon),
        "stability_window": None if s.stability_window is None else fraction_text(s.stability_window),
        "nodes": {
            str(i): {"T": p.T, "rate": fraction_text(p.rate), "phase": fraction_text(p.phase)}
            for i, p in enumerate(s.nodes)
        },
        "channels": {f"{a}->{b}": chan(c) for (a, b), c in sorted(s.channels.items())},
        "crashes": [[node, fraction_text(t)] for node, t in s.crashes],
    }


def loads_scenario(text: str) -> Scenario:
    try:
        # keep decimal literals exact
        raw = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"parse error at line {e.lineno}, column {e.colno}: {e.msg}") from None
    return scenario_from_dict(raw)


def dumps_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


def load_scenario(path) -> Scenario:
    with open(path) as f:
        return loads_scenario(f.read())


def save_scenario(s: Scenario, path) -> None:
    with open(path, "w") as f:
        f.write(dumps_scenario(s))
