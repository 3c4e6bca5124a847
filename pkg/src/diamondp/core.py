"""Heartbeat failure detector state machine for partitionable networks.

Each node runs three entry points: a periodic heartbeat tick, a message
receive handler, and a per-neighbor timer expiry.  The functions here never
touch a clock or a transport; the caller sets ``state.clock`` before invoking
an entry point and routes the returned messages.

Paths are tuples of node ids ending at the owner.  Path length is counted in
edges, so ``(p,)`` has length 0.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import NamedTuple

Path = tuple[int, ...]

#: Sentinel for "no qualifying path".  Any simple path over n nodes has at
#: most n - 1 edges, so this compares greater than every real length.
INF = float("inf")


class ContractViolation(RuntimeError):
    """Raised when the driver calls an entry point outside its precondition."""


class SuspicionChange(NamedTuple):
    target: int
    suspected: bool


@dataclass(frozen=True, eq=True)
class HeartbeatMessage:
    sender: int
    suspect_rcv: tuple[bool, ...]
    path_sets: tuple[frozenset[Path], ...]

    @cached_property
    def digest(self) -> str:
        """Short stable hash of the payload, used in traces."""
        body = json.dumps(
            [self.sender, [int(b) for b in self.suspect_rcv],
             [sorted(s) for s in self.path_sets]],
            separators=(",", ":"),
        )
        return hashlib.blake2b(body.encode(), digest_size=8).hexdigest()


@dataclass
class NodeState:
    self_id: int
    n: int
    neighbors: frozenset[int]
    T: int
    clock: int
    last_contact: dict[int, int]
    timeout: dict[int, int]
    suspect_local: list[bool]
    suspect: list[bool]
    paths: list[set[Path]]
    crashed: bool = False
    # also extend paths[q] for neighbors q; never changes a suspicion decision
    grow_neighbor_paths: bool = True

    # memo caches; not part of the protocol state
    _frozen: list = field(default=None, repr=False, compare=False)
    _merged: dict = field(default_factory=dict, repr=False, compare=False)
    _msg: HeartbeatMessage | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._frozen is None:
            self._frozen = [None] * self.n

    def frozen_paths(self, r: int) -> frozenset[Path]:
        fs = self._frozen[r]
        if fs is None:
            fs = self._frozen[r] = frozenset(self.paths[r])
        return fs


def new_node_state(self_id: int, neighbors, n: int, T: int,
                   grow_neighbor_paths: bool = True) -> NodeState:
    neighbors = frozenset(neighbors)
    if not 0 <= self_id < n:
        raise ValueError(f"self_id {self_id} outside [0, {n})")
    if self_id in neighbors:
        raise ValueError("a node cannot be its own neighbor")
    if any(not 0 <= q < n for q in neighbors):
        raise ValueError("neighbor id out of range")
    if T < 1:
        raise ValueError("T must be a positive number of ticks")
    paths: list[set[Path]] = [set() for _ in range(n)]
    paths[self_id].add((self_id,))
    for q in neighbors:
        paths[q].add((q, self_id))
    return NodeState(
        self_id=self_id,
        n=n,
        neighbors=neighbors,
        T=T,
        clock=0,
        last_contact={q: 0 for q in sorted(neighbors)},
        timeout={q: T for q in sorted(neighbors)},
        suspect_local=[False] * n,
        suspect=[False] * n,
        paths=paths,
        grow_neighbor_paths=grow_neighbor_paths,
    )


@lru_cache(maxsize=1 << 16)
def path_mask(path: Path) -> int:
    m = 0
    for u in path:
        m |= 1 << u
    return m


def _suspect_mask(flags) -> int:
    m = 0
    for u, f in enumerate(flags):
        if f:
            m |= 1 << u
    return m


@lru_cache(maxsize=1 << 16)
def _shortest(paths: frozenset[Path], forbidden: int) -> float:
    best = INF
    for pi in paths:
        if len(pi) - 1 < best and not path_mask(pi) & forbidden:
            best = len(pi) - 1
    return best


def shortest_valid_length(path_set, exclude_node, suspects, target) -> float:
    """Length of the shortest path that avoids `exclude_node` and every
    suspected node other than `target`; INF when none qualifies."""
    forbidden = _suspect_mask(suspects) & ~(1 << target)
    if exclude_node is not None:
        forbidden |= 1 << exclude_node
    return _shortest(frozenset(path_set), forbidden)


def _check_live(state: NodeState):
    if state.crashed:
        raise ContractViolation(f"node {state.self_id} is crashed")


def _touch(state: NodeState, r: int | None = None):
    state._msg = None
    if r is not None:
        state._frozen[r] = None


def on_heartbeat_tick(state: NodeState) -> list[tuple[int, HeartbeatMessage]]:
    _check_live(state)
    if state.clock % state.T:
        raise ContractViolation(f"clock {state.clock} is not a multiple of T={state.T}")
    msg = state._msg
    if msg is None:
        msg = state._msg = HeartbeatMessage(
            sender=state.self_id,
            suspect_rcv=tuple(state.suspect_local),
            path_sets=tuple(state.frozen_paths(r) for r in range(state.n)),
        )
    return [(q, msg) for q in sorted(state.neighbors)]


def on_receive(state: NodeState, msg: HeartbeatMessage) -> list[SuspicionChange]:
    _check_live(state)
    q = msg.sender
    if q not in state.neighbors:
        raise ContractViolation(f"node {state.self_id} got a message from non-neighbor {q}")
    p = state.self_id
    before = list(state.suspect)

    if state.suspect_local[q]:
        state.timeout[q] = 2 * (state.clock - state.last_contact[q])
        state.suspect_local[q] = False
        _touch(state)
    state.last_contact[q] = state.clock

    rcv_mask = _suspect_mask(msg.suspect_rcv)
    pbit = 1 << p
    for r in range(state.n):
        if r == p:
            continue
        incoming = msg.path_sets[r]
        if r not in state.neighbors:
            rbit = ~(1 << r)
            hop_from_msg = _shortest(incoming, (rcv_mask & rbit) | pbit)
            hop = _shortest(state.frozen_paths(r), _suspect_mask(state.suspect_local) & rbit)
            if hop_from_msg < hop and state.suspect_local[r] != msg.suspect_rcv[r]:
                state.suspect_local[r] = msg.suspect_rcv[r]
                _touch(state)
        elif not state.grow_neighbor_paths:
            continue
        # re-merging an unchanged snapshot from the same sender is a no-op
        if state._merged.get((q, r)) is not incoming:
            own = state.paths[r]
            size = len(own)
            for pi in incoming:
                if not path_mask(pi) & pbit:
                    own.add(pi + (p,))
            if len(own) != size:
                _touch(state, r)
            state._merged[(q, r)] = incoming

    recompute_derived(state)
    return _diff(before, state.suspect)


def recompute_derived(state: NodeState) -> None:
    p = state.self_id
    state.suspect = list(state.suspect_local)
    sus = _suspect_mask(state.suspect_local)
    for r in range(state.n):
        if r == p or r in state.neighbors:
            continue
        # no path free of suspects (vacuously true for an empty set)
        if _shortest(state.frozen_paths(r), sus & ~(1 << r)) == INF:
            state.suspect[r] = True


def timer_due(state: NodeState, q: int) -> bool:
    return (
        not state.crashed
        and q in state.neighbors
        and not state.suspect_local[q]
        and state.clock - state.last_contact[q] >= state.timeout[q]
    )


def on_timer_expiry(state: NodeState, q: int) -> list[SuspicionChange]:
    _check_live(state)
    if not timer_due(state, q):
        raise ContractViolation(f"timer for {q} at node {state.self_id} is not due")
    before = list(state.suspect)
    state.suspect_local[q] = True
    _touch(state)
    recompute_derived(state)
    return _diff(before, state.suspect)


def query_suspects(state: NodeState) -> set[int]:
    return {u for u, f in enumerate(state.suspect) if f}


def _diff(before, after) -> list[SuspicionChange]:
    return [SuspicionChange(u, a) for u, (b, a) in enumerate(zip(before, after)) if a != b]


def refresh_caches(state: NodeState) -> None:
    """Drop memoized snapshots after editing `state` fields directly."""
    state._msg = None
    state._frozen = [None] * state.n
    state._merged.clear()


def timer_deadline(state: NodeState, q: int) -> int:
    """Local tick at which the timer for neighbor `q` is due."""
    return state.last_contact[q] + state.timeout[q]


def state_to_dict(state: NodeState) -> dict:
    return {
        "node": state.self_id,
        "clock": state.clock,
        "crashed": state.crashed,
        "timeout": {str(q): v for q, v in sorted(state.timeout.items())},
        "last_contact": {str(q): v for q, v in sorted(state.last_contact.items())},
        "suspect_local": [int(b) for b in state.suspect_local],
        "suspect": [int(b) for b in state.suspect],
        "paths": [sorted(list(pi) for pi in s) for s in state.paths],
    }
