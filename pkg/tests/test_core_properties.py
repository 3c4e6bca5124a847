"""Randomized call sequences against the detector state machine.

A tiny driver (no simulator) advances clocks, sends heartbeats, delivers,
drops or reorders in-flight messages, fires due timers and crashes nodes,
checking the state invariants after every entry point.
"""
import copy
import random

import networkx as nx
from hypothesis import given, settings, strategies as st

from diamondp import core
from diamondp.generate import random_connected_edges
from diamondp.oracle import simple_paths


def build(seed, n):
    rng = random.Random(seed)
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from(random_connected_edges(rng, n, 0.4))
    states = {p: core.new_node_state(p, set(g.neighbors(p)), n, rng.randint(1, 4)) for p in g}
    return rng, g, states


def check(st, before, g, path_counts):
    p = st.self_id
    assert not st.suspect[p] and not st.suspect_local[p]
    for q in st.neighbors:
        assert st.suspect[q] == st.suspect_local[q]
        assert st.timeout[q] >= before.timeout[q]
    for r in range(st.n):
        assert before.paths[r] <= st.paths[r]
        assert len(st.paths[r]) <= path_counts[(r, p)]
        for pi in st.paths[r]:
            assert pi[0] == r and pi[-1] == p
            assert len(set(pi)) == len(pi)
            assert all(g.has_edge(a, b) for a, b in zip(pi, pi[1:]))


def drive(seed, n, steps):
    rng, g, states = build(seed, n)
    path_counts = {(r, p): len(simple_paths(g, r, p)) for r in g for p in g}
    in_flight = []
    calls = []
    for _ in range(steps):
        p = rng.randrange(n)
        st = states[p]
        if st.crashed:
            continue
        before = copy.deepcopy(st)
        action = rng.random()
        if action < 0.25:
            st.clock = (st.clock // st.T + 1) * st.T
            calls.append(("tick", p, st.clock))
            for q, msg in core.on_heartbeat_tick(st):
                in_flight.append((q, msg))
        elif action < 0.75 and in_flight:
            q, msg = in_flight.pop(rng.randrange(len(in_flight)))
            if rng.random() < 0.2 or states[q].crashed:
                continue
            st, before = states[q], copy.deepcopy(states[q])
            st.clock += rng.randint(0, 3)
            old = dict(st.timeout)
            gap = st.clock - st.last_contact[msg.sender]
            was_suspected = st.suspect_local[msg.sender]
            calls.append(("recv", q, st.clock, msg.digest))
            core.on_receive(st, msg)
            # timeouts move only by the doubling rule on a refuted suspicion
            for u, t in st.timeout.items():
                if u == msg.sender and was_suspected:
                    assert t == 2 * gap
                else:
                    assert t == old[u]
            assert st.last_contact[msg.sender] == st.clock
        elif action < 0.995:
            st.clock += rng.randint(1, 6)
            for q in sorted(st.neighbors):
                if core.timer_due(st, q):
                    calls.append(("timer", p, st.clock, q))
                    core.on_timer_expiry(st, q)
        elif sum(not s.crashed for s in states.values()) > 1:
            st.crashed = True
            calls.append(("crash", p))
            continue
        check(st, before, g, path_counts)
    return states, calls


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10 ** 9), n=st.integers(2, 6))
def test_invariants_under_random_calls(seed, n):
    drive(seed, n, 400)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10 ** 9), n=st.integers(2, 5))
def test_same_calls_same_state(seed, n):
    a, calls_a = drive(seed, n, 300)
    b, calls_b = drive(seed, n, 300)
    assert calls_a == calls_b
    assert [core.state_to_dict(a[p]) for p in a] == [core.state_to_dict(b[p]) for p in b]


def test_query_is_derived_view():
    states, _ = drive(7, 5, 500)
    for st in states.values():
        assert core.query_suspects(st) == {q for q in range(st.n) if st.suspect[q]}
