import pytest

from diamondp import core
from diamondp.core import (INF, ContractViolation, HeartbeatMessage, new_node_state,
                           on_heartbeat_tick, on_receive, on_timer_expiry, query_suspects,
                           recompute_derived, refresh_caches, shortest_valid_length)


def message(sender, n, suspects=(), paths=None):
    flags = tuple(u in suspects for u in range(n))
    sets = [frozenset() for _ in range(n)]
    for r, ps in (paths or {}).items():
        sets[r] = frozenset(ps)
    return HeartbeatMessage(sender, flags, tuple(sets))


# -- new_node_state ---------------------------------------------------------

def test_new_state_initial_paths():
    st = new_node_state(0, {1}, 3, 5)
    assert st.paths[0] == {(0,)}
    assert st.paths[1] == {(1, 0)}
    assert st.paths[2] == set()
    assert st.timeout == {1: 5}
    assert st.last_contact == {1: 0}


def test_new_state_singleton_universe():
    st = new_node_state(0, set(), 1, 1)
    assert st.paths == [{(0,)}]
    assert st.suspect == [False] and st.suspect_local == [False]


def test_new_state_timeouts_and_vectors():
    st = new_node_state(2, {0, 1}, 4, 7)
    assert st.timeout == {0: 7, 1: 7}
    assert st.suspect == [False] * 4
    assert st.suspect_local == [False] * 4


@pytest.mark.parametrize("args", [(0, {0}, 3, 5), (0, {1}, 3, 0), (3, {1}, 3, 5), (0, {5}, 3, 5)])
def test_new_state_rejects(args):
    with pytest.raises(ValueError):
        new_node_state(*args)


# -- heartbeat tick -----------------------------------------------------------

def test_tick_broadcasts_identical_payloads():
    st = new_node_state(0, {1, 2}, 3, 5)
    st.clock = 10
    out = on_heartbeat_tick(st)
    assert sorted(q for q, _ in out) == [1, 2]
    assert out[0][1] == out[1][1]
    assert out[0][1].sender == 0


def test_tick_without_neighbors():
    st = new_node_state(0, set(), 1, 1)
    assert on_heartbeat_tick(st) == []


def test_tick_requires_multiple_of_T():
    st = new_node_state(0, {1}, 2, 5)
    st.clock = 7
    with pytest.raises(ContractViolation):
        on_heartbeat_tick(st)


def test_tick_payload_reflects_expiry():
    st = new_node_state(0, {1, 2}, 3, 5)
    st.clock = 5
    on_timer_expiry(st, 1)
    st.clock = 10
    (_, msg), _ = on_heartbeat_tick(st)
    assert msg.suspect_rcv[1] is True
    assert msg.suspect_rcv[2] is False


def test_tick_payload_is_a_snapshot():
    st = new_node_state(0, {1}, 3, 5)
    (_, before), = on_heartbeat_tick(st)
    on_receive(st, message(1, 3, paths={2: [(2, 1)]}))
    assert (2, 1, 0) in st.paths[2]
    assert before.path_sets[2] == frozenset()
    (_, after), = on_heartbeat_tick(st)
    assert after.path_sets[2] == {(2, 1, 0)}


# -- shortest_valid_length -----------------------------------------------------

def brute_shortest(paths, exclude, suspects, target):
    lengths = [len(pi) - 1 for pi in paths
               if (exclude is None or exclude not in pi)
               and not any(suspects[u] and u != target for u in pi)]
    return min(lengths, default=INF)


R, A, B, C, Q = 0, 1, 2, 3, 4
NO_SUSPECTS = [False] * 5


def test_shortest_two_edges():
    assert shortest_valid_length({(R, A, Q)}, None, NO_SUSPECTS, R) == 2


def test_shortest_empty_is_infinite():
    assert shortest_valid_length(set(), None, NO_SUSPECTS, R) == INF
    assert INF > 10 ** 6


def test_shortest_target_exempt():
    sus = [u == R for u in range(5)]
    assert shortest_valid_length({(R, Q)}, None, sus, R) == 1


def test_shortest_suspect_disqualifies():
    paths = {(R, A, Q), (R, B, C, Q)}
    sus = [u == A for u in range(5)]
    expected = brute_shortest(paths, None, sus, R)
    assert expected == 3
    assert shortest_valid_length(paths, None, sus, R) == expected


def test_shortest_exclude_node():
    paths = {(R, A, Q), (R, B, C, Q)}
    assert shortest_valid_length(paths, A, NO_SUSPECTS, R) == 3
    assert shortest_valid_length(paths, Q, NO_SUSPECTS, R) == INF


# -- on_receive ------------------------------------------------------------------

def test_receive_line_graph_learns_path():
    st = new_node_state(0, {1}, 3, 5)
    on_receive(st, message(1, 3, paths={2: [(2, 1)], 1: [(1,)]}))
    assert st.suspect_local[2] is False
    assert (2, 1, 0) in st.paths[2]
    assert st.suspect[2] is False


def test_receive_doubles_timeout_after_false_suspicion():
    st = new_node_state(0, {1}, 2, 5)
    st.suspect_local[1] = True
    st.last_contact[1] = 6
    st.clock = 20
    recompute_derived(st)
    refresh_caches(st)
    on_receive(st, message(1, 2))
    assert st.timeout[1] == 28
    assert st.suspect_local[1] is False
    assert st.last_contact[1] == 20


def test_receive_cycle_elimination():
    st = new_node_state(0, {1}, 3, 5)
    on_receive(st, message(1, 3, paths={2: [(2, 0, 1)]}))
    assert st.paths[2] == set()


def test_receive_strict_hop_comparison():
    # node 0 knows 2 over the two-hop path 2-3-0
    st = new_node_state(0, {1, 3}, 5, 5)
    on_receive(st, message(3, 5, paths={2: [(2, 3)]}))
    assert st.suspect_local[2] is False
    # node 1 reports 2 suspected, but its best path 2-4-1 is also two hops
    on_receive(st, message(1, 5, suspects={2}, paths={2: [(2, 4, 1)]}))
    assert st.suspect_local[2] is False
    assert (2, 4, 1, 0) in st.paths[2]


def test_receive_adopts_from_strictly_closer_sender():
    st = new_node_state(0, {1}, 4, 5)
    # 0 knows 3 only over the three-hop path 3-2-1-0
    on_receive(st, message(1, 4, paths={3: [(3, 2, 1)]}))
    assert st.suspect_local[3] is False
    # the sender now has a one-edge path to 3 and suspects it
    on_receive(st, message(1, 4, suspects={3}, paths={3: [(3, 1)]}))
    assert st.suspect_local[3] is True
    assert st.suspect[3] is True


def test_receive_suspected_target_path_still_counts():
    # the sender suspects r itself; r is exempt so the one-hop path qualifies
    st = new_node_state(0, {1}, 3, 5)
    on_receive(st, message(1, 3, suspects={2}, paths={2: [(2, 1)]}))
    # hop_from_msg = 1 < hop = INF, so the suspicion is adopted
    assert st.suspect_local[2] is True


def test_receive_from_non_neighbor_rejected():
    st = new_node_state(0, {1}, 3, 5)
    with pytest.raises(ContractViolation):
        on_receive(st, message(2, 3))


def test_receive_reports_changes():
    st = new_node_state(0, {1}, 3, 5)
    # 2 unheard of: suspected vacuously once derived suspects are computed
    st.clock = 5
    changes = on_timer_expiry(st, 1)
    assert set(changes) == {core.SuspicionChange(1, True), core.SuspicionChange(2, True)}
    st.clock = 9
    changes = on_receive(st, message(1, 3, paths={2: [(2, 1)]}))
    assert set(changes) == {core.SuspicionChange(1, False), core.SuspicionChange(2, False)}


# -- recompute_derived --------------------------------------------------------------

def derived_state(sus):
    st = new_node_state(0, {1, 2}, 4, 5)
    st.paths[3] = {(3, 1, 0), (3, 2, 0)}
    for u in sus:
        st.suspect_local[u] = True
    refresh_caches(st)
    recompute_derived(st)
    return st


def test_derived_all_paths_blocked():
    assert derived_state({1, 2}).suspect[3] is True


def test_derived_one_path_survives():
    st = derived_state({1})
    assert st.suspect[3] == st.suspect_local[3] is False


def test_derived_empty_paths_vacuous():
    st = new_node_state(0, {1}, 4, 5)
    recompute_derived(st)
    assert st.suspect[3] is True and st.suspect[2] is True
    assert st.suspect[1] is False and st.suspect[0] is False


# -- on_timer_expiry ---------------------------------------------------------

def test_timer_expiry_sets_suspect():
    st = new_node_state(0, {1}, 2, 5)
    st.clock = 5
    on_timer_expiry(st, 1)
    assert st.suspect_local[1] is True
    assert query_suspects(st) == {1}


def test_timer_then_receive_doubles():
    st = new_node_state(0, {1}, 2, 5)
    st.clock = 5
    on_timer_expiry(st, 1)
    st.clock = 9
    on_receive(st, message(1, 2))
    assert st.timeout[1] == 18


def test_timer_not_due_rejected():
    st = new_node_state(0, {1}, 2, 5)
    st.clock = 4
    with pytest.raises(ContractViolation):
        on_timer_expiry(st, 1)
    st.clock = 5
    on_timer_expiry(st, 1)
    with pytest.raises(ContractViolation):  # fires once per silence period
        on_timer_expiry(st, 1)


def test_timer_on_ring_suspects_node_behind_neighbor():
    # ring 0-1-2-0 seen from 0, but pretend 0 only learned 2 through 1
    st = new_node_state(0, {1}, 3, 5)
    on_receive(st, message(1, 3, paths={2: [(2, 1)]}))
    assert st.suspect[2] is False
    st.clock = 5
    on_timer_expiry(st, 1)
    assert st.suspect[1] is True
    assert st.suspect[2] is True


def test_crashed_node_is_inert():
    st = new_node_state(0, {1}, 2, 5)
    st.crashed = True
    with pytest.raises(ContractViolation):
        on_heartbeat_tick(st)
    with pytest.raises(ContractViolation):
        on_receive(st, message(1, 2))
    st.clock = 100
    assert not core.timer_due(st, 1)


# -- query ---------------------------------------------------------------------

def test_query_fresh_state_empty():
    assert query_suspects(new_node_state(1, {0, 2}, 3, 5)) == set()


def test_message_digest_stable():
    a = message(1, 3, paths={2: [(2, 1)]})
    b = message(1, 3, paths={2: [(2, 1)]})
    assert a.digest == b.digest
    assert a.digest != message(1, 3, suspects={2}, paths={2: [(2, 1)]}).digest
