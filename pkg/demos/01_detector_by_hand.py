"""Drive two detector nodes by hand, without the simulator.

Node 0 hears from node 1, goes quiet, times out, then hears again and
doubles its timeout.  Node 0 also learns about node 2 through node 1.
"""
from diamondp import core

n = 3
a = core.new_node_state(0, {1}, n, T=5)
b = core.new_node_state(1, {0, 2}, n, T=5)

# b has heard from 2 directly; its heartbeat carries that path
(_, msg), _ = core.on_heartbeat_tick(b)
print("payload paths to 2:", sorted(msg.path_sets[2]))

a.clock = 1
core.on_receive(a, msg)
print("a paths to 2 after receiving:", sorted(a.paths[2]))
print("a suspects:", core.query_suspects(a))

a.clock = 6
print("timer due at 6:", core.timer_due(a, 1))
changes = core.on_timer_expiry(a, 1)
print("after expiry:", changes)

a.clock = 9
changes = core.on_receive(a, msg)
print("heard again:", changes, "new timeout:", a.timeout[1])
