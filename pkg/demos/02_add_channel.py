"""An ADD channel: most messages are at the adversary's mercy, but at least
one in every r+1 arrives within d."""
from fractions import Fraction

from diamondp.channel import ChannelParams, ChannelState, conformance_check

params = ChannelParams(r=3, d=Fraction(1), drop_probability=Fraction(9, 10), p_priv=Fraction(0))
chan = ChannelState.create(params, seed=42, src=0, dst=1)
for _ in range(12):
    dec = chan.submit()
    kind = "privileged" if dec.privileged else "unprivileged"
    fate = "dropped" if dec.dropped else f"delay {dec.delay}"
    print(f"msg {dec.seq:2d}: {kind:12s} {fate}")

print("conformance:", conformance_check(chan.log, params))

broken = ChannelParams(r=3, p_priv=Fraction(0), enforce_bound=False)
bad = ChannelState.create(broken, seed=42, src=0, dst=1)
for _ in range(12):
    bad.submit()
print("with the forcing rule disabled:", conformance_check(bad.log, broken))
