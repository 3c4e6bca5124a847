"""Unidirectional ADD (average delayed/dropped) channel model.

A channel classifies every submitted message as privileged or unprivileged.
Privileged messages always arrive within ``d``; at most ``r`` unprivileged
messages may be sent between two privileged ones.  Unprivileged messages are
dropped or delayed up to ``unprivileged_delay_max``.  Delays are exact
rationals so that event ordering never depends on float rounding.
"""
from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Optional

# delays are drawn on a grid of this many steps over (0, bound]
DELAY_RESOLUTION = 1000


@dataclass(frozen=True)
class ChannelParams:
    d: Fraction = Fraction(1)
    r: int = 2
    drop_probability: Fraction = Fraction(1, 2)
    p_priv: Fraction = Fraction(1, 5)
    unprivileged_delay_max: Fraction = Fraction(5)
    # False only for negative-control fixtures: the adversary may then exceed r
    enforce_bound: bool = True

    def validate(self):
        if self.d <= 0:
            raise ValueError("channel d must be positive")
        if self.r < 0:
            raise ValueError("channel r must be non-negative")
        if self.unprivileged_delay_max < self.d:
            raise ValueError("unprivileged_delay_max must be >= d")
        for name in ("drop_probability", "p_priv"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")

    @cached_property
    def thresholds(self) -> tuple[int, int]:
        return _threshold(self.p_priv), _threshold(self.drop_probability)


def _threshold(p: Fraction) -> int:
    # U < p  <=>  getrandbits(53) < ceil(p * 2**53) for U on the 53-bit grid
    return math.ceil(Fraction(p) * (1 << 53))


@dataclass(frozen=True)
class DeliveryDecision:
    seq: int
    privileged: bool
    delay: Optional[Fraction]  # None means dropped

    @property
    def dropped(self) -> bool:
        return self.delay is None


def channel_seed(seed: int, src: int, dst: int) -> int:
    """Independent per-channel seed derived from the scenario seed."""
    h = hashlib.blake2b(f"{seed}:{src}:{dst}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


@dataclass
class ChannelState:
    params: ChannelParams
    rng: random.Random
    unprivileged_run: int = 0
    submitted: int = 0
    log: list[DeliveryDecision] = field(default_factory=list)

    @classmethod
    def create(cls, params: ChannelParams, seed: int, src: int, dst: int) -> "ChannelState":
        return cls(params=params, rng=random.Random(channel_seed(seed, src, dst)))

    def _draw_delay(self, bound: Fraction) -> Fraction:
        k = self.rng.randint(1, DELAY_RESOLUTION)
        return Fraction(bound.numerator * k, bound.denominator * DELAY_RESOLUTION)

    def submit(self, send_time=None) -> DeliveryDecision:
        """Classify one message and decide its fate.

        The privilege draw is made even when the message is forced, so the
        random stream position does not depend on the run counter.
        """
        p = self.params
        priv_thr, drop_thr = p.thresholds
        forced = p.enforce_bound and self.unprivileged_run >= p.r
        chosen = self.rng.getrandbits(53) < priv_thr
        if forced or chosen:
            self.unprivileged_run = 0
            decision = DeliveryDecision(self.submitted, True, self._draw_delay(p.d))
        else:
            self.unprivileged_run += 1
            if self.rng.getrandbits(53) < drop_thr:
                decision = DeliveryDecision(self.submitted, False, None)
            else:
                decision = DeliveryDecision(
                    self.submitted, False, self._draw_delay(p.unprivileged_delay_max))
        self.submitted += 1
        self.log.append(decision)
        return decision


@dataclass(frozen=True)
class ConformanceResult:
    ok: bool
    first_bad_window: Optional[int] = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def conformance_check(log, params: ChannelParams) -> ConformanceResult:
    """Check a complete per-channel decision log against the (r, d) guarantee.

    Every window of r+1 consecutive submissions must hold a privileged
    message delivered within d, and submissions must be numbered 0..m-1
    with no repeats.
    """
    log = list(log)
    for i, dec in enumerate(log):
        if dec.seq != i:
            return ConformanceResult(False, i, f"submission {i} carries seq {dec.seq}")
        if dec.privileged and (dec.delay is None or not 0 < dec.delay <= params.d):
            return ConformanceResult(False, i, f"privileged submission {i} not delivered within d")
    w = params.r + 1
    good = [dec.privileged and dec.delay is not None and dec.delay <= params.d for dec in log]
    # a window exists only once r+1 submissions have been made
    for start in range(0, len(log) - w + 1):
        if not any(good[start:start + w]):
            return ConformanceResult(False, start, f"no privileged delivery in window {start}..{start + w - 1}")
    return ConformanceResult(True)
