"""Seeded random scenarios for property sweeps.

A sweep template is an ordinary scenario file with an extra ``"randomize"``
object.  For each seed the listed aspects are redrawn from a RNG seeded with
that seed; everything else is taken from the file as written.

    "randomize": {
      "n": [3, 7],                   # inclusive range; redraws the graph
      "edge_probability": 0.4,       # extra edges on top of a random spanning tree
      "crash_fraction_max": 1,       # crash up to this share of nodes, always leaving one
      "crash_window": [0, 100],
      "rate_range": ["1/2", "2"],
      "r_choices": [0, 1, 2, 3],
      "drop_choices": [0, 0.5, 0.9]
    }
"""
from __future__ import annotations

import copy
import random
from fractions import Fraction

from .scenario import Scenario, ScenarioError, scenario_from_dict, to_fraction

_RANDOMIZE_FIELDS = {"n", "edge_probability", "crash_fraction_max", "crash_window",
                     "rate_range", "r_choices", "drop_choices"}


def random_connected_edges(rng: random.Random, n: int, p_extra) -> list[list[int]]:
    """Random spanning tree plus each remaining pair with probability `p_extra`."""
    order = list(range(n))
    rng.shuffle(order)
    edges = set()
    for i in range(1, n):
        a, b = order[i], order[rng.randrange(i)]
        edges.add((min(a, b), max(a, b)))
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) not in edges and rng.random() < p_extra:
                edges.add((a, b))
    return [list(e) for e in sorted(edges)]


def _rational_in(rng: random.Random, lo: Fraction, hi: Fraction, steps=16) -> Fraction:
    return lo + (hi - lo) * rng.randint(0, steps) / steps


def expand_template(raw: dict, seed: int) -> Scenario:
    """Build the scenario for `seed` from a (possibly randomized) template."""
    raw = copy.deepcopy(raw)
    rand = raw.pop("randomize", None)
    raw["seed"] = seed
    if not rand:
        return scenario_from_dict(raw)
    unknown = set(rand) - _RANDOMIZE_FIELDS
    if unknown:
        raise ScenarioError(f"randomize: unknown field(s) {sorted(unknown)}")
    rng = random.Random(seed)

    if "n" in rand:
        lo, hi = rand["n"]
        raw["n"] = rng.randint(lo, hi)
        raw["edges"] = random_connected_edges(
            rng, raw["n"], to_fraction(rand.get("edge_probability", Fraction(2, 5))))
        raw.pop("nodes", None)
        raw.pop("channels", None)
        raw.pop("crashes", None)
    n = raw["n"]

    if "rate_range" in rand:
        lo, hi = (to_fraction(x, "randomize.rate_range") for x in rand["rate_range"])
        nodes = raw.setdefault("nodes", {})
        for p in range(n):
            nodes.setdefault(str(p), {})["rate"] = str(_rational_in(rng, lo, hi))

    if "r_choices" in rand or "drop_choices" in rand:
        channels = raw.setdefault("channels", {})
        for a, b in raw["edges"]:
            for key in (f"{a}->{b}", f"{b}->{a}"):
                c = channels.setdefault(key, {})
                if "r_choices" in rand:
                    c["r"] = rng.choice(rand["r_choices"])
                if "drop_choices" in rand:
                    c["drop_probability"] = str(to_fraction(rng.choice(rand["drop_choices"])))

    if "crash_fraction_max" in rand:
        max_crashes = min(n - 1, int(to_fraction(rand["crash_fraction_max"]) * n))
        k = rng.randint(0, max_crashes)
        lo, hi = (to_fraction(x, "randomize.crash_window") for x in rand.get("crash_window", [0, 100]))
        victims = rng.sample(range(n), k)
        raw["crashes"] = [[v, str(_rational_in(rng, lo, hi, steps=100))] for v in sorted(victims)]

    return scenario_from_dict(raw)
