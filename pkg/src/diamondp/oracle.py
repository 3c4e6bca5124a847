"""Ground truth for a scenario and checks of a trace against it.

The ground truth is computed from the scenario alone (initial graph minus
crashed nodes), never from detector state, so it is an independent check of
what the detector should converge to.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional

import networkx as nx

from .channel import conformance_check
from .scenario import Scenario
from .trace import CRASH, DELIVER, SUSPECT, TIMEOUT, Trace

CONVERGED = "CONVERGED"
VIOLATION = "VIOLATION"
INCONCLUSIVE = "INCONCLUSIVE-HORIZON"

# simple-path enumeration is exponential; lemma checks refuse larger graphs
LEMMA_MAX_N = 12


class Kind(str, Enum):
    COMPLETENESS = "completeness"
    ACCURACY = "accuracy"


@dataclass(frozen=True)
class FinalGraph:
    graph: nx.Graph
    initial: nx.Graph
    components: tuple[frozenset[int], ...]
    crashed: frozenset[int]
    t_star: Fraction

    def component_of(self, p: int) -> frozenset[int]:
        for c in self.components:
            if p in c:
                return c
        raise ValueError(f"node {p} is crashed")

    @property
    def correct(self) -> frozenset[int]:
        return frozenset(self.graph.nodes)


def network_graph(scenario: Scenario, t) -> nx.Graph:
    """Initial graph minus nodes crashed at or before global time `t`."""
    g = scenario.graph()
    g.remove_nodes_from([p for p, ct in scenario.crashes if ct <= t])
    return g


def final_graph(scenario: Scenario) -> FinalGraph:
    t_star = max((t for _, t in scenario.crashes), default=Fraction(0))
    g = network_graph(scenario, t_star)
    comps = sorted((frozenset(c) for c in nx.connected_components(g)), key=min)
    return FinalGraph(
        graph=g,
        initial=scenario.graph(),
        components=tuple(comps),
        crashed=frozenset(p for p, _ in scenario.crashes),
        t_star=t_star,
    )


def expected_suspects(final: FinalGraph, p: int) -> frozenset[int]:
    if p in final.crashed:
        raise ValueError(f"node {p} is crashed; only correct nodes have expectations")
    return frozenset(final.initial.nodes) - final.component_of(p)


def crossing_witness_holds(final: FinalGraph) -> bool:
    """Every initial path from outside a component C into C passes through a
    crashed initial neighbor of C, i.e. no live node outside C touches C."""
    for comp in final.components:
        for u in comp:
            for v in final.initial.neighbors(u):
                if v not in comp and v not in final.crashed:
                    return False
    return True


@dataclass
class Verdict:
    status: str
    converged: bool
    t_f_observed: Optional[Fraction]
    violations: list = field(default_factory=list)  # (node, target, kind, time)
    final_suspects: dict = field(default_factory=dict)
    detection_times: dict = field(default_factory=dict)  # (p, q) -> time suspicion became permanent
    window: Fraction = Fraction(0)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "converged": self.converged,
            "t_f_observed": None if self.t_f_observed is None else str(self.t_f_observed),
            "window": str(self.window),
            "violations": [
                {"node": p, "target": q, "kind": k.value, "time": str(t)}
                for p, q, k, t in self.violations
            ],
            "final_suspects": {str(p): sorted(s) for p, s in sorted(self.final_suspects.items())},
            "detection_times": [
                {"node": p, "target": q, "time": str(t)}
                for (p, q), t in sorted(self.detection_times.items())
            ],
        }


def check_convergence(trace: Trace, final: FinalGraph, window) -> Verdict:
    """Replay suspicion changes and compare each correct node's suspect set
    with the ground truth over the tail of the run."""
    horizon = trace.horizon
    nodes = set(final.initial.nodes)
    correct = sorted(final.correct)
    expected = {p: expected_suspects(final, p) for p in correct}
    current = {p: set() for p in correct}
    good_since = {p: Fraction(0) if not expected[p] else None for p in correct}
    last_change = {p: None for p in correct}
    became_true = {}

    for rec in trace.records:
        if rec.node not in nodes or (rec.target is not None and rec.target not in nodes):
            raise ValueError(f"trace names node outside the scenario: {rec}")
        if rec.kind != SUSPECT or rec.node not in current:
            continue
        p, q = rec.node, rec.target
        if rec.value:
            current[p].add(q)
            became_true[(p, q)] = rec.time
        else:
            current[p].discard(q)
            became_true.pop((p, q), None)
        last_change[p] = rec.time
        ok = current[p] == expected[p]
        if ok and good_since[p] is None:
            good_since[p] = rec.time
        elif not ok:
            good_since[p] = None

    violations = []
    for p in correct:
        for q in sorted(expected[p] - current[p]):
            violations.append((p, q, Kind.COMPLETENESS, horizon))
        for q in sorted(current[p] - expected[p]):
            violations.append((p, q, Kind.ACCURACY, horizon))

    stable = all(t is None or t <= horizon - window for t in last_change.values())
    window_fits = window < horizon - final.t_star
    if violations:
        status = VIOLATION if (stable and window_fits) else INCONCLUSIVE
    elif not (stable and window_fits):
        status = INCONCLUSIVE
    else:
        status = CONVERGED
    t_f = max(good_since.values(), default=Fraction(0)) if status == CONVERGED else None
    detections = {
        (p, q): t for (p, q), t in became_true.items()
        if p in expected and q in expected[p]
    }
    return Verdict(
        status=status,
        converged=status == CONVERGED,
        t_f_observed=t_f,
        violations=violations,
        final_suspects={p: frozenset(current[p]) for p in correct},
        detection_times=detections,
        window=window,
    )


def simple_paths(graph: nx.Graph, src: int, dst: int) -> set[tuple[int, ...]]:
    """All simple paths src -> dst as node tuples (src first)."""
    if src not in graph or dst not in graph:
        return set()
    if src == dst:
        return {(src,)}
    return {tuple(pi) for pi in nx.all_simple_paths(graph, src, dst)}


@dataclass
class LemmaReport:
    timeouts_stable: bool = True
    paths_superset: bool = True
    paths_subset: bool = True
    perfect_information: bool = True
    gap_bound: bool = True
    problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (self.timeouts_stable and self.paths_superset and self.paths_subset
                and self.perfect_information and self.gap_bound)

    def fail(self, attr: str, msg: str):
        setattr(self, attr, False)
        self.problems.append(msg)


def check_lemma_invariants(trace: Trace, scenario: Scenario, final: FinalGraph,
                           window=None) -> LemmaReport:
    """Per-run checks of timeout stabilization, path-set bounds, perfect
    information at the horizon and the delivery-gap bound."""
    if scenario.n > LEMMA_MAX_N:
        raise ValueError(f"lemma checks enumerate simple paths; n={scenario.n} > {LEMMA_MAX_N}")
    report = LemmaReport()
    window = scenario.effective_window() if window is None else window
    horizon = trace.horizon
    states = trace.final_states
    correct = final.correct

    for rec in trace.of_kind(TIMEOUT):
        if rec.node in correct and rec.time > horizon - window:
            report.fail("timeouts_stable",
                        f"timeout[{rec.target}] at node {rec.node} changed at {rec.time}")

    for p in sorted(correct):
        st = states[p]
        comp = final.component_of(p)
        # q outside the component has no simple path in the final graph
        for q in range(scenario.n):
            have = st.paths[q]
            upper = simple_paths(final.initial, q, p)
            if not have <= upper:
                report.fail("paths_subset", f"paths_{p}[{q}] holds non-simple or non-graph paths")
            lower = simple_paths(final.graph, q, p)
            if not lower <= have:
                report.fail("paths_superset",
                            f"paths_{p}[{q}] misses {sorted(lower - have)[:3]}")

        # perfect information
        border = {v for u in comp for v in final.initial.neighbors(u)} - comp
        for q in range(scenario.n):
            if q == p:
                continue
            if q in comp and st.suspect[q]:
                report.fail("perfect_information", f"{p} suspects {q} in its component")
            if q not in comp and not st.suspect[q]:
                report.fail("perfect_information", f"{p} does not suspect unreachable {q}")
            if q in final.crashed and q in border and not st.suspect_local[q]:
                report.fail("perfect_information",
                            f"{p} lacks suspect_local for crashed border node {q}")

    for (src, dst), gaps in delivery_gaps(trace, correct).items():
        bound = scenario.gap_bound(src, dst)
        worst = max(gaps, default=Fraction(0))
        if worst > bound:
            report.fail("gap_bound", f"channel {src}->{dst}: gap {worst} > {bound}")
    return report


def delivery_gaps(trace: Trace, correct, since=Fraction(0)) -> dict:
    """Gaps between consecutive deliveries on every correct->correct channel,
    counted from the first delivery at or after `since`."""
    times = defaultdict(list)
    for rec in trace.of_kind(DELIVER):
        if rec.node in correct and rec.target in correct and rec.time >= since:
            times[(rec.target, rec.node)].append(rec.time)
    return {key: [b - a for a, b in zip(ts, ts[1:])] for key, ts in times.items()}


def crash_times_in_trace(trace: Trace) -> dict[int, Fraction]:
    return {rec.node: rec.time for rec in trace.of_kind(CRASH)}


@dataclass
class RunReport:
    """Everything the checkers say about one simulated run."""
    verdict: Verdict
    lemmas: Optional[LemmaReport]
    conformance: dict  # (src, dst) -> ConformanceResult

    @property
    def conformance_ok(self) -> bool:
        return all(self.conformance.values())

    @property
    def status(self) -> str:
        if not self.conformance_ok:
            return VIOLATION
        return self.verdict.status

    def to_json(self) -> dict:
        out = self.verdict.to_json()
        out["status"] = self.status
        out["conformance"] = {
            f"{a}->{b}": {"ok": res.ok, "first_bad_window": res.first_bad_window,
                          "reason": res.reason}
            for (a, b), res in sorted(self.conformance.items())
        }
        if self.lemmas is not None:
            out["lemmas"] = {
                "ok": self.lemmas.ok,
                "timeouts_stable": self.lemmas.timeouts_stable,
                "paths_superset": self.lemmas.paths_superset,
                "paths_subset": self.lemmas.paths_subset,
                "perfect_information": self.lemmas.perfect_information,
                "gap_bound": self.lemmas.gap_bound,
                "problems": self.lemmas.problems[:50],
            }
        return out


def evaluate(scenario: Scenario, trace: Trace) -> RunReport:
    final = final_graph(scenario)
    window = scenario.effective_window()
    verdict = check_convergence(trace, final, window)
    lemmas = None
    if verdict.converged and scenario.n <= LEMMA_MAX_N:
        lemmas = check_lemma_invariants(trace, scenario, final, window)
    conformance = {
        key: conformance_check(trace.channel_logs.get(key, ()), params)
        for key, params in sorted(scenario.channels.items())
    }
    return RunReport(verdict, lemmas, conformance)
