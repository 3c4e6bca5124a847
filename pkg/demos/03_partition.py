"""A five-node line loses its middle node and splits in two.  Each side ends
up suspecting exactly the crashed node and the far side."""
from diamondp import oracle, sim
from diamondp.scenario import scenario_from_dict

scenario = scenario_from_dict({
    "n": 5,
    "edges": [[0, 1], [1, 2], [2, 3], [3, 4]],
    "crashes": [[2, 40]],
    "horizon": 3000,
    "seed": 3,
})
trace = sim.run(scenario)
final = oracle.final_graph(scenario)
report = oracle.evaluate(scenario, trace)

print("components after the crash:", [sorted(c) for c in final.components])
print("status:", report.status, "stable from t =", report.verdict.t_f_observed)
for p, suspects in sorted(report.verdict.final_suspects.items()):
    print(f"node {p} suspects {sorted(suspects)}, expected {sorted(oracle.expected_suspects(final, p))}")
print("lemma checks ok:", report.lemmas.ok)
