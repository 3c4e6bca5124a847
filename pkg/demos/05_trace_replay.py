"""Write a trace to disk, then rebuild every node's final state from it."""
import tempfile
from pathlib import Path

from diamondp import sim
from diamondp.replay import read_trace_and_rebuild
from diamondp.scenario import scenario_from_dict
from diamondp.trace import dump_trace_lines

scenario = scenario_from_dict({
    "n": 4,
    "edges": [[0, 1], [1, 2], [2, 3], [3, 0]],
    "nodes": {"2": {"rate": "3/2", "phase": "0.25"}},
    "crashes": [[1, 30]],
    "horizon": 1500,
})
trace = sim.run(scenario)
path = Path(tempfile.mkdtemp()) / "trace.jsonl"
path.write_text("\n".join(dump_trace_lines(trace)) + "\n")
print(f"{len(trace.records)} records written to {path}")
print("first lines:")
for line in path.read_text().splitlines()[:4]:
    print("  ", line)

rebuilt = read_trace_and_rebuild(path, scenario)
print("replay matches recorded final states for", sorted(rebuilt.final_states))
