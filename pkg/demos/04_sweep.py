"""Run a randomized template over a handful of seeds and summarize."""
import json

from diamondp.cli import sweep

template = {
    "n": 3,
    "horizon": 10000,
    "randomize": {
        "n": [3, 7],
        "edge_probability": 0.4,
        "crash_fraction_max": 1,
        "crash_window": [0, 100],
        "rate_range": ["1/2", "2"],
        "r_choices": [0, 1, 2, 3],
        "drop_choices": [0, 0.5, 0.9],
    },
}
summary = sweep(template, seeds=10)
print(json.dumps({k: v for k, v in summary.items() if k != "runs"}, indent=2))
for row in summary["runs"]:
    print(row["seed"], row["n"], row["status"], row["t_f_observed"])
