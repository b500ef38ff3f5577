"""
Time versus power for distributed DNN training
==============================================

Eight GPUs on two hosts train on 1061 archives of roughly 150 MB.  Each
iteration the master ships the model to every active slave, waits for all of
them and collects the updates, so more GPUs finish sooner but draw more power.
"""
import json
from pathlib import Path

from hybridsim.pareto import pareto_mask
from hybridsim.sweep import expand_suite, load_suite, run_suite, suite_csv

here = Path(__file__).parent / "configs"

suite = load_suite(json.loads((here / "dnn_suite.json").read_text()), here)
outcomes = run_suite(expand_suite(suite), workers=2)

points = [(r.makespan, r.avg_power) for _, r in outcomes]
for (inst, r), keep in zip(outcomes, pareto_mask(points)):
    k = inst.mapping.total("slave")
    print(f"k={k}  {r.makespan:9.1f} s  {r.avg_power:7.2f} W  {'pareto' if keep else ''}")

# Every configuration is a trade-off: none is both faster and cheaper than another.
print()
print(suite_csv(outcomes, ["instances.slave"]))
