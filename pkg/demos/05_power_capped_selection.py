"""
Choosing GPUs under a power budget
==================================

Given a per-device power figure and a budget, a greedy knapsack picks the
devices with the best performance per watt.  The greedy answer is not always
optimal, but it is never worse than half the optimum.
"""
import dataclasses
import json
from pathlib import Path

from hybridsim import load_instance, simulate
from hybridsim.mapping import KnapsackItem, greedy_power_knapsack, select_and_map_under_limit

items = [KnapsackItem("d1", 10, 5), KnapsackItem("d2", 6, 4), KnapsackItem("d3", 5, 3)]
pick = greedy_power_knapsack(items, 7)
print(f"greedy picks {pick.devices} worth {pick.value}; {{d2, d3}} would be worth 11")

here = Path(__file__).parent / "configs"
base = load_instance({"system": "dnn_system.json", "application": "dnn_app.json",
                      "params": {"epoch_archives": 64}}, here)
power = json.loads((here / "gpu_power.json").read_text())

# the budget covers the listed GPU figures only, host CPUs are not metered
for limit in range(100, 901, 200):
    m = select_and_map_under_limit(base.system, base.app, base.caps, power, limit)
    r = simulate(dataclasses.replace(base, mapping=m), keep_trace=False)
    print(f"limit {limit:4d} W: {m.total('slave')} GPUs, makespan {r.makespan:8.1f} s, "
          f"avg {r.avg_power:6.1f} W")
