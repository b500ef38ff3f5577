"""
A single round trip
===================

One master on a CPU sends a megabyte to a slave on a GPU, the slave computes,
and the result comes back.  Every number here can be checked by hand.
"""
import dataclasses
from pathlib import Path

from hybridsim import load_instance, simulate

here = Path(__file__).parent / "configs"
inst = load_instance({"system": "tiny_system.json", "application": "tiny_app.json",
                      "mapping": {"cpu0": {"master": 1}, "gpu0": {"slave": 1}}}, here)

# 1 MB over a 1 MB/s link takes 1 s, 2e10 units at 1e10/s take 2 s, 1 s back.
result = simulate(inst)
print(f"makespan  {result.makespan:.3f} s")

# Both devices idle at 20 W + 70 W; the GPU reaches 140 W while computing.
print(f"avg power {result.avg_power:.3f} W   max {result.max_power:.3f} W")
for rec in result.trace:
    print(f"  t={rec.time:4.1f}  {rec.device}  {rec.delta:+d}  {rec.label}")

# With idle scope "all" nothing changes here, both devices are allocated anyway.
everywhere = dataclasses.replace(inst, idle_scope="all")
print(f"all-device scope avg power {simulate(everywhere).avg_power:.3f} W")
