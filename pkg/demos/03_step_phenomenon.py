"""
Why more packages can make things slower
========================================

Two slow and twelve fast devices (2:1) share a task farm.  The work is cut into
``2 * v_dpm`` equal packages and each idle device takes the next one.  When the
package count divides evenly across the 26 speed units, every device finishes at
once.  One more package per unit leaves a tail that only a few devices can work
on, and the makespan nearly doubles.
"""
from hybridsim import scenarios as sc
from hybridsim.engine import SimulationInstance, simulate
from hybridsim.model import Mapping, load_application, load_system

system_doc = sc.farm_system(slow=2, fast=12, speed_ratio=2)
system = load_system(system_doc)
appdoc = load_application(sc.farm_application(system_doc, total_work=1e11, package_base=2))
mapping = Mapping.from_nested(sc.farm_mapping(system_doc))

spans = {}
for v in range(1, 45):
    inst = SimulationInstance(system, appdoc.app, appdoc.caps, mapping, {"v_dpm": v})
    spans[v] = simulate(inst, keep_trace=False).makespan

for v, t in spans.items():
    print(f"v_dpm={v:2d}  {t:7.3f} s  " + "#" * int(t * 4) if t < 15 else "")

for j in (1, 2, 3):
    v = 13 * j
    print(f"step at v_dpm={v}: {spans[v]:.3f} -> {spans[v + 1]:.3f} s "
          f"({spans[v + 1] / spans[v]:.2f}x)")
