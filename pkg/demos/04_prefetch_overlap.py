"""
Hiding remote reads behind computation
======================================

Each package first pulls its input from a remote store and then computes.  The
prefetching farm requests the next input while the current one is computing,
so after the first fetch only the longer of the two stages is paid.
"""
from hybridsim import scenarios as sc
from hybridsim.engine import SimulationInstance, simulate
from hybridsim.model import Mapping, load_application, load_system


def run(behavior, k, fetch_s, compute_s):
    system_doc = sc.farm_system(slow=1, fast=0, remote_store=True, store_bandwidth_bps=1e9)
    app = sc.farm_application(system_doc, behavior, total_work=1e9 * compute_s * k,
                              package_base=1, remote_fetch_size_b=1e9 * fetch_s,
                              remote_device="store")
    appdoc = load_application(app)
    inst = SimulationInstance(load_system(system_doc), appdoc.app, appdoc.caps,
                              Mapping.from_nested(sc.farm_mapping(system_doc)), {"v_dpm": k})
    return simulate(inst, keep_trace=False).makespan


k = 10
for share in (0.05, 0.15, 0.3, 0.5):
    f, c = share, 1 - share
    serial = run("task_farm", k, f, c)
    overlap = run("task_farm_prefetch", k, f, c)
    bound = f + (k - 1) * max(f, c) + c
    print(f"fetch share {share:.2f}: serial {serial:.3f} s  prefetch {overlap:.3f} s "
          f"(bound {bound:.3f})  saves {1 - overlap / serial:.1%}")
