"""Ready-made systems and applications used by the demos and the test-suite.

Each builder returns plain JSON-shaped dicts so the same scenario can be
written to disk and fed to the command line.
"""

from __future__ import annotations

import numpy as np

MB = 1_000_000


def tiny_system() -> dict:
    return {
        "devices": [
            {"id": "cpu0", "kind": "cpu", "performance": 1e9, "ncores": 4,
             "p_idle_w": 20, "p_peak_w": 60},
            {"id": "gpu0", "kind": "gpu", "performance": 1e10, "ncores": 1,
             "p_idle_w": 70, "p_peak_w": 140},
        ],
        "links": [{"id": "l0", "a": "cpu0", "b": "gpu0", "t_startup_s": 0.0,
                   "bandwidth_bps": 1e6}],
    }


def tiny_application() -> dict:
    """One round trip: 1 MB out, 2e10 units of GPU work, 1 MB back (4 s total)."""
    return {
        "processes": [
            {"name": "master", "behavior": "script", "r_min": 1, "r_max": 1,
             "args": {"ops": [["send", "slave:0", 1, 1e6], ["recv", "slave:0", 2]]}},
            {"name": "slave", "behavior": "script", "r_min": 1, "r_max": 1,
             "args": {"ops": [["recv", "master:0", 1], ["compute", 2e10],
                              ["send", "master:0", 2, 1e6]]}},
        ],
        "capabilities": [
            {"device": "cpu0", "process": "master", "max": 1},
            {"device": "gpu0", "process": "slave", "max": 1},
        ],
    }


# -- DNN training cluster ---------------------------------------------------------------

GPU_IDLE_W = 70.0
GPU_PEAK_W = 140.0
DNN_MODEL_B = 27 * MB
DNN_EPOCH_ARCHIVES = 1061


def dnn_system(hosts: int = 2, gpus_per_host: int = 4) -> dict:
    """Hosts with one CPU and several GPUs each.

    Every GPU hangs off its host CPU through a PCIe-class link; host CPUs are
    chained by Ethernet-class links.
    """
    devices, links = [], []
    for h in range(hosts):
        cpu = f"h{h}cpu"
        devices.append({"id": cpu, "kind": "cpu", "performance": 1e9, "ncores": 8,
                        "p_idle_w": 40.0, "p_peak_w": 120.0})
        for g in range(gpus_per_host):
            gpu = f"h{h}gpu{g}"
            devices.append({"id": gpu, "kind": "gpu", "performance": 1e6, "ncores": 1,
                            "p_idle_w": GPU_IDLE_W, "p_peak_w": GPU_PEAK_W})
            links.append({"id": f"pcie_{gpu}", "a": cpu, "b": gpu,
                          "t_startup_s": 1e-5, "bandwidth_bps": 6e9})
        if h:
            links.append({"id": f"eth_{h - 1}_{h}", "a": f"h{h - 1}cpu", "b": cpu,
                          "t_startup_s": 5e-5, "bandwidth_bps": 1.25e8})
    return {"devices": devices, "links": links}


def dnn_archives(n: int = DNN_EPOCH_ARCHIVES, mean_b: float = 150 * MB, spread: float = 0.08,
                 seed: int = 7, balanced: bool = False) -> list[float]:
    """Training archive sizes; ``balanced`` replaces every size by the mean.

    Imbalanced sizes are drawn uniformly from ``mean * (1 +- spread)``; the
    balanced variant keeps the same total.
    """
    sizes = np.random.default_rng(seed).uniform(1 - spread, 1 + spread, n) * mean_b
    if balanced:
        return [float(sizes.sum() / n)] * n
    return [float(s) for s in sizes]


def dnn_application(archives=None, gpus: int = 8, epoch_archives: int = DNN_EPOCH_ARCHIVES,
                    host_cpus: int = 2, model_size_b: float = DNN_MODEL_B) -> dict:
    args = {
        "archives_b": archives if archives is not None else dnn_archives(),
        "epoch_archives": epoch_archives,
        "model_size_b": model_size_b,
    }
    caps = [{"device": "h0cpu", "process": "master", "max": 1}]
    per_host = max(gpus // host_cpus, 1)
    caps += [{"device": f"h{i // per_host}gpu{i % per_host}", "process": "slave", "max": 1}
             for i in range(gpus)]
    return {
        "processes": [
            {"name": "master", "behavior": "dnn_training", "args": args, "r_min": 1, "r_max": 1},
            {"name": "slave", "behavior": "dnn_training", "args": args, "r_min": 1,
             "r_max": gpus},
        ],
        "capabilities": caps,
        "cost_models": {"slave.train": {"phi": 1.0, "psi": 2.0}},
    }


def dnn_mapping(k: int, gpus_per_host: int = 4) -> dict:
    """Master on the first host CPU, ``k`` slaves filling hosts in order."""
    nested = {"h0cpu": {"master": 1}}
    for i in range(k):
        nested[f"h{i // gpus_per_host}gpu{i % gpus_per_host}"] = {"slave": 1}
    return nested


# -- task farm on a two-speed cluster ------------------------------------------------------


def farm_system(slow: int = 2, fast: int = 12, speed_ratio: float = 2.0,
                t_startup_s: float = 0.0, bandwidth_bps: float = 1e18,
                remote_store: bool = False, store_bandwidth_bps: float = 1e9) -> dict:
    """A star around ``host`` with ``slow`` CPUs and ``fast`` accelerators.

    Slow device ids (``cpu*``) sort before fast ones (``gpu*``), so under
    equal readiness the farm master hands packages to slow devices first.
    An optional ``store`` device, reachable from each worker through its own
    link, serves remote fetches.
    """
    devices = [{"id": "host", "kind": "cpu", "performance": 1e9, "ncores": 1,
                "p_idle_w": 10.0, "p_peak_w": 20.0}]
    workers = [f"cpu{i:02d}" for i in range(slow)] + [f"gpu{i:02d}" for i in range(fast)]
    for w in workers:
        perf = 1e9 * (speed_ratio if w.startswith("gpu") else 1.0)
        devices.append({"id": w, "kind": w[:3], "performance": perf, "ncores": 1,
                        "p_idle_w": 10.0, "p_peak_w": 50.0})
    links = [{"id": f"l_{w}", "a": "host", "b": w, "t_startup_s": t_startup_s,
              "bandwidth_bps": bandwidth_bps} for w in workers]
    if remote_store:
        devices.append({"id": "store", "kind": "storage", "performance": 1e9, "ncores": 1,
                        "p_idle_w": 5.0, "p_peak_w": 5.0})
        links += [{"id": f"s_{w}", "a": "store", "b": w, "t_startup_s": 0.0,
                   "bandwidth_bps": store_bandwidth_bps} for w in workers]
    return {"devices": devices, "links": links}


def farm_workers(system: dict) -> list[str]:
    return [d["id"] for d in system["devices"] if d["id"] not in ("host", "store")]


def farm_application(system: dict, behavior: str = "task_farm", **args) -> dict:
    workers = farm_workers(system)
    return {
        "processes": [
            {"name": "master", "behavior": behavior, "args": args, "r_min": 1, "r_max": 1},
            {"name": "slave", "behavior": behavior, "args": args, "r_min": 1,
             "r_max": len(workers)},
        ],
        "capabilities": [{"device": "host", "process": "master", "max": 1}]
        + [{"device": w, "process": "slave", "max": 1} for w in workers],
    }


def farm_mapping(system: dict) -> dict:
    nested = {"host": {"master": 1}}
    nested.update({w: {"slave": 1} for w in farm_workers(system)})
    return nested
