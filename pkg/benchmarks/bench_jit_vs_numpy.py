"""Compare the compiled kernels with the pure-numpy fallback.

Each workload runs in a fresh interpreter per backend (the backend is fixed
at import time by ``BOUNDFIRE_PURE_NUMPY``).  The compiled path is warmed up
once so compilation is not timed.  Results must agree exactly.

    python3 benchmarks/bench_jit_vs_numpy.py [--scale 1.0]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import textwrap

WORKER = textwrap.dedent(
    """
    import json, math, sys, time
    from boundfire import BACKEND
    from boundfire.forestfire import origin_burn_experiment, long_path_experiment
    from boundfire.percolation import one_arm_curve, estimate_event, HCross
    from boundfire.lattice import Rhombus, build_domain

    scale = float(sys.argv[1])
    dom = build_domain(Rhombus(16))
    work = {
        "rhombus crossing n=16": lambda r: estimate_event(HCross(), dom, 0.5, r, 1).successes,
        "one-arm reach n=32": lambda r: one_arm_curve([32], r, 1)[0].successes,
        "origin burn N=8": lambda r: origin_burn_experiment(8, 1.0, replicas=r, seed=1).successes,
        "long path n=16": lambda r: long_path_experiment(16, 1.0, r, seed=1).successes,
    }
    sizes = {"rhombus crossing n=16": 2000, "one-arm reach n=32": 2000, "origin burn N=8": 200, "long path n=16": 2000}
    out = {"backend": BACKEND, "results": {}}
    for name, fn in work.items():
        reps = max(1, int(sizes[name] * scale))
        if BACKEND == "numba":
            fn(1)  # compile
        t0 = time.perf_counter()
        value = fn(reps)
        out["results"][name] = {"replicas": reps, "seconds": time.perf_counter() - t0, "value": value}
    print(json.dumps(out))
    """
)


def run(flag: str, scale: float) -> dict:
    env = dict(os.environ, BOUNDFIRE_PURE_NUMPY=flag)
    proc = subprocess.run(
        [sys.executable, "-c", WORKER, str(scale)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scale", type=float, default=1.0, help="multiply every replica count")
    args = parser.parse_args(argv)
    jit = run("0", args.scale)
    ref = run("1", args.scale)
    print(f"{'workload':28s} {'replicas':>8s} {'numba s':>9s} {'numpy s':>9s} {'speedup':>8s}  equal")
    same = True
    for name, a in jit["results"].items():
        b = ref["results"][name]
        equal = a["value"] == b["value"]
        same &= equal
        speed = b["seconds"] / a["seconds"] if a["seconds"] > 0 else float("inf")
        print(f"{name:28s} {a['replicas']:8d} {a['seconds']:9.3f} {b['seconds']:9.3f} {speed:8.1f}  {equal}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
