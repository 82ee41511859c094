#!/usr/bin/env python3
"""Time the compiled descent kernels against the plain numpy twins.

Each backend runs in its own subprocess so the CYLMIN_NUMBA flag is read
at import time, exactly as a user would experience it. Workloads run a
fixed iteration count with inactive tolerances, so both backends perform
identical work and their final energies must agree.

Usage: python3 bench/bench_kernels.py [--repeats N]
"""

import argparse
import json
import math
import os
import subprocess
import sys
import time


def workloads():
    import numpy as np

    import cylmin
    from cylmin import kernels

    tiny = dict(grad_tol=1e-16, energy_tol=1e-30)

    grid = cylmin.make_grid(256)
    frame = cylmin.make_frame(grid)
    ring_init = cylmin.random_unit_field(grid, seed=0).values

    def ring():
        _, energies, _, _, _ = kernels.descend_ring(
            ring_init.copy(), frame.tangent, frame.normal, 2.0,
            grid.spacing, 0.25, tiny["grad_tol"], tiny["energy_tol"], 2000, False,
        )
        return float(energies[-1])

    cgrid = cylmin.make_grid(96)
    cframe = cylmin.make_frame(cgrid)
    cyl = cylmin.random_cylinder_field(cgrid, 17, seed=0)
    wz = cylmin.energy.z_weights(cyl.z_nodes)

    def cylinder():
        _, energies, _, _, _ = kernels.descend_cylinder(
            cyl.values.copy(), cframe.tangent, cframe.normal, 2.0,
            cgrid.spacing, wz, cyl.z_spacing,
            0.25, tiny["grad_tol"], tiny["energy_tol"], 300, False,
        )
        return float(energies[-1])

    tgrid = cylmin.make_grid(1024)
    profile = cylmin.lift_angle(cylmin.random_in_plane_field(tgrid, 0, turns=-1))

    def theta():
        _, energies, _, _, _ = kernels.descend_theta(
            profile.theta.copy(), profile.turns, 2.0, tgrid.spacing,
            0.25, tiny["grad_tol"], tiny["energy_tol"], 2000,
        )
        return float(energies[-1])

    return [
        ("ring descent, n=256 x 2000 iters", ring),
        ("cylinder descent, 96x17 x 300 iters", cylinder),
        ("angle descent, n=1024 x 2000 iters", theta),
    ]


def run_worker(repeats):
    import cylmin

    rows = {}
    for name, fn in workloads():
        fn()  # warm compile and caches
        best = math.inf
        energy = 0.0
        for _ in range(repeats):
            start = time.perf_counter()
            energy = fn()
            best = min(best, time.perf_counter() - start)
        rows[name] = {"seconds": best, "energy": energy}
    print(json.dumps({"backend": cylmin.kernels.USING_NUMBA, "rows": rows}))


def run_backend(flag, repeats):
    env = dict(os.environ, CYLMIN_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, __file__, "--worker", "--repeats", str(repeats)],
        capture_output=True, text=True, env=env, check=True,
    )
    return json.loads(out.stdout.splitlines()[-1])


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--worker", action="store_true")
    args = parser.parse_args()

    if args.worker:
        run_worker(args.repeats)
        return 0

    jit = run_backend("1", args.repeats)
    plain = run_backend("0", args.repeats)
    if jit["backend"] is not True:
        print("note: numba unavailable, both columns use the numpy path")

    width = max(len(n) for n in jit["rows"]) + 2
    print(f"{'workload':<{width}}{'jit':>10}{'numpy':>10}{'speedup':>9}")
    for name, row in jit["rows"].items():
        a = row["seconds"]
        b = plain["rows"][name]["seconds"]
        ea = row["energy"]
        eb = plain["rows"][name]["energy"]
        drift = abs(ea - eb) / max(abs(ea), 1.0)
        if drift > 1e-9:
            raise SystemExit(f"{name}: backends disagree, rel diff {drift:.2e}")
        print(f"{name:<{width}}{a:>9.3f}s{b:>9.3f}s{b / a:>8.1f}x")
    print("final energies agree across backends (rel diff < 1e-9)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
