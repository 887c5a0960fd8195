"""Timing comparison: compiled geometry kernel vs the NumPy fallback.

Run with:  python3 benchmarks/bench_kernels.py

Times the hot kernel (trajectory-vs-world collision/hinge/distance metrics)
in both backends over a grid of world sizes, then times a full planning
call end-to-end. Output is plain text; numbers are medians of repeated runs.
"""

from __future__ import annotations

import math
import statistics
import time

import numpy as np

from tip import EgoState, RoadCorridor, Scenario, WorldObject, as_distribution, load_preset, plan
from tip.geometry import pack_objects, traj_world_metrics_numpy
from tip.kernels import HAVE_COMPILED
from tip.rng import stream


def timeit(fn, repeats=7, inner=20):
    """Median seconds per call of fn()."""
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        samples.append((time.perf_counter() - t0) / inner)
    return statistics.median(samples)


def random_world(rng, n_steps, n_objs, colliding=False):
    """A wandering trajectory plus objects clear of it (or crossing it)."""
    xyh = np.column_stack(
        [
            np.cumsum(rng.normal(1.0, 0.3, n_steps)),
            rng.normal(0.0, 1.0, n_steps),
            rng.normal(0.0, 0.3, n_steps),
        ]
    )

    class Obj:
        def __init__(self, g):
            if colliding:
                lat = g.uniform(-4.0, 4.0)
            else:
                # keep every object well clear so both backends do full work
                lat = g.uniform(8.0, 14.0) * (1.0 if g.random() < 0.5 else -1.0)
            self.center = (g.uniform(-5.0, 40.0), lat)
            self.heading = g.uniform(-np.pi, np.pi)
            self.speed = 0.0 if not colliding else g.uniform(0.0, 10.0)
            self.size = (g.uniform(0.5, 5.0), g.uniform(0.5, 2.5))

    return xyh, pack_objects([Obj(rng) for _ in range(n_objs)])


def bench_kernel():
    rng = stream(99, "bench")
    print("kernel: trajectory-vs-world metrics (median s/call)")
    header = f"{'steps':>6} {'objects':>8} {'case':>10} {'numpy':>12}"
    if HAVE_COMPILED:
        header += f" {'compiled':>12} {'speedup':>9}"
    print(header)
    cases = [
        (31, 1, False), (31, 4, False), (31, 16, False),
        (121, 4, False), (121, 16, False), (301, 32, False),
        (121, 16, True),  # early first collision: compiled exits early
    ]
    for n_steps, n_objs, colliding in cases:
        xyh, objs = random_world(rng, n_steps, n_objs, colliding)
        label = "colliding" if colliding else "clear"
        t_np = timeit(lambda: traj_world_metrics_numpy(xyh, 2.25, 1.0, objs, 0.1, 1.5))
        line = f"{n_steps:>6} {n_objs:>8} {label:>10} {t_np:>12.3e}"
        if HAVE_COMPILED:
            from tip import _speedups

            got = _speedups.traj_world_metrics(xyh, 2.25, 1.0, objs, 0.1, 1.5)
            want = traj_world_metrics_numpy(xyh, 2.25, 1.0, objs, 0.1, 1.5)
            assert got[0] == want[0] and abs(got[1] - want[1]) < 1e-9
            t_c = timeit(lambda: _speedups.traj_world_metrics(xyh, 2.25, 1.0, objs, 0.1, 1.5))
            line += f" {t_c:>12.3e} {t_np / t_c:>8.1f}x"
        print(line)


def bench_plan():
    s = Scenario(
        scenario_id="bench",
        ego=EgoState(center=(-2.25, 0.0), heading=0.0, speed=12.6, size=(4.5, 2.0)),
        objects=(
            WorldObject(
                object_id="b",
                category="vehicle",
                center=(30.0, 0.0),
                heading=math.pi / 2,
                speed=0.0,
                size=(4.5, 2.0),
            ),
        ),
        corridor=RoadCorridor(centerline=((-40.0, 0.0), (120.0, 0.0)), half_width=3.0),
        horizon_s=3.0,
        dt_s=0.1,
    )
    config = load_preset("av1")
    t = timeit(lambda: plan(as_distribution(s), config), repeats=5, inner=10)
    backend = "compiled" if HAVE_COMPILED else "numpy"
    print(f"\nfull plan() call, 12 candidates, active backend [{backend}]: {t:.3e} s")


if __name__ == "__main__":
    if not HAVE_COMPILED:
        print("note: compiled extension not built; timing the NumPy fallback only\n")
    bench_kernel()
    bench_plan()
