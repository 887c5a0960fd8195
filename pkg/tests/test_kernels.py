"""Compiled-vs-NumPy backend equivalence for the hot geometry kernel."""

from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from tip.geometry import pack_objects, traj_world_metrics_numpy
from tip.kernels import HAVE_COMPILED, active_backend
from tip.rng import stream


def random_case(rng, n_steps=31, n_objs=3):
    xyh = np.column_stack(
        [
            np.cumsum(rng.normal(1.0, 0.3, n_steps)),
            rng.normal(0.0, 1.0, n_steps),
            rng.normal(0.0, 0.3, n_steps),
        ]
    )

    class Obj:
        def __init__(self, g):
            self.center = (g.uniform(-5.0, 40.0), g.uniform(-4.0, 4.0))
            self.heading = g.uniform(-np.pi, np.pi)
            self.speed = g.uniform(0.0, 10.0)
            self.size = (g.uniform(0.5, 5.0), g.uniform(0.5, 2.5))

    objs = pack_objects([Obj(rng) for _ in range(n_objs)])
    return xyh, objs


class TestBackends:
    def test_backend_reports_a_known_name(self):
        assert active_backend() in ("compiled", "numpy")

    @pytest.mark.skipif(not HAVE_COMPILED, reason="compiled extension not built")
    def test_compiled_matches_numpy_randomised(self):
        from tip import _speedups

        rng = stream(2024, "kernel-equivalence")
        for case in range(300):
            xyh, objs = random_case(rng)
            got = _speedups.traj_world_metrics(xyh, 2.25, 1.0, objs, 0.1, 1.5)
            want = traj_world_metrics_numpy(xyh, 2.25, 1.0, objs, 0.1, 1.5)
            assert got[0] == want[0], f"case {case}: collision step differs"
            assert got[1] == pytest.approx(want[1], rel=1e-12, abs=1e-12)
            assert got[2] == pytest.approx(want[2], rel=1e-12, abs=1e-12)

    @pytest.mark.skipif(not HAVE_COMPILED, reason="compiled extension not built")
    def test_empty_object_list(self):
        from tip import _speedups

        rng = stream(7, "kernel-empty")
        xyh, _ = random_case(rng)
        objs = np.empty((0, 8))
        got = _speedups.traj_world_metrics(xyh, 2.25, 1.0, objs, 0.1, 1.5)
        want = traj_world_metrics_numpy(xyh, 2.25, 1.0, objs, 0.1, 1.5)
        assert got[0] == want[0] == -1
        assert got[1] == want[1] == 0.0

    def test_pure_python_env_forces_numpy(self):
        code = (
            "import tip.kernels as k; "
            "print(k.active_backend())"
        )
        env = dict(os.environ, TIP_PURE_PYTHON="1")
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, env=env
        )
        assert out.returncode == 0, out.stderr
        assert out.stdout.strip() == "numpy"

    def test_full_plan_identical_across_backends(self):
        # the metric itself must not depend on the backend choice
        code = """
import json
from tip import as_distribution, load_preset, plan, Scenario, EgoState, WorldObject, RoadCorridor
import math
s = Scenario(
    scenario_id="bk",
    ego=EgoState(center=(-2.25, 0.0), heading=0.0, speed=12.6, size=(4.5, 2.0)),
    objects=(WorldObject(object_id="b", category="vehicle", center=(30.0, 0.0),
                         heading=math.pi/2, speed=0.0, size=(4.5, 2.0)),),
    corridor=RoadCorridor(centerline=((-40.0, 0.0), (120.0, 0.0)), half_width=3.0),
    horizon_s=3.0, dt_s=0.1,
)
r = plan(as_distribution(s), load_preset("av1"))
print(json.dumps({"best": r.best.action_id, "eu": {k: repr(v) for k, v in r.eu.items()}}))
"""
        outs = []
        for force in ("", "1"):
            env = dict(os.environ)
            if force:
                env["TIP_PURE_PYTHON"] = force
            else:
                env.pop("TIP_PURE_PYTHON", None)
            r = subprocess.run(
                [sys.executable, "-c", code], capture_output=True, text=True, env=env
            )
            assert r.returncode == 0, r.stderr
            outs.append(r.stdout)
        assert outs[0] == outs[1]
