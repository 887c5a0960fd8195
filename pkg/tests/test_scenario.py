"""Scenario schema, serialization round-trips, and noise injection."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from tip import (
    EgoState,
    GaussianObjectNoise,
    MetricContractError,
    NoiseSpec,
    RoadCorridor,
    Scenario,
    SchemaError,
    WorldObject,
    as_distribution,
    inject,
    load_scenario,
    save_scenario,
)
from tip.scenario import NOISE_KINDS, SCHEMA_ID, scenario_from_dict, scenario_to_dict, synthetic_suite
from conftest import broadside_blocker, straight_scenario


class TestSchema:
    def test_round_trip(self, tmp_path):
        s = straight_scenario("rt", 12.6, [broadside_blocker(30.0)])
        path = tmp_path / "s.json"
        save_scenario(s, str(path))
        loaded = load_scenario(str(path))
        assert loaded == s

    def test_schema_id_present(self):
        d = scenario_to_dict(straight_scenario("x", 10.0))
        assert d["schema"] == SCHEMA_ID == "tip-scenario/1"

    def test_missing_field_message(self):
        d = scenario_to_dict(straight_scenario("x", 10.0))
        del d["ego"]["speed"]
        with pytest.raises(SchemaError, match="missing required field ego.speed"):
            scenario_from_dict(d)

    def test_unknown_field_warns_but_loads(self):
        d = scenario_to_dict(straight_scenario("x", 10.0))
        d["future_extension"] = 1
        with pytest.warns(UserWarning):
            s = scenario_from_dict(d)
        assert s.scenario_id == "x"

    def test_wrong_schema_id_rejected(self):
        d = scenario_to_dict(straight_scenario("x", 10.0))
        d["schema"] = "tip-scenario/999"
        with pytest.raises(SchemaError):
            scenario_from_dict(d)

    def test_malformed_json_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(SchemaError):
            load_scenario(str(path))

    def test_validation_rules(self):
        with pytest.raises(SchemaError):
            EgoState(center=(0.0, 0.0), heading=0.0, speed=-1.0, size=(4.5, 2.0))
        with pytest.raises(SchemaError):
            WorldObject(
                object_id="o", category="spaceship", center=(0.0, 0.0),
                heading=0.0, speed=0.0, size=(1.0, 1.0),
            )
        with pytest.raises(SchemaError):
            RoadCorridor(centerline=((0.0, 0.0),), half_width=3.0)
        with pytest.raises(SchemaError):
            straight_scenario("dup", 10.0, [broadside_blocker(10.0, "a"), broadside_blocker(20.0, "a")])


class TestInject:
    def make(self):
        return straight_scenario("base", 12.6, [broadside_blocker(30.0), broadside_blocker(50.0, "b2")])

    def test_deterministic(self):
        s = self.make()
        n = NoiseSpec(kind="location", seed=42, sigma=1.0)
        assert inject(s, n) == inject(s, n)

    def test_seed_changes_draw(self):
        s = self.make()
        a = inject(s, NoiseSpec(kind="location", seed=1, sigma=1.0))
        b = inject(s, NoiseSpec(kind="location", seed=2, sigma=1.0))
        assert a != b

    def test_input_never_mutated(self):
        s = self.make()
        before = scenario_to_dict(s)
        inject(s, NoiseSpec(kind="location", seed=1, sigma=2.0))
        assert scenario_to_dict(s) == before

    def test_zero_magnitude_is_identity(self):
        s = self.make()
        for kind in ("location", "yaw", "velocity", "size"):
            assert inject(s, NoiseSpec(kind=kind, seed=3, sigma=0.0)) == s
        assert inject(s, NoiseSpec(kind="miss_detection", seed=3, rate=0.0)) == s
        assert inject(s, NoiseSpec(kind="false_positive", seed=3, count=0)) == s

    def test_location_moves_centers_only(self):
        s = self.make()
        q = inject(s, NoiseSpec(kind="location", seed=3, sigma=0.5))
        assert len(q.objects) == len(s.objects)
        for a, b in zip(s.objects, q.objects):
            assert a.center != b.center
            assert a.heading == b.heading and a.size == b.size and a.speed == b.speed

    def test_miss_detection_removes(self):
        s = self.make()
        q = inject(s, NoiseSpec(kind="miss_detection", seed=5, rate=1.0))
        assert len(q.objects) == 0
        q2 = inject(s, NoiseSpec(kind="miss_detection", seed=5, rate=0.0))
        assert q2.objects == s.objects

    def test_false_positive_adds(self):
        s = self.make()
        q = inject(s, NoiseSpec(kind="false_positive", seed=5, count=3))
        assert len(q.objects) == len(s.objects) + 3
        ids = [o.object_id for o in q.objects]
        assert len(set(ids)) == len(ids)

    def test_size_stays_positive(self):
        s = self.make()
        q = inject(s, NoiseSpec(kind="size", seed=5, sigma=5.0))
        for o in q.objects:
            assert o.size[0] > 0 and o.size[1] > 0

    def test_yaw_wraps(self):
        s = self.make()
        q = inject(s, NoiseSpec(kind="yaw", seed=5, sigma=10.0))
        for o in q.objects:
            assert -math.pi <= o.heading <= math.pi

    def test_velocity_stays_nonnegative(self):
        s = self.make()
        q = inject(s, NoiseSpec(kind="velocity", seed=5, sigma=50.0))
        for o in q.objects:
            assert o.speed >= 0.0

    def test_kind_validation(self):
        with pytest.raises(SchemaError):
            NoiseSpec(kind="teleport", seed=1, sigma=1.0)
        with pytest.raises(SchemaError):
            NoiseSpec(kind="location", seed=1, sigma=-1.0)
        with pytest.raises(SchemaError):
            NoiseSpec(kind="miss_detection", seed=1, rate=1.5)
        with pytest.raises(SchemaError):
            NoiseSpec(kind="false_positive", seed=1, count=-1)

    def test_all_kinds_covered(self):
        assert set(NOISE_KINDS) == {
            "false_positive", "miss_detection", "location", "yaw", "velocity", "size",
        }


class TestDistributions:
    def test_point_mass(self):
        s = straight_scenario("pm", 10.0)
        d = as_distribution(s)
        assert d.is_point_mass
        draws = d.sample(3, seed=1)
        assert all(w == s for w in draws)

    def test_gaussian_object_noise_sampling(self):
        s = straight_scenario("g", 10.0, [broadside_blocker(30.0)])
        d = as_distribution(s, GaussianObjectNoise(loc_sigma=0.5))
        assert not d.is_point_mass
        a = d.sample(4, seed=9)
        b = d.sample(4, seed=9)
        assert a == b
        assert a[0] != a[1]
        centers = [w.objects[0].center for w in a]
        assert len(set(centers)) == len(centers)

    def test_synthetic_suite_deterministic(self):
        a = synthetic_suite(5, master_seed=123)
        b = synthetic_suite(5, master_seed=123)
        assert a == b
        assert len({s.scenario_id for s in a}) == 5
        c = synthetic_suite(5, master_seed=124)
        assert a != c

    def test_synthetic_suite_valid_objects(self):
        for s in synthetic_suite(20, master_seed=7):
            assert s.ego.speed > 0
            for o in s.objects:
                assert o.size[0] > 0 and o.size[1] > 0
                assert o.speed >= 0
