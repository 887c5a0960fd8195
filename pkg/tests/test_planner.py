"""Candidate generation, kinematics, utility, and EUM planning."""

from __future__ import annotations

import math

import numpy as np
import pytest

from tip import (
    GaussianObjectNoise,
    MetricContractError,
    PlannerConfig,
    SampleSpec,
    SchemaError,
    UtilityWeights,
    as_distribution,
    generate_candidates,
    load_preset,
    plan,
    stopping_distance,
    utility,
    validate_trajectory,
)
from tip.planner import (
    PRESET_NAMES,
    action_id_for,
    load_planner_config,
    planner_config_from_dict,
    planner_config_to_dict,
    save_planner_config,
)
from tip.scenario import PointMassScenario
from conftest import broadside_blocker, ghost_wall, straight_scenario


class TestConfig:
    def test_defaults_valid(self):
        c = PlannerConfig()
        assert c.accel_min < 0 < c.accel_max
        assert c.jerk_min < 0 < c.jerk_max
        assert c.weights.collision_penalty <= c.utility_bound_m

    def test_strict_sign_constraints(self):
        with pytest.raises(MetricContractError):
            PlannerConfig(accel_min=0.0)
        with pytest.raises(MetricContractError):
            PlannerConfig(accel_max=0.0)
        with pytest.raises(MetricContractError):
            PlannerConfig(jerk_min=0.0)
        with pytest.raises(MetricContractError):
            PlannerConfig(d_safe=0.0)

    def test_collision_weight_within_bound(self):
        with pytest.raises(MetricContractError):
            PlannerConfig(weights=UtilityWeights(collision_penalty=500.0), utility_bound_m=100.0)

    def test_negative_weight_rejected(self):
        with pytest.raises(MetricContractError):
            UtilityWeights(jerk_weight=-1.0)

    def test_round_trip(self, tmp_path):
        c = load_preset("av2")
        path = tmp_path / "planner.json"
        save_planner_config(c, str(path))
        assert load_planner_config(str(path)) == c

    def test_missing_field_message(self):
        d = planner_config_to_dict(PlannerConfig())
        del d["accel_min"]
        with pytest.raises(SchemaError, match="missing required field planner.accel_min"):
            planner_config_from_dict(d)

    def test_unknown_field_warns(self):
        d = planner_config_to_dict(PlannerConfig())
        d["bonus"] = 1
        with pytest.warns(UserWarning):
            planner_config_from_dict(d)

    def test_presets(self):
        assert PRESET_NAMES == ("av1", "av2")
        av1, av2 = load_preset("av1"), load_preset("av2")
        assert av1.accel_min == -4.0 and av1.jerk_min == -4.0
        assert av2.accel_min == -6.0 and av2.jerk_min == -12.0
        assert av1.d_safe == av2.d_safe == 2.5
        with pytest.raises(SchemaError):
            load_preset("av9")


class TestStoppingDistance:
    def test_calibrated_pins(self):
        assert stopping_distance(14.0, -4.0, -4.0) == pytest.approx(31.33, abs=0.01)
        assert stopping_distance(14.0, -6.0, -12.0) == pytest.approx(19.77, abs=0.01)

    def test_zero_speed(self):
        assert stopping_distance(0.0, -4.0, -4.0) == 0.0

    def test_triangular_profile_closed_form(self):
        # v0 small enough that the accel limit is never reached
        v0, j = 1.0, 4.0
        t_star = math.sqrt(2.0 * v0 / j)
        expected = v0 * t_star - j * t_star**3 / 6.0
        assert stopping_distance(v0, -100.0, -j) == pytest.approx(expected, rel=1e-12)

    def test_monotone_in_speed(self):
        ds = [stopping_distance(v, -4.0, -4.0) for v in (5.0, 10.0, 15.0, 20.0)]
        assert ds == sorted(ds)

    def test_preconditions(self):
        with pytest.raises(MetricContractError):
            stopping_distance(-1.0, -4.0, -4.0)
        with pytest.raises(MetricContractError):
            stopping_distance(10.0, 4.0, -4.0)
        with pytest.raises(MetricContractError):
            stopping_distance(10.0, -4.0, 4.0)


class TestCandidates:
    def test_counts_and_ids(self):
        s = straight_scenario("c", 12.6)
        default = generate_candidates(s, PlannerConfig())
        assert len(default) == 15  # 5 targets x 3 offsets
        av1 = generate_candidates(s, load_preset("av1"))
        assert len(av1) == 12  # -6 target infeasible under accel_min = -4
        ids = [t.action_id for t in av1]
        assert ids == [t.action_id for t in generate_candidates(s, load_preset("av1"))]
        assert len(set(ids)) == len(ids)
        assert "a+0.0|o+0.0" in ids
        assert all(not t.action_id.startswith("a-6.0") for t in av1)

    def test_action_id_format(self):
        assert action_id_for(-4.0, 0.0) == "a-4.0|o+0.0"
        assert action_id_for(1.0, -1.5) == "a+1.0|o-1.5"

    def test_all_candidates_validate(self):
        s = straight_scenario("v", 12.6)
        config = PlannerConfig()
        for t in generate_candidates(s, config):
            validate_trajectory(t, config)

    def test_kinematics_of_hold_action(self):
        s = straight_scenario("k", 10.0)
        config = PlannerConfig()
        hold = next(
            t for t in generate_candidates(s, config) if t.action_id == "a+0.0|o+0.0"
        )
        # constant speed along +x from the ego center
        assert hold.final_speed() == pytest.approx(10.0, abs=1e-9)
        assert hold.x[-1] == pytest.approx(-2.25 + 10.0 * 3.0, abs=1e-6)
        assert np.allclose(hold.y, 0.0, atol=1e-9)

    def test_stationary_ego(self):
        s = straight_scenario("s0", 0.0)
        for t in generate_candidates(s, PlannerConfig()):
            if t.accel_target <= 0.0:
                assert np.allclose(t.x, t.x[0]) and np.allclose(t.y, t.y[0])

    def test_braking_candidate_stops(self):
        s = straight_scenario("b", 10.0)
        config = load_preset("av2")
        brake = next(
            t for t in generate_candidates(s, config) if t.action_id == "a-6.0|o+0.0"
        )
        assert brake.final_speed() == pytest.approx(0.0, abs=1e-9)
        # the candidate releases the brake jerk-limited, travelling exactly
        # a^3 / (24 j^2) farther than the hard-release stopping distance
        release = 6.0**3 / (24.0 * 12.0**2)
        assert brake.progress_arc == pytest.approx(
            stopping_distance(10.0, -6.0, -12.0) + release, abs=1e-6
        )


class TestUtility:
    def test_bounded_and_nonpositive(self):
        s = straight_scenario("u", 12.6, [broadside_blocker(30.0)])
        config = PlannerConfig()
        for t in generate_candidates(s, config):
            u = utility(s, t, config)
            assert -config.utility_bound_m <= u <= 0.0

    def test_collision_dominates(self):
        config = PlannerConfig()
        near = straight_scenario("near", 12.6, [broadside_blocker(10.0)])
        hold = next(
            t for t in generate_candidates(near, config) if t.action_id == "a+0.0|o+0.0"
        )
        assert utility(near, hold, config) == -config.utility_bound_m

    def test_clear_road_beats_blocked(self):
        config = PlannerConfig()
        clear = straight_scenario("cl", 12.6)
        blocked = straight_scenario("cl", 12.6, [broadside_blocker(30.0)])
        t = next(
            t for t in generate_candidates(clear, config) if t.action_id == "a+1.0|o+0.0"
        )
        assert utility(clear, t, config) > utility(blocked, t, config)


class TestPlan:
    def test_clear_road_accelerates(self):
        s = straight_scenario("p1", 12.6)
        r = plan(as_distribution(s), PlannerConfig())
        assert r.best.action_id == "a+1.0|o+0.0"

    def test_blocked_at_30_brakes_hard_av1(self):
        s = straight_scenario("p2", 12.6, [broadside_blocker(30.0)])
        r = plan(as_distribution(s), load_preset("av1"))
        assert r.best.action_id == "a-4.0|o+0.0"

    def test_plan_flips_when_blocker_removed(self):
        config = load_preset("av1")
        blocker = broadside_blocker(30.0)
        blocked = plan(as_distribution(straight_scenario("f", 12.6, [blocker])), config)
        clear = plan(as_distribution(straight_scenario("f", 12.6)), config)
        assert blocked.best.action_id == "a-4.0|o+0.0"
        assert clear.best.action_id == "a+1.0|o+0.0"

    def test_all_collide_tie_breaks_lexicographically(self):
        s = straight_scenario("p3", 12.6, [broadside_blocker(10.0)])
        config = PlannerConfig()
        r = plan(as_distribution(s), config)
        assert set(r.eu.values()) == {-config.utility_bound_m}
        assert r.best.action_id == min(r.eu)

    def test_braking_intensity_monotone_in_distance(self):
        config = PlannerConfig()
        peaks = []
        for d in (50.0, 45.0, 40.0, 35.0, 30.0, 25.0):
            s = straight_scenario("m", 12.6, [broadside_blocker(d)])
            r = plan(as_distribution(s), config)
            peaks.append(-min(r.best.long_accel))
        assert all(b >= a - 1e-9 for a, b in zip(peaks, peaks[1:]))

    def test_sampled_path_matches_exact_for_null_noise(self):
        s = straight_scenario("p4", 12.6, [broadside_blocker(30.0)])
        config = load_preset("av1")
        exact = plan(as_distribution(s), config)
        from tip.scenario import ScenarioDistribution

        sampled = plan(
            ScenarioDistribution(s, GaussianObjectNoise()),
            config,
            SampleSpec(n=16, seed=3),
        )
        assert sampled.best.action_id == exact.best.action_id
        for k, v in exact.eu.items():
            assert sampled.eu[k] == pytest.approx(v, abs=1e-9)

    def test_plan_under_uncertainty_is_deterministic(self):
        s = straight_scenario("p5", 12.6, [broadside_blocker(30.0)])
        d = as_distribution(s, GaussianObjectNoise(loc_sigma=1.0))
        config = load_preset("av1")
        a = plan(d, config, SampleSpec(n=64, seed=9))
        b = plan(d, config, SampleSpec(n=64, seed=9))
        assert a.best.action_id == b.best.action_id
        assert a.eu == b.eu

    def test_control_noise_path_deterministic(self):
        s = straight_scenario("p6", 12.6, [broadside_blocker(30.0)])
        config = PlannerConfig(control_noise_sigma=0.05)
        a = plan(as_distribution(s), config, SampleSpec(n=32, seed=4))
        b = plan(as_distribution(s), config, SampleSpec(n=32, seed=4))
        assert a.eu == b.eu

    def test_ghost_wall_does_not_change_plan(self):
        config = load_preset("av1")
        clear = plan(as_distribution(straight_scenario("g", 10.0)), config)
        ghosts = plan(
            as_distribution(straight_scenario("g", 10.0, ghost_wall())), config
        )
        assert clear.best.action_id == ghosts.best.action_id == "a+1.0|o+0.0"
