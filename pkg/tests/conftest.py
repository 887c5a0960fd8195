"""Shared builders for the two 1-D worked cases and the driving scenarios."""

from __future__ import annotations

import math

import pytest

from tip import (
    ActionUtility,
    AnalyticDensity,
    Domain1D,
    EgoState,
    GridFunction,
    RoadCorridor,
    Scenario,
    WorldObject,
    behavior_direction,
    embed,
)

DEMO_DOMAIN = Domain1D(-3.0, 3.0, 6000)


def indicator_utility(action_id, lo, hi, inside, outside, bound_m, domain=DEMO_DOMAIN):
    g = GridFunction.from_callable(
        domain,
        lambda x: inside * ((x >= lo) & (x <= hi)) + outside * ~((x >= lo) & (x <= hi)),
    )
    return ActionUtility(action_id=action_id, u=g, bound_m=bound_m)


def advance_action(domain=DEMO_DOMAIN):
    """Utility -10 on [-1, 1], 0 elsewhere: advancing is costly near the obstacle."""
    return indicator_utility("advance", -1.0, 1.0, -10.0, 0.0, 10.0, domain)


def hold_action(domain=DEMO_DOMAIN):
    """Constant -5 everywhere: holding back has a flat progress cost."""
    return ActionUtility("hold", GridFunction.constant(domain, -5.0), 10.0)


@pytest.fixture(scope="session")
def offset_case():
    """Belief displaced sideways; flips the advance-vs-hold decision."""
    domain = DEMO_DOMAIN
    p = AnalyticDensity.uniform(-3.0, -2.0)
    q = AnalyticDensity.uniform(-1.0, 0.0)
    a_star, alt = advance_action(domain), hold_action(domain)
    return {
        "domain": domain,
        "p": p,
        "q": q,
        "mu_p": embed(p, domain),
        "mu_q": embed(q, domain),
        "a_star": a_star,
        "alt": alt,
        "direction": behavior_direction(a_star, alt),
    }


@pytest.fixture(scope="session")
def shrink_case():
    """Belief support contracts around the obstacle; favours holding back."""
    domain = DEMO_DOMAIN
    p = AnalyticDensity.uniform(-1.5, 1.5)
    q = AnalyticDensity.uniform(-0.5, 0.5)
    a_star, alt = hold_action(domain), advance_action(domain)
    return {
        "domain": domain,
        "p": p,
        "q": q,
        "mu_p": embed(p, domain),
        "mu_q": embed(q, domain),
        "a_star": a_star,
        "alt": alt,
        "direction": behavior_direction(a_star, alt),
    }


STRAIGHT_CORRIDOR = RoadCorridor(centerline=((-40.0, 0.0), (120.0, 0.0)), half_width=3.0)


def straight_scenario(scenario_id, speed, objects=(), corridor=STRAIGHT_CORRIDOR):
    """Ego starts with its front bumper at x = 0, heading +x along the corridor."""
    return Scenario(
        scenario_id=scenario_id,
        ego=EgoState(center=(-2.25, 0.0), heading=0.0, speed=speed, size=(4.5, 2.0)),
        objects=tuple(objects),
        corridor=corridor,
        horizon_s=3.0,
        dt_s=0.1,
    )


def broadside_blocker(distance, object_id="blocker"):
    """A stopped truck across the lane, near edge at distance - 1.0 from the front."""
    return WorldObject(
        object_id=object_id,
        category="vehicle",
        center=(float(distance), 0.0),
        heading=math.pi / 2.0,
        speed=0.0,
        size=(4.5, 2.0),
    )


def ghost_wall(distance=25.0, lateral=3.65):
    """Two stationary ghosts flanking the lane just outside the swerve paths."""
    mk = lambda oid, y: WorldObject(  # noqa: E731
        object_id=oid, category="vehicle", center=(distance, y), heading=0.0, speed=0.0, size=(4.5, 2.0)
    )
    return (mk("ghost_left", lateral), mk("ghost_right", -lateral))
