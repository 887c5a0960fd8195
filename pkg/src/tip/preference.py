"""Preference geometry between two actions under an embedded belief.

For two actions with (bounded) utility functions U_star and U_a on the same
grid, the *behaviour direction* is dU = U_star - U_a. The preference score of
a belief embedding mu is

    xi = <mu, dU> = E[U_star] - E[U_a];

the action a_star is preferred iff xi > 0 (a tie is *not* a preference).

A perception error moves the belief embedding by dmu = mu_q - mu_p. Only the
component of dmu parallel to dU changes xi; the orthogonal remainder is
invisible to this action pair. ``decompose`` splits dmu accordingly and
reports the *consequential energy fraction* ||dmu_par||^2 / ||dmu||^2 — the
share of the perception error's energy that this action pair can feel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundViolationError, MetricContractError
from .hilbert import GridFunction, inner_product, norm

__all__ = [
    "ActionUtility",
    "BehaviorDirection",
    "DecompositionResult",
    "behavior_direction",
    "preference_score",
    "in_planning_halfspace",
    "decompose",
]


@dataclass(frozen=True)
class ActionUtility:
    """A named action with its utility function and almost-sure bound."""

    action_id: str
    u: GridFunction
    bound_m: float

    def __post_init__(self) -> None:
        if not self.action_id:
            raise MetricContractError("action_id must be a non-empty string")
        if not self.bound_m > 0:
            raise MetricContractError(f"bound_m must be positive, got {self.bound_m}")
        worst = float(np.max(np.abs(self.u.values)))
        if worst > self.bound_m * (1 + 1e-12):
            raise BoundViolationError(
                f"utility of action {self.action_id!r} reaches |{worst}| "
                f"which exceeds the declared bound {self.bound_m}"
            )


@dataclass(frozen=True)
class BehaviorDirection:
    """The utility difference dU = U_star - U_a and its unit vector."""

    delta_u: GridFunction
    unit: GridFunction = field(repr=False)

    def __post_init__(self) -> None:
        n = norm(self.unit)
        if abs(n - 1.0) > 1e-9:
            raise MetricContractError(f"direction unit vector has norm {n}, expected 1")


def behavior_direction(a_star: ActionUtility, a: ActionUtility) -> BehaviorDirection:
    """Direction dU = U_star - U_a; errors if the two actions are indistinct."""
    delta = a_star.u - a.u
    n = norm(delta)
    if n == 0.0:
        raise MetricContractError(
            f"actions {a_star.action_id!r} and {a.action_id!r} have identical "
            "utilities; no behaviour direction exists"
        )
    return BehaviorDirection(delta_u=delta, unit=delta * (1.0 / n))


def preference_score(mu: GridFunction, direction: BehaviorDirection) -> float:
    """xi = <mu, dU> = E[U_star] - E[U_a] under the belief mu."""
    return inner_product(mu, direction.delta_u)


def in_planning_halfspace(mu: GridFunction, direction: BehaviorDirection) -> bool:
    """True iff a_star is strictly preferred under mu (xi > 0; a tie is not)."""
    return preference_score(mu, direction) > 0.0


@dataclass(frozen=True)
class DecompositionResult:
    """Split of a belief shift into consequential and inconsequential parts."""

    parallel: GridFunction
    perpendicular: GridFunction
    delta_xi: float
    pce_energy_fraction: float


def decompose(mu_p: GridFunction, mu_q: GridFunction, direction: BehaviorDirection) -> DecompositionResult:
    """Project the belief shift dmu = mu_q - mu_p onto the behaviour direction.

    parallel      = (<dmu, dU> / ||dU||^2) dU   (consequential component)
    perpendicular = dmu - parallel              (inconsequential component)
    delta_xi      = <dmu, dU>                   (the preference shift)
    pce_energy_fraction = ||parallel||^2 / ||dmu||^2   (0 for dmu == 0)
    """
    delta_mu = mu_q - mu_p
    du = direction.delta_u
    du_sq = inner_product(du, du)
    if du_sq <= 0.0:
        raise MetricContractError("behaviour direction has zero norm")

    delta_xi = inner_product(delta_mu, du)
    parallel = du * (delta_xi / du_sq)
    perpendicular = delta_mu - parallel

    # Internal consistency: the shift computed from the full dmu and from its
    # parallel part must agree to 1e-9 relative.
    xi_par = inner_product(parallel, du)
    scale = max(abs(delta_xi), abs(xi_par), 1.0)
    if abs(delta_xi - xi_par) > 1e-9 * scale:
        raise MetricContractError(
            f"projection inconsistency: <dmu,dU>={delta_xi} vs <dmu_par,dU>={xi_par}"
        )

    dmu_sq = inner_product(delta_mu, delta_mu)
    par_sq = inner_product(parallel, parallel)
    fraction = 0.0 if dmu_sq <= 0.0 else min(1.0, par_sq / dmu_sq)

    return DecompositionResult(
        parallel=parallel,
        perpendicular=perpendicular,
        delta_xi=delta_xi,
        pce_energy_fraction=fraction,
    )
