"""The decision-impact score: how much a perception error erodes the
planner's preference for its true-world-optimal action.

Scoring recipe (the sampled path):

1. Generate candidates from the true world ``p`` and the perceived world
   ``q``; union them, deduplicating by action id (identical ids with poses
   equal to 1e-9 merge; a genuinely different q-candidate keeps its id with
   a ``#q`` suffix).
2. Select ``a*`` by planning on ``p`` over the union.
3. For every action ``a`` in the union, estimate

       delta_xi_a = E[ (U(s_q, a*) - U(s_q, a)) - (U(s_p, a*) - U(s_p, a)) ]

   with *paired* sampling: s_p and s_q are drawn from the same seeded
   stream index, so q = p cancels exactly, term by term.
4. Aggregate (default: min). The a*-vs-a* row is identically zero, so the
   min is always <= 0: the score reports the worst erosion of preference,
   never the favourable shifts (those are visible in ``per_action``).

A concentration bound at a configurable epsilon accompanies every report so
callers can tell resolved score differences from sampling noise. Scores of
point-mass worlds are exact (a single evaluation stands in for the mean of
identical samples); the attached bound is then conservative, never wrong.

Also here: the exact grid path for 1-D worked cases (``tip_score_grid``),
the ``aggregate`` statistics, the gradient-proxy baseline (``ipa_score`` /
``true_cost_delta``), and ``behavior_divergence``, a trajectory-space KL
proxy used to exhibit errors that change the planning margins without
changing the chosen behaviour.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import MetricContractError
from .estimator import SampleSpec, TailBound, sample_states, tail_bound
from .hilbert import GridFunction, inner_product
from .planner import PlannerConfig, Trajectory, evaluate_candidates, generate_candidates, plan
from .preference import ActionUtility
from .scenario import PointMassScenario, Scenario

__all__ = [
    "TipReport",
    "tip_score",
    "tip_score_grid",
    "aggregate",
    "ipa_score",
    "true_cost_delta",
    "behavior_divergence",
    "REPORT_SCHEMA_ID",
]

REPORT_SCHEMA_ID = "tip-report/1"

_PERCENTILE_RE = re.compile(r"^percentile\((\d+(?:\.\d+)?)\)$")


# --------------------------------------------------------------------------
# Aggregation
# --------------------------------------------------------------------------


def aggregate(delta_xis: Sequence[float], mode: str = "min") -> float:
    """Reduce per-action preference shifts to one score.

    Modes: ``min`` (worst erosion), ``mean``, ``percentile(k)`` (k-th
    percentile by linear interpolation).
    """
    values = np.asarray(list(delta_xis), dtype=np.float64)
    if values.size == 0:
        raise MetricContractError("cannot aggregate an empty list of per-action shifts")
    if mode == "min":
        return float(np.min(values))
    if mode == "mean":
        return float(np.mean(values))
    m = _PERCENTILE_RE.match(mode)
    if m:
        k = float(m.group(1))
        if not 0.0 <= k <= 100.0:
            raise MetricContractError(f"percentile must be in [0, 100], got {k}")
        return float(np.percentile(values, k, method="linear"))
    raise MetricContractError(
        f"unknown aggregation mode {mode!r}; expected min, mean, or percentile(k)"
    )


# --------------------------------------------------------------------------
# Report
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TipReport:
    """One scored (true world, perceived world) pair.

    ``tip_score`` is the aggregate of ``per_action`` shifts; under the
    default min aggregation it is always <= 0 because the a*-row is
    identically zero. ``per_action`` keeps every row, including favourable
    (positive) shifts the aggregate discards. ``n`` is the number of world
    samples actually evaluated (1 for point masses, where the score is
    exact); ``bound`` is the concentration bound at the requested epsilon
    for the reported score's estimator.
    """

    scenario_id: str
    tip_score: float
    per_action: tuple[tuple[str, float], ...]
    a_star_id: str
    candidate_count: int
    n: int
    seed: int
    aggregation: str = "min"
    bound: TailBound | None = None

    def __post_init__(self) -> None:
        if self.aggregation == "min" and self.tip_score > 0.0:
            raise MetricContractError(
                f"min-aggregated score must be <= 0, got {self.tip_score}"
            )
        want = aggregate([d for _, d in self.per_action], self.aggregation)
        if not math.isclose(want, self.tip_score, rel_tol=1e-12, abs_tol=1e-12):
            raise MetricContractError(
                f"tip_score {self.tip_score} does not equal the {self.aggregation} "
                f"of per_action ({want})"
            )

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA_ID,
            "scenario_id": self.scenario_id,
            "tip_score": self.tip_score,
            "a_star_id": self.a_star_id,
            "per_action": [[aid, dxi] for aid, dxi in self.per_action],
            "candidate_count": self.candidate_count,
            "n": self.n,
            "seed": self.seed,
            "aggregation": self.aggregation,
            "bound": self.bound.as_dict() if self.bound is not None else None,
        }

    CSV_HEADER = ("scenario_id", "tip", "a_star", "n", "seed", "bound_prob")

    def csv_row(self) -> tuple:
        return (
            self.scenario_id,
            f"{self.tip_score:.9g}",
            self.a_star_id,
            self.n,
            self.seed,
            f"{self.bound.probability:.9g}" if self.bound is not None else "",
        )


# --------------------------------------------------------------------------
# The sampled scoring path
# --------------------------------------------------------------------------


def _as_distribution(world) -> object:
    if isinstance(world, Scenario):
        return PointMassScenario(world)
    if hasattr(world, "sample") and hasattr(world, "scenario"):
        return world
    raise MetricContractError(
        f"expected a Scenario or a scenario distribution, got {type(world).__name__}"
    )


def _check_shared_frame(p: Scenario, q: Scenario) -> None:
    same_corridor = (
        p.corridor.centerline == q.corridor.centerline
        and p.corridor.half_width == q.corridor.half_width
    )
    if not same_corridor:
        raise MetricContractError("true and perceived worlds must share the corridor")
    if p.ego != q.ego:
        raise MetricContractError("true and perceived worlds must share the ego state")
    if (p.horizon_s, p.dt_s) != (q.horizon_s, q.dt_s):
        raise MetricContractError("true and perceived worlds must share horizon and step")


def _union_candidates(
    from_p: Sequence[Trajectory], from_q: Sequence[Trajectory]
) -> list[Trajectory]:
    """Union by action id; a q-candidate that moves differently gets '#q'."""
    union = list(from_p)
    by_id = {t.action_id: t for t in union}
    for cand in from_q:
        have = by_id.get(cand.action_id)
        if have is None:
            union.append(cand)
            by_id[cand.action_id] = cand
            continue
        same_poses = (
            have.n_poses == cand.n_poses
            and np.allclose(have.x, cand.x, atol=1e-9, rtol=0.0)
            and np.allclose(have.y, cand.y, atol=1e-9, rtol=0.0)
            and np.allclose(have.heading, cand.heading, atol=1e-9, rtol=0.0)
        )
        if same_poses:
            continue
        renamed = Trajectory(
            action_id=cand.action_id + "#q",
            dt=cand.dt,
            t=cand.t,
            x=cand.x,
            y=cand.y,
            heading=cand.heading,
            speed=cand.speed,
            accel=cand.accel,
            jerk=cand.jerk,
            long_accel=cand.long_accel,
            long_jerk=cand.long_jerk,
            progress_arc=cand.progress_arc,
            accel_target=cand.accel_target,
            lateral_offset=cand.lateral_offset,
        )
        union.append(renamed)
        by_id[renamed.action_id] = renamed
    return union


def tip_score(
    p,
    q,
    config: PlannerConfig,
    spec: SampleSpec,
    aggregation: str = "min",
    epsilon: float = 0.5,
) -> TipReport:
    """Score the decision impact of perceiving ``q`` when the world is ``p``.

    ``p`` and ``q`` are Scenarios (treated as point masses) or scenario
    distributions sharing the ego, corridor, and horizon. Returns a
    :class:`TipReport`; under min aggregation the score is <= 0 always and
    exactly 0 when q = p (paired streams cancel).
    """
    if epsilon <= 0.0:
        raise MetricContractError(f"epsilon must be > 0, got {epsilon}")
    p_dist = _as_distribution(p)
    q_dist = _as_distribution(q)
    _check_shared_frame(p_dist.scenario, q_dist.scenario)

    union = _union_candidates(
        generate_candidates(p_dist.scenario, config),
        generate_candidates(q_dist.scenario, config),
    )

    plan_p = plan(p_dist, config, spec, candidates=union)
    a_star = plan_p.best.action_id

    exact = (
        getattr(p_dist, "is_point_mass", False)
        and getattr(q_dist, "is_point_mass", False)
        and config.control_noise_sigma == 0.0
    )
    if exact:
        worlds_p = [p_dist.scenario]
        worlds_q = [q_dist.scenario]
    else:
        worlds_p = sample_states(p_dist, spec, stream=0)
        worlds_q = sample_states(q_dist, spec, stream=0)  # paired: same stream index

    up = evaluate_candidates(union, worlds_p, p_dist.scenario, config, seed=spec.seed)
    uq = evaluate_candidates(union, worlds_q, q_dist.scenario, config, seed=spec.seed)

    n_eval = len(worlds_p)
    per_action = []
    terms_by_action = {}
    for traj in union:
        aid = traj.action_id
        terms = (uq[a_star] - uq[aid]) - (up[a_star] - up[aid])
        terms_by_action[aid] = terms
        per_action.append((aid, float(np.mean(terms))))

    values = [dxi for _, dxi in per_action]
    score = aggregate(values, aggregation)

    # Bound for the reported row's estimator: the worst (argmin) action's
    # paired terms. Each term is a difference of four clamped utilities, so
    # its magnitude never exceeds 4 * utility_bound_m.
    worst_aid = min(per_action, key=lambda kv: (kv[1], kv[0]))[0]
    terms = terms_by_action[worst_aid]
    variance = float(np.var(terms)) if n_eval > 1 else 0.0
    bound = tail_bound(n_eval, epsilon, 4.0 * config.utility_bound_m, variance)

    return TipReport(
        scenario_id=p_dist.scenario.scenario_id,
        tip_score=score,
        per_action=tuple(per_action),
        a_star_id=a_star,
        candidate_count=len(union),
        n=n_eval,
        seed=spec.seed,
        aggregation=aggregation,
        bound=bound,
    )


# --------------------------------------------------------------------------
# The exact grid path (1-D worked cases)
# --------------------------------------------------------------------------


def tip_score_grid(
    mu_p: GridFunction,
    mu_q: GridFunction,
    utilities: Sequence[ActionUtility],
    aggregation: str = "min",
) -> TipReport:
    """Exact scoring for grid-embedded 1-D beliefs.

    a* maximises <mu_p, U_a> (ties to the smallest action id); each row is
    the exact inner product <mu_q - mu_p, U_{a*} - U_a>. No sampling, no
    bound.
    """
    if not utilities:
        raise MetricContractError("need at least one action utility")
    ids = [u.action_id for u in utilities]
    if len(set(ids)) != len(ids):
        raise MetricContractError("action ids must be unique")

    eu_p = {u.action_id: inner_product(mu_p, u.u) for u in utilities}
    a_star = min(eu_p, key=lambda aid: (-eu_p[aid], aid))
    u_star = next(u for u in utilities if u.action_id == a_star)

    dmu = mu_q - mu_p
    per_action = []
    for u in utilities:
        delta_u = u_star.u - u.u
        per_action.append((u.action_id, inner_product(dmu, delta_u)))

    score = aggregate([d for _, d in per_action], aggregation)
    return TipReport(
        scenario_id="grid",
        tip_score=score,
        per_action=tuple(per_action),
        a_star_id=a_star,
        candidate_count=len(utilities),
        n=mu_p.domain.cells,
        seed=0,
        aggregation=aggregation,
        bound=None,
    )


# --------------------------------------------------------------------------
# Baselines
# --------------------------------------------------------------------------


def _check_distances(d_true: float, d_noisy: float) -> None:
    if not (d_true > 0.0 and d_noisy > 0.0):
        raise MetricContractError(
            f"distances must be > 0, got d_true={d_true}, d_noisy={d_noisy}"
        )


def ipa_score(cost: Callable[[float], float], d_true: float, d_noisy: float) -> float:
    """First-order error-impact proxy: |cost'(d_true)| * |d_noisy - d_true|.

    The gradient is a central finite difference with step 1e-6 * d_true.
    Being first-order, it misorders large perturbations — the point the
    baseline exists to demonstrate.
    """
    _check_distances(d_true, d_noisy)
    h = 1e-6 * d_true
    grad = (cost(d_true + h) - cost(d_true - h)) / (2.0 * h)
    return abs(grad) * abs(d_noisy - d_true)


def true_cost_delta(cost: Callable[[float], float], d_true: float, d_noisy: float) -> float:
    """The actual cost change |cost(d_noisy) - cost(d_true)|."""
    _check_distances(d_true, d_noisy)
    return abs(cost(d_noisy) - cost(d_true))


def behavior_divergence(traj_p: Trajectory, traj_q: Trajectory, sigma: float = 1.0) -> float:
    """Trajectory-space divergence: summed per-step Gaussian KL.

    Each step's pose is smoothed into an isotropic Gaussian (mean = (x, y),
    std = sigma); the KL between same-variance Gaussians is
    ||mean difference||^2 / (2 sigma^2), summed over steps. Zero iff the
    pose sequences coincide.
    """
    if sigma <= 0.0:
        raise MetricContractError(f"sigma must be > 0, got {sigma}")
    if traj_p.n_poses != traj_q.n_poses:
        raise MetricContractError(
            f"step-count mismatch: {traj_p.n_poses} vs {traj_q.n_poses}"
        )
    dx = traj_p.x - traj_q.x
    dy = traj_p.y - traj_q.y
    return float(np.sum(dx * dx + dy * dy) / (2.0 * sigma * sigma))
