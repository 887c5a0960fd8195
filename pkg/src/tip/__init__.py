"""tip — a decision-sensitivity metric for perception errors.

Quantifies how much a perception error matters by re-planning: embed the
true and perceived world beliefs, plan under the true belief, and score how
much worse the perceived belief's preferred behaviour would fare. Organised
as:

- :mod:`tip.hilbert`    — belief embeddings on a 1-D grid (densities, inner
  products, expectations, square-integrability checks)
- :mod:`tip.preference` — preference scores between actions and the
  consequential/inconsequential decomposition of a belief error
- :mod:`tip.estimator`  — seeded Monte-Carlo estimation with a Bernstein
  tail bound and sample-size planning
- :mod:`tip.scenario`   — driving-world state, noise injection, JSON schema
- :mod:`tip.planner`    — jerk-limited candidates, driving utility, EUM plan
- :mod:`tip.tipmetric`  — the decision-impact score, decomposition helpers,
  and baselines
- :mod:`tip.cli`        — the ``tip`` command line
"""

from .errors import (
    BoundViolationError,
    DomainMismatchError,
    MetricContractError,
    NotSquareIntegrableError,
    SchemaError,
    TipError,
)
from .rng import normal_block, stable_u64, stream, uniform_block
from .hilbert import (
    AnalyticDensity,
    CallableDensity,
    Domain1D,
    GridFunction,
    MixedDensity,
    dirac_bump,
    embed,
    expectation,
    inner_product,
    is_square_integrable,
    norm,
)
from .preference import (
    ActionUtility,
    BehaviorDirection,
    DecompositionResult,
    behavior_direction,
    decompose,
    in_planning_halfspace,
    preference_score,
)
from .estimator import (
    Density1D,
    PointMass,
    SampleSpec,
    TailBound,
    estimate_delta_xi,
    estimate_delta_xi_terms,
    estimate_eu,
    required_n,
    sample_states,
    tail_bound,
)
from .scenario import (
    EgoState,
    GaussianObjectNoise,
    NoiseSpec,
    PointMassScenario,
    RoadCorridor,
    Scenario,
    ScenarioDistribution,
    WorldObject,
    as_distribution,
    inject,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    synthetic_suite,
)
from .planner import (
    PlannerConfig,
    PlanResult,
    Trajectory,
    UtilityWeights,
    action_id_for,
    evaluate_candidates,
    generate_candidates,
    load_planner_config,
    load_preset,
    plan,
    save_planner_config,
    stopping_distance,
    utility,
    validate_trajectory,
)
from .tipmetric import (
    TipReport,
    aggregate,
    behavior_divergence,
    ipa_score,
    tip_score,
    tip_score_grid,
    true_cost_delta,
)

__version__ = "1.0.0"

__all__ = [
    "TipError",
    "SchemaError",
    "MetricContractError",
    "DomainMismatchError",
    "BoundViolationError",
    "NotSquareIntegrableError",
    "stable_u64",
    "stream",
    "uniform_block",
    "normal_block",
    "Domain1D",
    "GridFunction",
    "AnalyticDensity",
    "CallableDensity",
    "MixedDensity",
    "embed",
    "inner_product",
    "norm",
    "expectation",
    "dirac_bump",
    "is_square_integrable",
    "ActionUtility",
    "BehaviorDirection",
    "behavior_direction",
    "preference_score",
    "in_planning_halfspace",
    "DecompositionResult",
    "decompose",
    "SampleSpec",
    "Density1D",
    "PointMass",
    "sample_states",
    "estimate_eu",
    "estimate_delta_xi",
    "estimate_delta_xi_terms",
    "TailBound",
    "tail_bound",
    "required_n",
    "WorldObject",
    "EgoState",
    "RoadCorridor",
    "Scenario",
    "NoiseSpec",
    "inject",
    "GaussianObjectNoise",
    "PointMassScenario",
    "ScenarioDistribution",
    "as_distribution",
    "scenario_to_dict",
    "scenario_from_dict",
    "save_scenario",
    "load_scenario",
    "synthetic_suite",
    "PlannerConfig",
    "UtilityWeights",
    "Trajectory",
    "PlanResult",
    "action_id_for",
    "evaluate_candidates",
    "generate_candidates",
    "utility",
    "validate_trajectory",
    "plan",
    "stopping_distance",
    "load_planner_config",
    "save_planner_config",
    "load_preset",
    "TipReport",
    "tip_score",
    "tip_score_grid",
    "aggregate",
    "ipa_score",
    "true_cost_delta",
    "behavior_divergence",
    "__version__",
]
