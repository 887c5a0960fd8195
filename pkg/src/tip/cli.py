"""The ``tip`` command line: scoring, sweeps, decomposition, bound tables.

Commands
--------
- ``tip score GT PRED``     score one (true, perceived) scenario pair
- ``tip sweep DIR``         noise-magnitude sweep over a scenario directory
- ``tip decompose CASE``    1-D worked decompositions (offset, shrink, or a
  custom JSON spec)
- ``tip bound``             concentration-bound tables
- ``tip calibrate``         stopping-distance tables for the shipped presets

Global flags: ``--seed`` (overridden by the TIP_SEED environment variable
when set), ``--samples``, ``--planner`` (default/av1/av2 or a JSON path),
``--agg``, ``--epsilon``, ``--out``.

Exit codes: 0 success; 2 input/schema problems; 3 metric/contract
violations; 4 when some (not all) sweep rows failed. Every command is a
pure function of its inputs and flags: identical invocations write
byte-identical artifacts.
"""

from __future__ import annotations

import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import click

from .errors import MetricContractError, SchemaError, TipError
from .estimator import SampleSpec, required_n, tail_bound
from .hilbert import AnalyticDensity, Domain1D, GridFunction, embed, inner_product
from .planner import PRESET_NAMES, PlannerConfig, load_preset, plan, stopping_distance
from .preference import ActionUtility, behavior_direction, decompose, preference_score
from .rng import stable_u64
from .scenario import NOISE_KINDS, NoiseSpec, inject, load_scenario
from .tipmetric import TipReport, behavior_divergence, tip_score

__all__ = ["main", "RunConfig"]

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_METRIC = 3
EXIT_PARTIAL = 4


@dataclass(frozen=True)
class RunConfig:
    """Shared run parameters resolved from global flags and TIP_SEED."""

    master_seed: int
    samples: int = 10_000
    planner_preset: str = "default"
    aggregation: str = "min"
    out_dir: str = "."
    epsilon: float = 0.5

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise SchemaError(f"samples must be >= 1, got {self.samples}")
        if self.epsilon <= 0:
            raise SchemaError(f"epsilon must be > 0, got {self.epsilon}")

    def planner_config(self) -> PlannerConfig:
        if self.planner_preset == "default":
            return PlannerConfig()
        return load_preset(self.planner_preset)

    def sample_spec(self) -> SampleSpec:
        return SampleSpec(n=self.samples, seed=self.master_seed)


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn):
    """Map library errors to the exit-code contract."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SchemaError as e:
            _fail(EXIT_SCHEMA, str(e))
        except MetricContractError as e:
            _fail(EXIT_METRIC, str(e))
        except TipError as e:  # any other library error counts as a metric error
            _fail(EXIT_METRIC, str(e))
        except OSError as e:
            _fail(EXIT_SCHEMA, str(e))

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


@click.group()
@click.option("--seed", default=0, show_default=True, type=int, help="Master seed (TIP_SEED env overrides).")
@click.option("--samples", default=10_000, show_default=True, type=int, help="Monte-Carlo sample count.")
@click.option("--planner", default="default", show_default=True, help="Planner: default, av1, av2, or a JSON path.")
@click.option("--agg", default="min", show_default=True, help="Aggregation: min, mean, or percentile(k).")
@click.option("--epsilon", default=0.5, show_default=True, type=float, help="Epsilon for the reported bound.")
@click.option("--out", default=".", show_default=True, type=click.Path(), help="Output directory.")
@click.pass_context
def main(ctx, seed, samples, planner, agg, epsilon, out):
    """Decision-impact scoring of perception errors."""
    env_seed = os.environ.get("TIP_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            _fail(EXIT_SCHEMA, f"TIP_SEED must be an integer, got {env_seed!r}")
    try:
        ctx.obj = RunConfig(
            master_seed=seed,
            samples=samples,
            planner_preset=planner,
            aggregation=agg,
            out_dir=out,
            epsilon=epsilon,
        )
    except SchemaError as e:
        _fail(EXIT_SCHEMA, str(e))


# --------------------------------------------------------------------------
# score
# --------------------------------------------------------------------------


@main.command(name="score")
@click.argument("gt", type=click.Path(exists=False))
@click.argument("pred", type=click.Path(exists=False))
@click.pass_obj
@_guard
def cmd_score(run: RunConfig, gt: str, pred: str):
    """Score the decision impact of perceiving PRED when the world is GT."""
    p = load_scenario(gt)
    q = load_scenario(pred)
    config = run.planner_config()
    report = tip_score(p, q, config, run.sample_spec(), run.aggregation, run.epsilon)

    out = Path(run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_csv(out / "score.csv", TipReport.CSV_HEADER, [report.csv_row()])

    click.echo(f"tip_score {report.tip_score:.6f}")


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------


def _noise_for(kind: str, magnitude: float, seed: int) -> NoiseSpec:
    if kind == "miss_detection":
        return NoiseSpec(kind=kind, seed=seed, rate=magnitude)
    if kind == "false_positive":
        count = int(round(magnitude))
        if abs(count - magnitude) > 1e-9:
            raise SchemaError(f"false_positive magnitudes must be integers, got {magnitude}")
        return NoiseSpec(kind=kind, seed=seed, count=count)
    return NoiseSpec(kind=kind, seed=seed, sigma=magnitude)


def _sweep_row(task, config: PlannerConfig, run: RunConfig):
    scenario, kind, magnitude, row_seed = task
    noise = _noise_for(kind, magnitude, row_seed)
    q = inject(scenario, noise)
    spec = SampleSpec(n=run.samples, seed=row_seed)
    report = tip_score(scenario, q, config, spec, run.aggregation, run.epsilon)
    traj_p = plan(_point_mass(scenario), config, spec).best
    traj_q = plan(_point_mass(q), config, spec).best
    div = behavior_divergence(traj_p, traj_q, sigma=1.0)
    return (
        scenario.scenario_id,
        kind,
        f"{magnitude:.9g}",
        row_seed,
        f"{report.tip_score:.9g}",
        f"{div:.9g}",
    )


def _point_mass(scenario):
    from .scenario import PointMassScenario

    return PointMassScenario(scenario)


@main.command(name="sweep")
@click.argument("scenario_dir", type=click.Path(exists=False))
@click.option("--kind", required=True, help=f"Noise kind: one of {', '.join(NOISE_KINDS)}.")
@click.option("--magnitudes", required=True, help="Comma-separated magnitude list (>= 2 values).")
@click.option("--seeds", "seeds_count", default=3, show_default=True, type=int, help="Seeds per (scenario, magnitude).")
@click.option("--workers", default=0, show_default="cpu count", type=int, help="Worker threads (0 = cpu count).")
@click.pass_obj
@_guard
def cmd_sweep(run: RunConfig, scenario_dir: str, kind: str, magnitudes: str, seeds_count: int, workers: int):
    """Sweep one noise kind over magnitudes on every scenario in a directory.

    Writes sweep.csv with one row per (scenario, magnitude, seed), rows in
    that deterministic order regardless of worker completion order. The
    per-row seed is stable_u64(master_seed, scenario_id, magnitude_index,
    seed_index) — part of the public contract, so sweeps reproduce across
    machines.
    """
    if kind not in NOISE_KINDS:
        raise SchemaError(f"noise kind must be one of {NOISE_KINDS}, got {kind!r}")
    try:
        mags = [float(tok) for tok in magnitudes.split(",") if tok.strip() != ""]
    except ValueError as e:
        raise SchemaError(f"bad magnitude list {magnitudes!r}: {e}") from e
    if len(mags) < 2:
        raise SchemaError(f"need at least 2 magnitudes, got {len(mags)}")
    if seeds_count < 1:
        raise SchemaError(f"seeds must be >= 1, got {seeds_count}")

    paths = sorted(Path(scenario_dir).glob("*.json"))
    if not paths:
        raise SchemaError(f"no scenario .json files found in {scenario_dir!r}")
    scenarios = [load_scenario(str(pth)) for pth in paths]

    config = run.planner_config()
    tasks = []
    for scenario in scenarios:
        for mi, mag in enumerate(mags):
            for si in range(seeds_count):
                row_seed = stable_u64(run.master_seed, scenario.scenario_id, mi, si)
                tasks.append((scenario, kind, mag, row_seed))

    n_workers = workers if workers > 0 else (os.cpu_count() or 1)
    rows = []
    failures = 0
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        futures = [pool.submit(_sweep_row, t, config, run) for t in tasks]
        for task, fut in zip(tasks, futures):
            try:
                rows.append(fut.result())
            except TipError as e:
                failures += 1
                scenario, knd, mag, row_seed = task
                click.echo(
                    f"error: sweep row (scenario={scenario.scenario_id}, kind={knd}, "
                    f"magnitude={mag}, seed={row_seed}) failed: {e}",
                    err=True,
                )

    out = Path(run.out_dir)
    _write_csv(
        out / "sweep.csv",
        ("scenario_id", "noise_kind", "magnitude", "seed", "tip", "behavior_divergence"),
        rows,
    )
    click.echo(f"sweep.csv: {len(rows)} rows ({failures} failed)")
    if failures:
        sys.exit(EXIT_PARTIAL)


# --------------------------------------------------------------------------
# decompose
# --------------------------------------------------------------------------


_DEMO_DOMAIN = Domain1D(-3.0, 3.0, 6000)


def _indicator_utility(action_id: str, lo: float, hi: float, inside: float, outside: float, bound_m: float, domain: Domain1D) -> ActionUtility:
    g = GridFunction.from_callable(
        domain, lambda x: inside * ((x >= lo) & (x <= hi)) + outside * ~((x >= lo) & (x <= hi))
    )
    return ActionUtility(action_id=action_id, u=g, bound_m=bound_m)


def _demo_case(name: str):
    """The two 1-D worked decompositions.

    offset: the belief's support is displaced sideways; the error flips the
    advance-vs-hold decision and only 1/3 of its energy matters.
    shrink: the belief's support contracts; the error favours the chosen
    hold action (positive shift).
    """
    domain = _DEMO_DOMAIN
    advance = _indicator_utility("advance", -1.0, 1.0, -10.0, 0.0, 10.0, domain)
    hold = ActionUtility("hold", GridFunction.constant(domain, -5.0), 10.0)
    if name == "offset":
        p = AnalyticDensity.uniform(-3.0, -2.0)
        q = AnalyticDensity.uniform(-1.0, 0.0)
        a_star, alt = advance, hold
    elif name == "shrink":
        p = AnalyticDensity.uniform(-1.5, 1.5)
        q = AnalyticDensity.uniform(-0.5, 0.5)
        a_star, alt = hold, advance
    else:
        raise SchemaError(f"unknown demo case {name!r}")
    return domain, embed(p, domain), embed(q, domain), a_star, alt


def _custom_case(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(f"decompose spec {path!r} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaError("decompose spec must be a JSON object")

    def take(key, mapping=doc, ctx="spec"):
        if key not in mapping:
            raise SchemaError(f"missing required field {ctx}.{key}")
        return mapping[key]

    dom = take("domain")
    domain = Domain1D(take("lo", dom, "domain"), take("hi", dom, "domain"), take("cells", dom, "domain"))

    def density(d, ctx):
        kind = take("kind", d, ctx)
        if kind == "uniform":
            return AnalyticDensity.uniform(take("a", d, ctx), take("b", d, ctx))
        if kind == "truncated_gaussian":
            return AnalyticDensity.truncated_gaussian(
                take("mean", d, ctx), take("sd", d, ctx), lo=domain.lo, hi=domain.hi
            )
        raise SchemaError(f"{ctx}.kind must be uniform or truncated_gaussian, got {kind!r}")

    def utility_fn(d, ctx):
        aid = take("id", d, ctx)
        bound = take("bound_m", d, ctx)
        base = float(d.get("base", 0.0))
        pieces = d.get("pieces", [])
        vals = GridFunction.constant(domain, base).values.copy()
        x = domain.midpoints
        for lo, hi, val in pieces:
            vals[(x >= lo) & (x <= hi)] = val
        return ActionUtility(aid, GridFunction(domain, vals), bound)

    mu_p = embed(density(take("p"), "p"), domain)
    mu_q = embed(density(take("q"), "q"), domain)
    a_star = utility_fn(take("u_star"), "u_star")
    alt = utility_fn(take("u_alt"), "u_alt")
    return domain, mu_p, mu_q, a_star, alt


@main.command(name="decompose")
@click.argument("case")
@click.pass_obj
@_guard
def cmd_decompose(run: RunConfig, case: str):
    """Decompose a 1-D belief error against a behaviour direction.

    CASE is `offset`, `shrink`, or a path to a custom JSON spec. Prints the
    preference scores and energy split; writes decompose.csv with the grid
    columns (x_mid, delta_mu, parallel, perpendicular).
    """
    if case in ("offset", "shrink"):
        domain, mu_p, mu_q, a_star, alt = _demo_case(case)
    else:
        domain, mu_p, mu_q, a_star, alt = _custom_case(case)

    direction = behavior_direction(a_star, alt)
    xi_p = preference_score(mu_p, direction)
    xi_q = preference_score(mu_q, direction)
    result = decompose(mu_p, mu_q, direction)

    out = Path(run.out_dir)
    delta_mu = mu_q - mu_p
    rows = [
        (f"{x:.9g}", f"{dm:.9g}", f"{par:.9g}", f"{perp:.9g}")
        for x, dm, par, perp in zip(
            domain.midpoints, delta_mu.values, result.parallel.values, result.perpendicular.values
        )
    ]
    _write_csv(out / "decompose.csv", ("x_mid", "delta_mu", "parallel", "perpendicular"), rows)

    click.echo(f"a_star {a_star.action_id}")
    click.echo(f"xi_p {xi_p:.6f}")
    click.echo(f"xi_q {xi_q:.6f}")
    click.echo(f"delta_xi {result.delta_xi:.6f}")
    click.echo(f"pce_energy_fraction {result.pce_energy_fraction:.6f}")
    click.echo(f"pie_energy_fraction {1.0 - result.pce_energy_fraction:.6f}")


# --------------------------------------------------------------------------
# bound
# --------------------------------------------------------------------------


@main.command(name="bound")
@click.option("--n", "n_list", required=True, help="Comma-separated sample counts.")
@click.option("--epsilon", "eps_list", required=True, help="Comma-separated epsilon values.")
@click.option("--m", "bound_m", required=True, type=float, help="Almost-sure bound on |value|.")
@click.option("--variance", default=None, type=float, help="Optional variance for the Bernstein refinement.")
@click.pass_obj
@_guard
def cmd_bound(run: RunConfig, n_list: str, eps_list: str, bound_m: float, variance: float | None):
    """Print the concentration-bound table for the given parameters."""
    try:
        ns = [int(tok) for tok in n_list.split(",") if tok.strip()]
        epss = [float(tok) for tok in eps_list.split(",") if tok.strip()]
    except ValueError as e:
        raise SchemaError(f"bad --n/--epsilon list: {e}") from e
    if not ns or not epss:
        raise SchemaError("--n and --epsilon need at least one value each")
    if any(n < 1 for n in ns):
        raise SchemaError("every n must be >= 1")
    if any(e <= 0 for e in epss):
        raise SchemaError("every epsilon must be > 0")
    if bound_m <= 0:
        raise SchemaError(f"--m must be > 0, got {bound_m}")
    if variance is not None and variance < 0:
        raise SchemaError(f"--variance must be >= 0, got {variance}")

    var = variance if variance is not None else bound_m * bound_m
    click.echo("n,epsilon,m,variance,l_value,probability")
    for n in ns:
        for eps in epss:
            b = tail_bound(n, eps, bound_m, var)
            click.echo(
                f"{n},{eps:.9g},{bound_m:.9g},{var:.9g},{b.l_value:.9g},{b.probability:.9g}"
            )


# --------------------------------------------------------------------------
# calibrate
# --------------------------------------------------------------------------


@main.command(name="calibrate")
@click.option("--v0", "v0_list", default="5,10,14,20", show_default=True, help="Comma-separated initial speeds (m/s).")
@click.pass_obj
@_guard
def cmd_calibrate(run: RunConfig, v0_list: str):
    """Print stopping-distance tables for the shipped planner presets."""
    try:
        v0s = [float(tok) for tok in v0_list.split(",") if tok.strip()]
    except ValueError as e:
        raise SchemaError(f"bad --v0 list: {e}") from e
    if any(v < 0 for v in v0s):
        raise SchemaError("every v0 must be >= 0")

    click.echo("preset,v0,accel_min,jerk_min,stopping_distance")
    for name in PRESET_NAMES:
        config = load_preset(name)
        for v0 in v0s:
            d = stopping_distance(v0, config.accel_min, config.jerk_min)
            click.echo(f"{name},{v0:.9g},{config.accel_min:.9g},{config.jerk_min:.9g},{d:.9g}")


if __name__ == "__main__":
    main()
