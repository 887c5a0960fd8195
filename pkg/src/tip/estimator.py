"""Monte-Carlo estimation of expected utilities with concentration bounds.

Sampling contract
-----------------
A *distribution* is anything with a ``sample(n, seed, stream=0)`` method that
returns n states deterministically (bit-identical for equal arguments). The
``stream`` argument selects a substream: paired estimation passes the same
stream to both distributions (common random numbers), so two *identical*
distributions produce identical samples and their paired difference cancels
exactly; ``independent=True`` uses streams 0 and 1, matching the tagged
(0 = first, 1 = second) substream scheme.

Utilities are batch callables: ``utility(states) -> array of floats`` with a
declared almost-sure bound M; any sampled value outside [-M, M] is a
contract violation that names the offending sample index.

Tail bound
----------
For a mean of n i.i.d. terms bounded by M with variance proxy
``l = min(M^2, variance + M*eps/3)`` (Hoeffding / Bernstein, whichever is
tighter), the deviation probability is bounded by

    P(|mean - E| > eps) <= min(1, 2 exp(-n eps^2 / (2 l))).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import BoundViolationError, MetricContractError
from .hilbert import AnalyticDensity
from .rng import uniform_block

__all__ = [
    "SampleSpec",
    "TailBound",
    "Distribution",
    "Density1D",
    "PointMass",
    "sample_states",
    "estimate_eu",
    "estimate_delta_xi",
    "estimate_delta_xi_terms",
    "tail_bound",
    "required_n",
]

_U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class SampleSpec:
    """How many Monte-Carlo samples to draw and from which master seed."""

    n: int
    seed: int

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise MetricContractError(f"sample count must be a positive integer, got {self.n}")
        if int(self.seed) != self.seed or not (0 <= self.seed <= _U64_MAX):
            raise MetricContractError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


class Distribution(Protocol):
    """Deterministic sampleable distribution over planner states."""

    def sample(self, n: int, seed: int, stream: int = 0) -> Sequence: ...


@dataclass(frozen=True)
class Density1D:
    """Adapter: a 1-D analytic density as a sampleable distribution.

    Every 1-D family consumes a fixed budget of 2 uniforms per sample, so
    paired comparisons across different families stay index-aligned.
    """

    density: AnalyticDensity

    def sample(self, n: int, seed: int, stream: int = 0) -> np.ndarray:
        u = uniform_block(seed, ("density1d", stream), n, 2)
        return self.density.sample_from_uniforms(u)


@dataclass(frozen=True)
class PointMass:
    """A degenerate distribution: every sample is the same state."""

    value: object

    def sample(self, n: int, seed: int, stream: int = 0):
        if isinstance(self.value, (int, float, np.floating)):
            return np.full(n, float(self.value))
        return [self.value] * n


def sample_states(distribution: Distribution, spec: SampleSpec, stream: int = 0):
    """Draw ``spec.n`` states; bit-identical for equal (distribution, spec)."""
    return distribution.sample(spec.n, spec.seed, stream=stream)


def _eval_utility(utility: Callable, states) -> np.ndarray:
    vals = np.asarray(utility(states), dtype=np.float64)
    n = len(states)
    if vals.shape != (n,):
        raise MetricContractError(
            f"utility returned shape {vals.shape}, expected ({n},); "
            "utilities must be batch callables"
        )
    return vals


def _check_bound(vals: np.ndarray, bound_m: float, label: str) -> None:
    bad = np.nonzero(~(np.abs(vals) <= bound_m * (1 + 1e-12)))[0]
    if bad.size:
        i = int(bad[0])
        raise BoundViolationError(
            f"{label} produced |{vals[i]}| at sample index {i}, exceeding the "
            f"declared bound {bound_m}"
        )


def estimate_eu(utility: Callable, states, bound_m: float) -> float:
    """Sample mean of the utility over the states, enforcing the bound."""
    if len(states) == 0:
        raise MetricContractError("cannot estimate an expectation from zero states")
    vals = _eval_utility(utility, states)
    _check_bound(vals, bound_m, "utility")
    return float(np.mean(vals))


def estimate_delta_xi_terms(
    p: Distribution,
    q: Distribution,
    u_star: Callable,
    u_alt: Callable,
    spec: SampleSpec,
    bound_m: float,
    independent: bool = False,
) -> np.ndarray:
    """Per-sample paired terms of the preference-shift estimator.

    term_i = [U*(s_q_i) - U_a(s_q_i)] - [U*(s_p_i) - U_a(s_p_i)]

    With paired streams (the default), q == p (same distribution, same seed)
    yields identically zero terms: both sides evaluate the same states.
    """
    s_p = sample_states(p, spec, stream=0)
    s_q = sample_states(q, spec, stream=1 if independent else 0)

    star_q = _eval_utility(u_star, s_q)
    alt_q = _eval_utility(u_alt, s_q)
    star_p = _eval_utility(u_star, s_p)
    alt_p = _eval_utility(u_alt, s_p)
    for tag, vals in (("u_star", star_q), ("u_alt", alt_q), ("u_star", star_p), ("u_alt", alt_p)):
        _check_bound(vals, bound_m, tag)

    return (star_q - alt_q) - (star_p - alt_p)


def estimate_delta_xi(
    p: Distribution,
    q: Distribution,
    u_star: Callable,
    u_alt: Callable,
    spec: SampleSpec,
    bound_m: float,
    independent: bool = False,
) -> float:
    """Monte-Carlo estimate of the preference shift between two actions."""
    return float(np.mean(estimate_delta_xi_terms(p, q, u_star, u_alt, spec, bound_m, independent)))


@dataclass(frozen=True)
class TailBound:
    """Deviation bound for a mean of n bounded i.i.d. terms."""

    n: int
    epsilon: float
    m: float
    variance: float
    l_value: float
    probability: float

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "epsilon": self.epsilon,
            "m": self.m,
            "variance": self.variance,
            "l_value": self.l_value,
            "probability": self.probability,
        }


def tail_bound(n: int, epsilon: float, m: float, variance: float) -> TailBound:
    """P(|mean - E| > eps) <= min(1, 2 exp(-n eps^2 / (2 l))).

    l = min(m^2, variance + m*eps/3): the tighter of the Hoeffding and
    Bernstein variance proxies. As eps -> 0+ the bound clamps to 1.
    """
    if int(n) != n or n < 1:
        raise MetricContractError(f"n must be a positive integer, got {n}")
    if epsilon < 0:
        raise MetricContractError(f"epsilon must be non-negative, got {epsilon}")
    if m <= 0:
        raise MetricContractError(f"bound m must be positive, got {m}")
    if variance < 0:
        raise MetricContractError(f"variance must be non-negative, got {variance}")

    l_value = min(m * m, variance + m * epsilon / 3.0)
    if epsilon == 0.0 or l_value == 0.0:
        probability = 1.0 if epsilon == 0.0 else 0.0
        if l_value == 0.0 and epsilon > 0.0:
            probability = 0.0  # degenerate terms: no deviation possible
    else:
        probability = min(1.0, 2.0 * math.exp(-(n * epsilon * epsilon) / (2.0 * l_value)))
    return TailBound(
        n=int(n), epsilon=float(epsilon), m=float(m), variance=float(variance),
        l_value=float(l_value), probability=float(probability),
    )


def required_n(epsilon: float, delta: float, m: float, variance: float) -> int:
    """Smallest n whose tail bound at eps is <= delta.

    Closed form  n0 = ceil(2 l ln(2/delta) / eps^2)  with an exactness sweep:
    the returned n satisfies bound(n) <= delta and (n == 1 or
    bound(n-1) > delta).
    """
    if epsilon <= 0:
        raise MetricContractError(f"epsilon must be positive, got {epsilon}")
    if not (0 < delta < 1):
        raise MetricContractError(f"delta must lie in (0, 1), got {delta}")

    l_value = min(m * m, variance + m * epsilon / 3.0)
    if l_value == 0.0 or tail_bound(1, epsilon, m, variance).probability <= delta:
        return 1
    n = max(1, math.ceil(2.0 * l_value * math.log(2.0 / delta) / (epsilon * epsilon)))
    while n > 1 and tail_bound(n - 1, epsilon, m, variance).probability <= delta:
        n -= 1
    while tail_bound(n, epsilon, m, variance).probability > delta:
        n += 1
    return int(n)
