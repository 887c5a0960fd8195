"""Finite-grid L2 embeddings of probability densities on a compact interval.

A probability measure p on a compact 1-D domain is represented by its density
sampled at cell midpoints (a :class:`GridFunction`). With the midpoint
quadrature rule

    <f, g> = sum_i f(m_i) g(m_i) dx,

the embedding mu_p of p satisfies  E_p[g] = <mu_p, g>  exactly for functions
that are piecewise constant on the grid, and to O(dx^2) otherwise. All
downstream preference/decomposition math is plain Hilbert-space geometry on
these arrays.

Conventions:

* ``embed`` always renormalises so the embedded mass is 1 up to float
  round-off (well within the 1e-6 contract); a density whose support is not
  contained in the domain is rejected.
* Point masses are represented by narrow normalised indicator bumps
  (:func:`dirac_bump`); expectations of smooth functions against a bump of
  radius r converge at rate O(r^2) + O(r) as r shrinks.
* ``is_square_integrable`` is a refinement diagnostic: it watches the
  midpoint estimate of the integral of f^2 under repeated grid doubling and
  declares divergence only when the estimate keeps growing by more than 10%
  at every refinement. Bounded densities converge; integrable-but-not-
  square-integrable spikes like x^(-1/2) keep growing logarithmically and
  are flagged. A very narrow square-integrable spike can be misflagged at a
  coarse base resolution — the base is a parameter for that reason.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DomainMismatchError, MetricContractError, NotSquareIntegrableError

__all__ = [
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
    "CONVERGENT",
    "DIVERGENT",
]

CONVERGENT = "CONVERGENT"
DIVERGENT = "DIVERGENT"


# --------------------------------------------------------------------------
# Domain and grid functions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Domain1D:
    """A compact interval [lo, hi] split into ``cells`` equal cells."""

    lo: float
    hi: float
    cells: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise MetricContractError("domain endpoints must be finite")
        if not self.hi > self.lo:
            raise MetricContractError(
                f"domain requires hi > lo, got [{self.lo}, {self.hi}]"
            )
        if int(self.cells) != self.cells or self.cells < 1:
            raise MetricContractError(f"cells must be a positive integer, got {self.cells}")

    @property
    def cell_width(self) -> float:
        return (self.hi - self.lo) / self.cells

    @property
    def midpoints(self) -> np.ndarray:
        dx = self.cell_width
        return self.lo + dx * (np.arange(self.cells) + 0.5)

    def contains_interval(self, a: float, b: float, tol: float = 1e-12) -> bool:
        span = self.hi - self.lo
        return a >= self.lo - tol * span and b <= self.hi + tol * span


def _check_same_domain(f: "GridFunction", g: "GridFunction") -> None:
    if f.domain != g.domain:
        raise DomainMismatchError(
            f"grid functions live on different domains: {f.domain} vs {g.domain}"
        )


@dataclass(frozen=True)
class GridFunction:
    """Midpoint samples of a function on a :class:`Domain1D`."""

    domain: Domain1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] != self.domain.cells:
            raise MetricContractError(
                f"values must be a 1-D array of length {self.domain.cells}, "
                f"got shape {np.shape(self.values)}"
            )
        if not np.all(np.isfinite(v)):
            raise MetricContractError("grid function values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, domain: Domain1D, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        vals = np.asarray(fn(domain.midpoints), dtype=np.float64)
        vals = np.broadcast_to(vals, (domain.cells,)).copy()
        return cls(domain, vals)

    @classmethod
    def constant(cls, domain: Domain1D, value: float) -> "GridFunction":
        return cls(domain, np.full(domain.cells, float(value)))

    # -- arithmetic (identical domains only) --------------------------------

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_domain(self, other)
        return GridFunction(self.domain, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_domain(self, other)
        return GridFunction(self.domain, self.values - other.values)

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.domain, -self.values)

    def __mul__(self, scalar: float) -> "GridFunction":
        if isinstance(scalar, GridFunction):
            raise TypeError("use pointwise_product() for function*function")
        return GridFunction(self.domain, self.values * float(scalar))

    __rmul__ = __mul__

    def pointwise_product(self, other: "GridFunction") -> "GridFunction":
        _check_same_domain(self, other)
        return GridFunction(self.domain, self.values * other.values)


# --------------------------------------------------------------------------
# Densities
# --------------------------------------------------------------------------

_KINDS = ("uniform", "truncated-gaussian", "piecewise-constant", "mixture")


@dataclass(frozen=True)
class AnalyticDensity:
    """A closed-form density; construct via the factory classmethods."""

    kind: str
    params: dict = field(repr=True)

    # -- factories ----------------------------------------------------------

    @classmethod
    def uniform(cls, a: float, b: float) -> "AnalyticDensity":
        if not b > a:
            raise MetricContractError(f"uniform requires b > a, got [{a}, {b}]")
        return cls("uniform", {"a": float(a), "b": float(b)})

    @classmethod
    def truncated_gaussian(
        cls, mean: float, sd: float, lo: float | None = None, hi: float | None = None
    ) -> "AnalyticDensity":
        if not sd > 0:
            raise MetricContractError(f"truncated_gaussian requires sd > 0, got {sd}")
        if (lo is None) != (hi is None):
            raise MetricContractError("give both truncation bounds or neither")
        if lo is not None and not hi > lo:
            raise MetricContractError("truncation bounds require hi > lo")
        return cls(
            "truncated-gaussian",
            {"mean": float(mean), "sd": float(sd), "lo": lo, "hi": hi},
        )

    @classmethod
    def piecewise_constant(
        cls, breakpoints: Sequence[float], levels: Sequence[float]
    ) -> "AnalyticDensity":
        bp = [float(x) for x in breakpoints]
        lv = [float(x) for x in levels]
        if len(bp) != len(lv) + 1:
            raise MetricContractError(
                f"need len(breakpoints) == len(levels)+1, got {len(bp)} and {len(lv)}"
            )
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise MetricContractError("breakpoints must be strictly increasing")
        if any(l < 0 for l in lv):
            raise MetricContractError("levels must be non-negative")
        if all(l == 0 for l in lv):
            raise MetricContractError("at least one level must be positive")
        return cls("piecewise-constant", {"breakpoints": bp, "levels": lv})

    @classmethod
    def mixture(
        cls, weights: Sequence[float], components: Sequence["AnalyticDensity"]
    ) -> "AnalyticDensity":
        w = [float(x) for x in weights]
        comps = list(components)
        if len(w) != len(comps) or not comps:
            raise MetricContractError("mixture needs matching, non-empty weights/components")
        if any(x <= 0 for x in w):
            raise MetricContractError("mixture weights must be positive")
        if abs(sum(w) - 1.0) > 1e-9:
            raise MetricContractError(f"mixture weights must sum to 1, got {sum(w)}")
        for c in comps:
            if not isinstance(c, AnalyticDensity):
                raise MetricContractError("mixture components must be AnalyticDensity")
            if c.kind == "mixture":
                raise MetricContractError("nested mixtures are not supported")
        return cls("mixture", {"weights": w, "components": comps})

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise MetricContractError(f"unknown density kind {self.kind!r}")

    # -- introspection ------------------------------------------------------

    def support(self) -> tuple[float, float] | None:
        """The smallest closed interval carrying all mass (None = unbounded)."""
        if self.kind == "uniform":
            return (self.params["a"], self.params["b"])
        if self.kind == "truncated-gaussian":
            lo, hi = self.params["lo"], self.params["hi"]
            return None if lo is None else (lo, hi)
        if self.kind == "piecewise-constant":
            bp = self.params["breakpoints"]
            return (bp[0], bp[-1])
        spans = [c.support() for c in self.params["components"]]
        if any(s is None for s in spans):
            return None
        return (min(s[0] for s in spans), max(s[1] for s in spans))

    def _bounds(self, domain_lo: float, domain_hi: float) -> tuple[float, float]:
        sup = self.support()
        return sup if sup is not None else (domain_lo, domain_hi)

    def pdf_raw(self, x: np.ndarray, domain: Domain1D | None = None) -> np.ndarray:
        """Un-normalised density values at x (normalisation happens in embed)."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "uniform":
            a, b = self.params["a"], self.params["b"]
            return np.where((x >= a) & (x <= b), 1.0 / (b - a), 0.0)
        if self.kind == "truncated-gaussian":
            m, sd = self.params["mean"], self.params["sd"]
            lo, hi = self.params["lo"], self.params["hi"]
            if lo is None:
                if domain is None:
                    raise MetricContractError(
                        "truncated_gaussian without explicit bounds needs a domain"
                    )
                lo, hi = domain.lo, domain.hi
            z = (x - m) / sd
            vals = np.exp(-0.5 * z * z) / (sd * math.sqrt(2 * math.pi))
            return np.where((x >= lo) & (x <= hi), vals, 0.0)
        if self.kind == "piecewise-constant":
            bp = np.asarray(self.params["breakpoints"])
            lv = np.asarray(self.params["levels"])
            idx = np.searchsorted(bp, x, side="right") - 1
            inside = (idx >= 0) & (idx < len(lv)) & (x <= bp[-1])
            return np.where(inside, lv[np.clip(idx, 0, len(lv) - 1)], 0.0)
        # mixture
        out = np.zeros_like(x)
        for w, c in zip(self.params["weights"], self.params["components"]):
            out += w * c.pdf_raw(x, domain)
        return out

    # -- sampling (inverse CDF; fixed budget of 2 uniforms per sample) ------

    def sample_from_uniforms(self, u: np.ndarray) -> np.ndarray:
        """Map an (n, 2) array of U[0,1) draws to n samples of this density.

        Every density family consumes the same fixed budget (2 uniforms per
        sample; most families use only the first), so paired comparisons of
        *different* families stay index-aligned.
        """
        u = np.asarray(u, dtype=np.float64)
        if u.ndim != 2 or u.shape[1] < 2:
            raise MetricContractError("sample_from_uniforms expects an (n, >=2) array")
        return self._icdf(u[:, 0], u[:, 1])

    def _icdf(self, u0: np.ndarray, u1: np.ndarray) -> np.ndarray:
        if self.kind == "uniform":
            a, b = self.params["a"], self.params["b"]
            return a + u0 * (b - a)
        if self.kind == "truncated-gaussian":
            m, sd = self.params["mean"], self.params["sd"]
            lo, hi = self.params["lo"], self.params["hi"]
            if lo is None:
                raise MetricContractError(
                    "sampling a truncated_gaussian requires explicit bounds"
                )
            ca = ndtr((lo - m) / sd)
            cb = ndtr((hi - m) / sd)
            return m + sd * ndtri(ca + u0 * (cb - ca))
        if self.kind == "piecewise-constant":
            bp = np.asarray(self.params["breakpoints"])
            lv = np.asarray(self.params["levels"])
            seg_mass = lv * np.diff(bp)
            cum = np.concatenate([[0.0], np.cumsum(seg_mass)])
            total = cum[-1]
            t = u0 * total
            idx = np.clip(np.searchsorted(cum, t, side="right") - 1, 0, len(lv) - 1)
            # levels may contain zero-mass segments; searchsorted skips them
            frac = (t - cum[idx]) / np.where(seg_mass[idx] > 0, seg_mass[idx], 1.0)
            return bp[idx] + frac * (bp[idx + 1] - bp[idx])
        # mixture: u0 picks the component, u1 is the component's own draw
        w = np.asarray(self.params["weights"])
        cum = np.concatenate([[0.0], np.cumsum(w)])
        comp_idx = np.clip(np.searchsorted(cum, u0, side="right") - 1, 0, len(w) - 1)
        out = np.empty_like(u0)
        for i, comp in enumerate(self.params["components"]):
            mask = comp_idx == i
            if np.any(mask):
                out[mask] = comp._icdf(u1[mask], np.zeros(int(mask.sum())))
        return out


@dataclass(frozen=True)
class CallableDensity:
    """A density given only as a callable pdf on a stated support interval.

    Unlike the analytic families (which are bounded, hence automatically
    square-integrable), a callable density is run through the
    :func:`is_square_integrable` diagnostic before embedding and rejected if
    diagnosed divergent.
    """

    pdf: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]

    def __post_init__(self) -> None:
        a, b = self.support
        if not b > a:
            raise MetricContractError("CallableDensity support requires hi > lo")

    def pdf_raw(self, x: np.ndarray, domain: Domain1D | None = None) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        a, b = self.support
        vals = np.asarray(self.pdf(x), dtype=np.float64)
        return np.where((x >= a) & (x <= b), vals, 0.0)


@dataclass(frozen=True)
class MixedDensity:
    """lam * continuous + sum_i w_i * delta(a_i): a density with point masses.

    ``atoms`` is a list of (location, weight) pairs. Weights satisfy
    lam + sum_i w_i == 1 with lam in (0, 1]. Embedding replaces every atom
    with a normalised indicator bump of radius ``bump_radius`` (default: 4
    cell widths of the target domain).
    """

    continuous: AnalyticDensity
    lam: float
    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not (0.0 < self.lam <= 1.0):
            raise MetricContractError(f"lam must be in (0, 1], got {self.lam}")
        total = self.lam + sum(w for _, w in self.atoms)
        if any(w <= 0 for _, w in self.atoms):
            raise MetricContractError("atom weights must be positive")
        if abs(total - 1.0) > 1e-9:
            raise MetricContractError(f"lam + atom weights must sum to 1, got {total}")


# --------------------------------------------------------------------------
# Core operations
# --------------------------------------------------------------------------


def inner_product(f: GridFunction, g: GridFunction) -> float:
    """Midpoint-rule L2 inner product <f, g>."""
    _check_same_domain(f, g)
    return float(np.dot(f.values, g.values) * f.domain.cell_width)


def norm(f: GridFunction) -> float:
    """L2 norm ||f|| = sqrt(<f, f>)."""
    return math.sqrt(max(0.0, inner_product(f, f)))


def expectation(mu: GridFunction, g: GridFunction) -> float:
    """E_p[g] = <mu_p, g> for an embedded density mu_p."""
    return inner_product(mu, g)


def dirac_bump(a: float, r: float, domain: Domain1D) -> GridFunction:
    """A normalised indicator bump of radius r at location a (unit mass).

    Preconditions: r >= one cell width, and [a-r, a+r] inside the domain.
    """
    dx = domain.cell_width
    if r < dx:
        raise MetricContractError(
            f"bump radius {r} is below one cell width {dx}; refine the grid"
        )
    if not domain.contains_interval(a - r, a + r):
        raise MetricContractError(
            f"bump support [{a - r}, {a + r}] exceeds the domain [{domain.lo}, {domain.hi}]"
        )
    m = domain.midpoints
    sel = (m >= a - r) & (m <= a + r)
    count = int(np.count_nonzero(sel))
    if count == 0:  # cannot happen given r >= dx, but keep the contract explicit
        raise MetricContractError("bump selects no cells")
    vals = np.zeros(domain.cells)
    vals[sel] = 1.0 / (count * dx)
    return GridFunction(domain, vals)


def embed(
    density: AnalyticDensity | CallableDensity | MixedDensity,
    domain: Domain1D,
    bump_radius: float | None = None,
) -> GridFunction:
    """Embed a probability density as a unit-mass grid function.

    Raises if the density's support is not contained in the domain, or (for
    callable densities) if the square-integrability diagnostic flags it.
    """
    if isinstance(density, MixedDensity):
        r = bump_radius if bump_radius is not None else 4.0 * domain.cell_width
        out = embed(density.continuous, domain) * density.lam
        for loc, w in density.atoms:
            out = out + dirac_bump(loc, r, domain) * w
        return out

    sup = density.support() if isinstance(density, AnalyticDensity) else density.support
    if isinstance(density, CallableDensity):
        verdict = is_square_integrable(density)
        if verdict == DIVERGENT:
            raise NotSquareIntegrableError(
                "density diagnosed as not square-integrable on its support; "
                "it cannot be embedded on a finite grid"
            )
    if sup is not None and not domain.contains_interval(sup[0], sup[1]):
        raise MetricContractError(
            f"density support [{sup[0]}, {sup[1]}] is not contained in the "
            f"domain [{domain.lo}, {domain.hi}]"
        )

    vals = density.pdf_raw(domain.midpoints, domain)
    mass = float(np.sum(vals) * domain.cell_width)
    if not (math.isfinite(mass) and mass > 0):
        raise MetricContractError(f"density mass on the domain is {mass}; cannot embed")
    return GridFunction(domain, vals / mass)


def is_square_integrable(
    density: AnalyticDensity | CallableDensity | Callable[[np.ndarray], np.ndarray],
    support: tuple[float, float] | None = None,
    base_cells: int = 8,
    refinements: int = 4,
) -> str:
    """Refinement diagnostic: CONVERGENT or DIVERGENT for the L2 norm of a pdf.

    Evaluates the midpoint estimate of integral(f^2) at base_cells * 2^k for
    k = 0..refinements and returns DIVERGENT iff the estimate grows by more
    than 10% at *every* refinement step.
    """
    if refinements < 4:
        raise MetricContractError("need at least 4 refinement levels")
    if isinstance(density, AnalyticDensity):
        sup = density.support()
        if sup is None and support is None:
            raise MetricContractError("unbounded density: pass an explicit support")
        a, b = sup if sup is not None else support
        fn = lambda x: density.pdf_raw(x)  # noqa: E731
        if density.kind == "truncated-gaussian" and density.params["lo"] is None:
            dom = Domain1D(a, b, 1)
            fn = lambda x: density.pdf_raw(x, dom)  # noqa: E731
    elif isinstance(density, CallableDensity):
        a, b = density.support
        fn = density.pdf_raw
    else:
        if support is None:
            raise MetricContractError("callable density needs an explicit support")
        a, b = support
        fn = density

    estimates = []
    cells = int(base_cells)
    for _ in range(refinements + 1):
        dom = Domain1D(a, b, cells)
        v = np.asarray(fn(dom.midpoints), dtype=np.float64)
        if not np.all(np.isfinite(v)):
            return DIVERGENT
        estimates.append(float(np.sum(v * v) * dom.cell_width))
        cells *= 2

    growing = 0
    for prev, cur in zip(estimates, estimates[1:]):
        if prev <= 0:
            return CONVERGENT if cur <= 0 else DIVERGENT
        if (cur - prev) / prev > 0.10:
            growing += 1
    return DIVERGENT if growing == refinements else CONVERGENT
