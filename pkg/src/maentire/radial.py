"""Radial comparison solutions and mass bookkeeping.

The central object is the convex radial function

    w_c(r) = int_0^r ( int_0^s 2 t f(t) dt + 2c )^(1/2) ds,      c >= 0,

whose Monge-Ampere measure is 2*pi*c*delta_0 + f dx for a radial density f.
All evaluations go through the stable gap form

    w_c(r) - r^2/2 = int_0^r (G(s) + 2c) / (sqrt(s^2 + G(s) + 2c) + s) ds,

with G(s) = int_0^s 2 t (f(t) - 1) dt available in closed form from the
profile, so absolute accuracy survives radii up to 1e8 where w_c itself is
5e15.  The far field obeys

    w_c(r) = r^2/2 + (dlow + c) log r + O(1),

with dlow = lim G / 2 the mass excess of the profile, provided beta > 2.

The log coefficient of a full measure is

    d = (1/2pi) lim_R ( nu(B_R) - pi R^2 )
      = (sum_i m_i + int_Omega (compact - 1) + int_{R^2 \\ Omega} (f - 1)) / 2pi,

and the cone excess cbar = d - dlow makes w_cbar the comparison barrier whose
vertex cone carries exactly the mass surplus of nu over its lower envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from .errors import (
    DivergentTailError,
    InternalConsistencyError,
    UnsupportedDimensionError,
    UsageError,
)
from .measures import TWO_PI, RadialProfile, SourceMeasure, radialize

_QUAD_OPTS = dict(epsrel=1e-12, limit=300)


def _gap_integrand(profile: RadialProfile, c: float):
    two_c = 2.0 * c

    def g(s):
        s = np.asarray(s, dtype=float)
        q = profile.mass_excess(s) + two_c
        under = s * s + q
        if np.any(under < -1e-12):
            raise InternalConsistencyError(
                "inner integrand of the radial solution went negative for a valid profile"
            )
        under = np.maximum(under, 0.0)
        return q / (np.sqrt(under) + s)

    return g


def radial_gap(profile: RadialProfile, c: float, r: float, tol: float = 1e-10) -> float:
    """w_c(r) - r^2/2, by adaptive quadrature of the stable difference form."""
    if c < 0:
        raise UsageError("cone mass c must be nonnegative")
    if r < 0:
        raise UsageError("radius must be nonnegative")
    if r == 0.0:
        return 0.0
    g = _gap_integrand(profile, c)
    rt = profile.tail_radius
    split = min(r, rt) if rt > 0 else min(r, 1.0)
    total = 0.0
    if split > 0:
        pts = [p for p in profile.breakpoints() if 0 < p < split]
        val, _ = quad(g, 0.0, split, epsabs=tol, points=pts or None, **_QUAD_OPTS)
        total += val
    if r > split:
        # log substitution keeps the slowly decaying tail cheap out to huge radii
        lo, hi = math.log(max(split, 1e-12)), math.log(r)
        val, _ = quad(lambda u: g(math.exp(u)) * math.exp(u), lo, hi, epsabs=tol, **_QUAD_OPTS)
        total += val
    return total


def radial_slope(profile: RadialProfile, c: float, r: float) -> float:
    """d/dr of w_c: the square root of the accumulated mass at r."""
    under = r * r + profile.mass_excess(r) + 2.0 * c
    if under < -1e-12:
        raise InternalConsistencyError("negative mass under the square root")
    return math.sqrt(max(under, 0.0))


def radial_solution(profile: RadialProfile, c: float, r: float, tol: float = 1e-10) -> tuple[float, float]:
    """Value and slope of the radial comparison solution w_c at radius r."""
    gap = radial_gap(profile, c, r, tol=tol)
    return r * r / 2.0 + gap, radial_slope(profile, c, r)


def lower_log_coefficient(profile: RadialProfile) -> float:
    """dlow = int_0^inf r (f(r) - 1) dr, closed form from the profile."""
    return 0.5 * profile.excess_limit(2)


def expansion_gap(profile: RadialProfile, c: float, r: float, tol: float = 1e-10) -> float:
    """w_c(r) - r^2/2 - (dlow + c) log r; bounded in r exactly when beta > 2."""
    dlow = lower_log_coefficient(profile)
    return radial_gap(profile, c, r, tol=tol) - (dlow + c) * math.log(r)


def tail_remainder(profile: RadialProfile, c: float, s) -> np.ndarray:
    """h(s) = sqrt(inner mass + 2c) - s - (dlow + c)/s, evaluated stably.

    Decays like s^(-min(beta-1, 3)); computed from exact closed forms so the
    cancellation of the three O(s) terms costs no precision.
    """
    s = np.asarray(s, dtype=float)
    p = lower_log_coefficient(profile) + c
    q = profile.mass_excess(s) + 2.0 * c  # -> 2p as s -> inf
    root = np.sqrt(s * s + q)
    # h = (q - 2p)/(root + s) + p * (2/(root+s) - 1/s) ; second term = p (2s - root - s)/(s(root+s))
    first = (q - 2.0 * p) / (root + s)
    second = p * (s - root) / (s * (root + s))
    return first + second


def measured_decay_exponent(profile: RadialProfile, c: float, radii) -> float:
    """Log-log regression slope of |h(s)| against s (sign flipped)."""
    radii = np.asarray(radii, dtype=float)
    h = np.abs(tail_remainder(profile, c, radii))
    if np.any(h == 0):
        return math.inf
    coef = np.polyfit(np.log(radii), np.log(h), 1)
    return -float(coef[0])


# ---------------------------------------------------------------------------
# dense evaluation table
# ---------------------------------------------------------------------------


class RadialSolutionTable:
    """Vectorized w_c evaluation on [0, r_max] via cumulative panel quadrature.

    Panel edges are linear inside the tail radius and geometric beyond; each
    panel contributes a fixed-order Gauss-Legendre integral of the gap
    integrand and values interpolate with a cubic Hermite spline whose slopes
    are exact.  Cross-checked against the adaptive scalar route in the tests.
    """

    _GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(12)

    def __init__(self, profile: RadialProfile, c: float, r_max: float, panels: int = 2048):
        if c < 0:
            raise UsageError("cone mass c must be nonnegative")
        self.profile = profile
        self.c = float(c)
        self.r_max = float(r_max)
        rt = profile.tail_radius
        split = min(r_max, rt) if rt > 0 else min(r_max, 1.0)
        inner = np.linspace(0.0, split, max(panels // 2, 64))
        edges = [inner]
        if r_max > split:
            outer = np.geomspace(max(split, 1e-9), r_max, max(panels // 2, 64))
            edges.append(outer[1:])
        grid = np.unique(np.concatenate(edges + [np.asarray(profile.breakpoints())]))
        grid = grid[(grid >= 0) & (grid <= r_max)]
        if grid[0] > 0:
            grid = np.concatenate([[0.0], grid])
        g = _gap_integrand(profile, c)
        a, b = grid[:-1], grid[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        samples = mid[:, None] + half[:, None] * self._GAUSS_NODES[None, :]
        vals = g(samples.ravel()).reshape(samples.shape)
        panel_ints = (vals * self._GAUSS_WEIGHTS[None, :]).sum(axis=1) * half
        gaps = np.concatenate([[0.0], np.cumsum(panel_ints)])
        self._spline = CubicHermiteSpline(grid, gaps, g(grid))

    def gap(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r > self.r_max * (1 + 1e-12)):
            raise UsageError("radius beyond table range")
        return self._spline(np.clip(r, 0.0, self.r_max))

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return r * r / 2.0 + self.gap(r)

    def slope(self, r):
        r = np.asarray(r, dtype=float)
        under = r * r + self.profile.mass_excess(r) + 2.0 * self.c
        return np.sqrt(np.maximum(under, 0.0))


# ---------------------------------------------------------------------------
# log coefficient and cone excess
# ---------------------------------------------------------------------------


def log_coefficient(measure: SourceMeasure, angle_count: int | None = None) -> float:
    """d = (1/2pi)(atom mass + int_Omega (compact-1) + int_outside (f-1))."""
    if measure.dimension != 2:
        raise UnsupportedDimensionError("the log coefficient is a planar quantity")
    if measure.tail_beta <= 2.0:
        raise DivergentTailError("log coefficient diverges for tail exponent <= 2")
    kw = {} if angle_count is None else {"angle_count": angle_count}
    compact = measure.compact_integral(**kw) - math.pi * measure.omega_radius**2
    outside = measure.annulus_excess(**kw) + measure.tail_excess_integral(**kw)
    return (measure.atom_total + compact + outside) / TWO_PI


def cone_excess(
    measure: SourceMeasure,
    profile: RadialProfile | None = None,
    sample_count: int = 256,
    angle_count: int | None = None,
    identity_tol: float = 1e-8,
) -> float:
    """cbar = (1/2pi)(nu(Omega) + int_outside (f - flow)) with flow the lower envelope.

    The alternative route cbar = d - dlow must agree to ``identity_tol``; the
    two are computed by independent quadratures and the identity is asserted.
    """
    if measure.dimension != 2:
        raise UnsupportedDimensionError("cone excess is a planar quantity")
    kw = {} if angle_count is None else {"angle_count": angle_count}
    if profile is None:
        profile = radialize(measure, "lower", sample_count=sample_count,
                            **({"angle_count": angle_count} if angle_count else {}))
    omega_mass = measure.compact_integral(**kw) + measure.atom_total

    # int over {rho <= r <= rt} of (f - flow): angular mean of f minus the envelope
    rho, rt = measure.omega_radius, measure.tail_radius
    ac = angle_count or 1024
    thetas = TWO_PI * np.arange(ac) / ac
    excess = 0.0
    if rt > rho:
        def ring(r):
            vals = measure.density_polar([r], thetas)[0]
            return r * (vals.mean() - profile.value(r)) * TWO_PI

        excess, _ = quad(ring, rho, rt, epsabs=1e-11, epsrel=1e-11, limit=200)
    amp = measure.amplitude_at(thetas)
    if rt > 0 and measure.tail_beta > 2:
        excess += TWO_PI * (amp.mean() - profile.tail_b) * rt ** (2.0 - measure.tail_beta) / (measure.tail_beta - 2.0)

    direct = (omega_mass + excess) / TWO_PI
    via_d = log_coefficient(measure, angle_count=angle_count) - lower_log_coefficient(profile)
    if abs(direct - via_d) > identity_tol * max(1.0, abs(direct)):
        raise InternalConsistencyError(
            f"cone excess identity failed: direct {direct!r} vs d - dlow {via_d!r}"
        )
    return direct


# ---------------------------------------------------------------------------
# classical one-parameter singular family and the orbifold dimension count
# ---------------------------------------------------------------------------


def jorgens_solution(n: int, c: float, r: float) -> float:
    """int_0^r (c + t^n)^(1/n) dt: the classical radial convex solution of
    det D^2 u = 1 away from the origin, with a vertex cone of subgradient
    volume omega_n * c at zero."""
    if n < 2:
        raise UnsupportedDimensionError("dimension must be >= 2")
    if c < 0 or r < 0:
        raise UsageError("c and r must be nonnegative")
    if r == 0.0:
        return 0.0
    val, _ = quad(lambda t: (c + t**n) ** (1.0 / n), 0.0, r, epsabs=1e-12, **_QUAD_OPTS)
    return val


def jorgens_slope(n: int, c: float, r: float) -> float:
    return (c + r**n) ** (1.0 / n)


def orbifold_dim(n: int, k: int) -> int:
    """Dimension of the space of entire locally convex solutions of
    det D^2 u = 1 with k singular points, n >= 3."""
    if n < 3:
        raise UnsupportedDimensionError("the orbifold dimension formula requires n >= 3")
    if k < 1:
        raise UsageError("k must be >= 1")
    if k - 1 <= n:
        return (k - 1) + (k - 1) * k // 2
    return (k - 1) + n * (n + 1) // 2 + (k - 1 - n) * n


@dataclass(frozen=True)
class ExpansionRow:
    r: float
    gap: float          # w_c - r^2/2
    log_deficit: float  # gap - (dlow + c) log r


def expansion_table(profile: RadialProfile, c: float, radii, tol: float = 1e-10) -> list[ExpansionRow]:
    """The bounded-gap diagnostic across a radius ladder."""
    dlow_c = lower_log_coefficient(profile) + c
    rows = []
    for r in radii:
        gap = radial_gap(profile, c, float(r), tol=tol)
        rows.append(ExpansionRow(float(r), gap, gap - dlow_c * math.log(r)))
    return rows
