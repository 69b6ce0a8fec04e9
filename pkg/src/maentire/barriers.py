"""Radial sub/super solution pair for the higher-dimensional sandwich.

With fup(r) = max_{|x|=r} f and flow(r) = min_{|x|=r} f for r >= 1/2, the pair

    under(r) = int_1^r ( int_1^s n t^(n-1) fup(t) dt + K )^(1/n) ds     (r >= 1)
    over(r)  = int_1^r ( int_1^s n t^(n-1) flow(t) dt )^(1/n) ds        (r >= 1), 0 inside

sandwiches every exhaustion solution:  under + beta_minus <= u_R <= over + beta_plus.
K = c0/c1 where c0 is an explicit lower bound for the auxiliary interior
solution (Aleksandrov maximum principle: v1 >= -c(n) |dv1(B_1)|^(1/n) on
B_{1/2}, with |dv1(B_1)| = nu(B_1) + a for a unit-mass bump of weight a)
and c1 is the quadrature constant making the inner lower barrier

    bridge(r) = K int_1^r | int_1^s n t^(n-1) fup dt |^(1/n) sgn ds     (1/2 <= r <= 1)

continuous with value -c0 at r = 1/2.  Under takes the bridge values on
[1/2, 1) and the constant -c0 below, which keeps the one-sided radial slopes
at r = 1 ordered: 0 from inside, K^(1/n) from outside, so the glued function
is convex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import ConstructionFailureError, UsageError
from .measures import RadialProfile, SourceMeasure, _unit_ball_volume, radialize

_QUAD_OPTS = dict(epsrel=1e-12, limit=300)


def aleksandrov_constant(n: int) -> float:
    """Explicit admissible constant in v >= -c(n) |dv(B_1)|^(1/n): (2^(n-1)/omega_n)^(1/n)."""
    return (2.0 ** (n - 1) / _unit_ball_volume(n)) ** (1.0 / n)


def unit_bump(n: int):
    """Radial bump supported in B_{1/4} with unit mass, plus its normalization."""
    def shape(r):
        r = np.asarray(r, dtype=float)
        w = 4.0 * r
        out = np.zeros_like(w)
        inside = w < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - w[inside] ** 2))
        return out

    sphere = n * _unit_ball_volume(n)
    mass, _ = quad(lambda r: sphere * r ** (n - 1) * float(shape(np.array([r]))[0]), 0.0, 0.25,
                   epsabs=1e-13, **_QUAD_OPTS)

    def bump(r):
        return shape(r) / mass

    return bump


def _signed_root(x, n: int):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.abs(x) ** (1.0 / n)


def _quad_from_one(fn, r: float, n: int, tol: float = 1e-11) -> float:
    """int_1^r fn(s) ds where fn carries an |s-1|^(1/n) kink at s = 1.

    Substituting s = 1 +/- t^n removes the kink; the signed result follows the
    orientation of the interval.
    """
    if r == 1.0:
        return 0.0
    sign = 1.0 if r > 1.0 else -1.0
    span = abs(r - 1.0) ** (1.0 / n)

    def g(t):
        s = 1.0 + sign * t**n
        return fn(s) * n * t ** (n - 1)

    val, _ = quad(g, 0.0, span, epsabs=tol, epsrel=1e-10, limit=300)
    return sign * val


@dataclass(frozen=True)
class SubSuperPair:
    """Radial barrier pair with its construction constants."""

    n: int
    f_upper: RadialProfile
    f_lower: RadialProfile
    K: float
    c0: float
    c1: float
    a: float
    beta_minus: float
    beta_plus: float
    slope_inside: float   # limit of d/dr under as r -> 1-
    slope_outside: float  # limit as r -> 1+, equals K^(1/n)

    def _upper_arm(self, s):
        """int_1^s n t^(n-1) fup dt, signed (negative below 1)."""
        return self.f_upper.weighted_mass(s, self.n) - self.f_upper.weighted_mass(1.0, self.n)

    def _lower_arm(self, s):
        return self.f_lower.weighted_mass(s, self.n) - self.f_lower.weighted_mass(1.0, self.n)

    def _excess_under(self, s):
        """q with upper arm + K = s^n + q, in closed form (no cancellation)."""
        return (self.f_upper.weighted_excess(s, self.n)
                - self.f_upper.weighted_excess(1.0, self.n) - 1.0 + self.K)

    def _excess_over(self, s):
        return (self.f_lower.weighted_excess(s, self.n)
                - self.f_lower.weighted_excess(1.0, self.n) - 1.0)

    def _slope_deficit(self, s: float, q: float) -> float:
        """s - (s^n + q)^(1/n), stable for s up to 1e12."""
        ratio = q / s**self.n
        if ratio <= -1.0:
            return s
        return -s * math.expm1(math.log1p(ratio) / self.n)

    def quadratic_deficit_under(self, r) -> float:
        """r^2/2 - under(r), integrating the stable slope difference (r >= 1)."""
        if r < 1.0:
            return r * r / 2.0 - self.u_under(r)
        val = self._deficit_integral(lambda s: self._slope_deficit(s, self._excess_under(s)), r)
        return 0.5 + val

    def quadratic_deficit_over(self, r) -> float:
        if r <= 1.0:
            return r * r / 2.0
        val = self._deficit_integral(lambda s: self._slope_deficit(s, self._excess_over(s)), r)
        return 0.5 + val

    def _deficit_integral(self, fn, r: float) -> float:
        """int_1^r fn: kink substitution near 1, log substitution beyond."""
        near = _quad_from_one(fn, min(r, 2.0), self.n)
        far = 0.0
        if r > 2.0:
            far, _ = quad(lambda u: fn(math.exp(u)) * math.exp(u),
                          math.log(2.0), math.log(r), epsabs=1e-11, epsrel=1e-11, limit=300)
        return near + far

    def u_under(self, r) -> float:
        """Subsolution: bridge values inside B_1, outward integral beyond.

        The bridge integrates K |int_1^s n t^(n-1) fup dt|^(1/n) from 1 down
        to r, so it climbs from -c0 = -K c1 at r = 1/2 to 0 at r = 1 with
        vanishing slope there; below 1/2 the interior lower bound -c0 is used.
        """
        r = float(r)
        if r < 0.5:
            return -self.c0
        if r < 1.0:
            val = _quad_from_one(lambda s: abs(self._upper_arm(s)) ** (1.0 / self.n), r, self.n)
            return self.K * val
        return r * r / 2.0 - self.quadratic_deficit_under(r)

    def u_over(self, r) -> float:
        """Supersolution: zero inside B_1, outward integral of the lower envelope mass."""
        r = float(r)
        if r <= 1.0:
            return 0.0
        return r * r / 2.0 - self.quadratic_deficit_over(r)


def _deficit_limit(pair: SubSuperPair, which: str) -> float:
    """Limit of r^2/2 - barrier as r -> infinity.

    Finite for n >= 3 whenever beta > 2.  In the plane the deficit drifts
    logarithmically unless the far-field mass excess (including the gluing
    constant) vanishes, in which case the corresponding bound is genuinely
    infinite and reported as such.
    """
    n = pair.n
    if which == "under":
        integrand = lambda s: pair._slope_deficit(s, pair._excess_under(s))
        profile, shift = pair.f_upper, pair.K
    else:
        integrand = lambda s: pair._slope_deficit(s, pair._excess_over(s))
        profile, shift = pair.f_lower, 0.0
    if n == 2:
        excess = profile.excess_limit(2) - profile.weighted_excess(1.0, 2) - 1.0 + shift
        if abs(excess) > 1e-9:
            return math.copysign(math.inf, -excess)
    near = _quad_from_one(integrand, 2.0, n)
    far, _ = quad(lambda u: integrand(math.exp(u)) * math.exp(u),
                  math.log(2.0), math.log(1e12), epsabs=1e-11, epsrel=1e-11, limit=300)
    return 0.5 + near + far


def build_sub_super(
    n: int,
    measure: SourceMeasure,
    a: float = 1.0,
    v1_lower_bound: float | None = None,
    sample_count: int = 256,
    ladder_max: float = 1e6,
    a_cap: float = 1e12,
) -> SubSuperPair:
    """Construct the barrier pair for a measure with Omega inside B_{1/2}.

    ``a`` is the bump weight; it doubles automatically until c0 >= c1 (so that
    K >= 1 and the outer subsolution dominates the density).  When a discrete
    interior solution is available its minimum may be passed as
    ``v1_lower_bound`` and replaces the generic Aleksandrov bound.
    """
    if measure.omega_radius > 0.5:
        raise UsageError("perturbation region must sit inside B_{1/2}; rescale the problem first")
    if a <= 0:
        raise UsageError("bump weight a must be positive")

    f_upper = radialize(measure, "upper", sample_count=sample_count, start_radius=0.5)
    f_lower = radialize(measure, "lower", sample_count=sample_count, start_radius=0.5)

    nu_b1 = measure.total_mass(1.0)
    cn = aleksandrov_constant(n)

    def upper_arm(s):
        return f_upper.weighted_mass(s, n) - f_upper.weighted_mass(1.0, n)

    c1, _ = quad(lambda s: abs(upper_arm(s)) ** (1.0 / n), 0.5, 1.0, epsabs=1e-12, **_QUAD_OPTS)

    if v1_lower_bound is not None:
        c0 = abs(v1_lower_bound)
        if c0 < c1 * (1.0 - 1e-12):
            raise ConstructionFailureError(
                f"supplied interior bound gives c0={c0} < c1={c1}; increase the bump weight"
            )
        c0 = max(c0, c1)
    else:
        c0 = cn * (nu_b1 + a) ** (1.0 / n)
        while c0 < c1:
            a *= 2.0
            if a > a_cap:
                raise ConstructionFailureError("bump escalation cap reached without c0 >= c1")
            c0 = cn * (nu_b1 + a) ** (1.0 / n)

    K = c0 / c1
    pair = SubSuperPair(
        n=n,
        f_upper=f_upper,
        f_lower=f_lower,
        K=K,
        c0=c0,
        c1=c1,
        a=a,
        beta_minus=0.0,
        beta_plus=0.0,
        slope_inside=0.0,
        slope_outside=K ** (1.0 / n),
    )

    # beta_plus = sup (r^2/2 - over) over all radii; beta_minus = inf of
    # (r^2/2 - under) over the outer region r >= 1 where the formula is the
    # genuine subsolution.  Geometric ladder plus the analytic far-field
    # limit; the tail difference is eventually monotone, so the pair brackets
    # the extremum.
    outer = np.geomspace(1.0, ladder_max, 49)
    inner = np.linspace(0.0, 1.0, 17)
    over_vals = [pair.quadratic_deficit_over(float(r)) for r in np.concatenate([inner, outer])]
    under_vals = [pair.quadratic_deficit_under(float(r)) for r in outer]
    beta_plus = max(max(over_vals), _deficit_limit(pair, "over"))
    beta_minus = min(min(under_vals), _deficit_limit(pair, "under"))

    pair = SubSuperPair(
        n=n, f_upper=f_upper, f_lower=f_lower, K=K, c0=c0, c1=c1, a=a,
        beta_minus=beta_minus, beta_plus=beta_plus,
        slope_inside=0.0, slope_outside=K ** (1.0 / n),
    )
    _check_pair(pair, inner, outer)
    return pair


def _check_pair(pair: SubSuperPair, inner_radii, outer_radii) -> None:
    if not (pair.slope_inside < pair.slope_outside):
        raise ConstructionFailureError("one-sided slope jump at r = 1 is not increasing")
    for r in np.concatenate([inner_radii, outer_radii]):
        r = float(r)
        hi = pair.u_over(r) + pair.beta_plus
        if hi < r * r / 2.0 - 1e-9:
            raise ConstructionFailureError(
                f"upper barrier ordering failed at r={r}: over+bp={hi} < r^2/2"
            )
    for r in outer_radii:
        r = float(r)
        lo = pair.u_under(r) + pair.beta_minus
        if lo > r * r / 2.0 + 1e-9:
            raise ConstructionFailureError(
                f"lower barrier ordering failed at r={r}: under+bm={lo} > r^2/2"
            )
