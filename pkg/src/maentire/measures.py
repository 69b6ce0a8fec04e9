"""Source measures and radial density profiles.

A source measure is a locally finite Borel measure

    nu = f dx  outside Omega,   nu = (compact density) dx + sum_i m_i delta_{P_i}  on Omega,

where Omega = B_rho is a disk centered at the origin, f > 0 is a smooth field
tending to 1 at rate r**(-beta), and beyond ``tail_radius`` the density equals
1 + amp(theta) * r**(-beta) exactly so that far-field integrals close in
analytic form.  beta > 2 is required everywhere except on the dedicated
slow-tail override used by the counterexample runs.

A radial profile is a one-dimensional density r -> f(r): piecewise linear
between sampled radii, identically zero below ``zero_below``, and equal to
1 + tail_b * r**(-tail_beta) beyond its last sample radius.  Profiles are the
lower/upper radializations of a measure (circle minima / maxima of f) and feed
every radial quadrature in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import (
    DivergentTailError,
    InvalidMeasureError,
    UnsupportedDimensionError,
    UsageError,
)

TWO_PI = 2.0 * math.pi

#: angular samples used when a quadrature needs a circle average
DEFAULT_ANGLE_COUNT = 1024


def _unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def _sphere_area(n: int) -> float:
    # surface measure of the unit sphere in R^n
    return n * _unit_ball_volume(n)


# ---------------------------------------------------------------------------
# radial profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialProfile:
    """Piecewise-linear radial density with an exact power-law tail."""

    inner_radii: np.ndarray
    inner_values: np.ndarray
    tail_b: float
    tail_beta: float
    zero_below: float = 0.0
    allow_slow_tail: bool = False
    continuity_tol: float = 1e-6
    _segment_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        r = np.atleast_1d(np.asarray(self.inner_radii, dtype=float))
        v = np.atleast_1d(np.asarray(self.inner_values, dtype=float))
        object.__setattr__(self, "inner_radii", r)
        object.__setattr__(self, "inner_values", v)
        if r.shape != v.shape or r.ndim != 1:
            raise UsageError("inner_radii and inner_values must be 1-d and of equal length")
        if np.any(np.diff(r) <= 0):
            raise InvalidMeasureError("profile sample radii must be strictly increasing")
        if r[0] < 0:
            raise InvalidMeasureError("profile radii must be nonnegative")
        if np.any(v < 0):
            raise InvalidMeasureError("negative density value in radial profile")
        if self.tail_beta <= 2.0 and not self.allow_slow_tail:
            raise DivergentTailError(
                f"tail exponent beta={self.tail_beta} <= 2 rejected; "
                "pass allow_slow_tail=True only for counterexample runs"
            )
        if self.zero_below > 0 and abs(r[0] - self.zero_below) > 1e-12 * max(1.0, self.zero_below):
            raise InvalidMeasureError("first sample radius must equal zero_below when a zero region is present")
        rt = float(r[-1])
        tail_at_rt = 1.0 + self.tail_b * rt ** (-self.tail_beta) if rt > 0 else 1.0 + self.tail_b
        if rt > 0 and abs(v[-1] - tail_at_rt) > self.continuity_tol * max(1.0, abs(tail_at_rt)):
            raise InvalidMeasureError(
                f"profile discontinuous at tail radius: sampled {v[-1]!r} vs tail {tail_at_rt!r}"
            )

    # -- basic evaluation ----------------------------------------------------

    @property
    def tail_radius(self) -> float:
        return float(self.inner_radii[-1])

    def value(self, r):
        """Density at radius r (scalar or array)."""
        r = np.asarray(r, dtype=float)
        out = np.interp(r, self.inner_radii, self.inner_values)
        out = np.where(r < self.zero_below, 0.0, out)
        tail = r > self.tail_radius
        if np.any(tail):
            rt = np.where(tail, r, 1.0)
            out = np.where(tail, 1.0 + self.tail_b * rt ** (-self.tail_beta), out)
        return out if out.ndim else float(out)

    def breakpoints(self) -> list[float]:
        """Radii where the density representation changes character."""
        pts = [float(self.zero_below), self.tail_radius]
        return sorted({p for p in pts if p > 0})

    # -- closed-form weighted integrals ---------------------------------------

    def _segments(self, n: int):
        """Cumulative values of int_0^{r_k} n t^(n-1) (f(t) - 1) dt at sample radii."""
        cached = self._segment_cache.get(n)
        if cached is not None:
            return cached
        r = self.inner_radii
        v = self.inner_values
        cum = np.zeros(r.shape[0])
        # region [0, r0]: zero density if zero_below > 0, else constant v0
        r0 = float(r[0])
        if r0 > 0:
            const = 0.0 if self.zero_below > 0 else float(v[0])
            cum[0] = (const - 1.0) * r0**n
        for k in range(r.shape[0] - 1):
            a, b = float(r[k]), float(r[k + 1])
            va, vb = float(v[k]), float(v[k + 1])
            slope = (vb - va) / (b - a)
            alpha = va - slope * a  # f(t) = alpha + slope*t on [a, b]
            seg = (alpha - 1.0) * (b**n - a**n) + slope * n * (b ** (n + 1) - a ** (n + 1)) / (n + 1)
            cum[k + 1] = cum[k] + seg
        self._segment_cache[n] = cum
        return cum

    def weighted_excess(self, s, n: int = 2):
        """int_0^s n t^(n-1) (f(t)-1) dt in closed form; vectorized in s."""
        s = np.asarray(s, dtype=float)
        r = self.inner_radii
        cum = self._segments(n)
        rt = self.tail_radius
        out = np.empty(s.shape)

        flat_s = np.atleast_1d(s)
        flat_out = np.atleast_1d(out)
        # inner piecewise part
        idx = np.searchsorted(r, flat_s, side="right") - 1
        below0 = idx < 0
        idx_cl = np.clip(idx, 0, r.shape[0] - 1)
        base = cum[idx_cl]
        a = r[idx_cl]
        va = self.inner_values[idx_cl]
        s_in = np.minimum(flat_s, rt)
        # partial segment [a, s] with linear density (or the constant/zero head)
        nxt = np.clip(idx_cl + 1, 0, r.shape[0] - 1)
        bseg = r[nxt]
        vb = self.inner_values[nxt]
        width = np.where(bseg > a, bseg - a, 1.0)
        slope = (vb - va) / width
        alpha = va - slope * a
        partial = (alpha - 1.0) * (s_in**n - a**n) + slope * n * (s_in ** (n + 1) - a ** (n + 1)) / (n + 1)
        partial = np.where(idx_cl + 1 >= r.shape[0], 0.0, partial)  # beyond last sample: handled by tail
        val = base + np.where(flat_s >= rt, 0.0, partial)
        # head region below the first sample radius
        head_const = 0.0 if (self.zero_below > 0 or r[0] == 0.0) else float(self.inner_values[0])
        val = np.where(below0, (head_const - 1.0) * flat_s**n, val)
        # tail
        tail_mask = flat_s > rt
        if np.any(tail_mask):
            st = np.where(tail_mask, flat_s, rt if rt > 0 else 1.0)
            val = np.where(tail_mask, cum[-1] + self._tail_excess(st, n), val)
        flat_out[...] = val
        return out if out.ndim else float(out)

    def _tail_excess(self, s, n: int):
        """int_{rt}^s n t^(n-1) * tail_b * t^(-beta) dt."""
        rt = self.tail_radius
        b, beta = self.tail_b, self.tail_beta
        if b == 0.0:
            return np.zeros_like(s)
        if abs(n - beta) < 1e-14:
            return n * b * np.log(s / rt)
        return n * b * (s ** (n - beta) - rt ** (n - beta)) / (n - beta)

    def mass_excess(self, s):
        """G(s) = int_0^s 2 t (f(t) - 1) dt."""
        return self.weighted_excess(s, 2)

    def weighted_mass(self, s, n: int = 2):
        """int_0^s n t^(n-1) f(t) dt = s^n + weighted excess."""
        s_arr = np.asarray(s, dtype=float)
        return s_arr**n + self.weighted_excess(s, n)

    def excess_limit(self, n: int = 2) -> float:
        """Limit of the weighted excess as s -> infinity (finite only for beta > n)."""
        if self.tail_beta <= n:
            raise DivergentTailError(
                f"weighted excess diverges: beta={self.tail_beta} <= n={n}"
            )
        rt = self.tail_radius
        cum = self._segments(n)
        tail = 0.0
        if self.tail_b != 0.0:
            tail = n * self.tail_b * rt ** (n - self.tail_beta) / (self.tail_beta - n)
        return float(cum[-1] + tail)

    # -- constructors ---------------------------------------------------------

    @staticmethod
    def constant(value: float = 1.0, tail_radius: float = 1.0, tail_beta: float = 4.0) -> "RadialProfile":
        """Profile identically equal to ``value`` inside, with tail 1 + (value-1)*rt^beta * r^-beta."""
        b = (value - 1.0) * tail_radius**tail_beta
        return RadialProfile(
            inner_radii=np.array([0.0, tail_radius]),
            inner_values=np.array([value, value]),
            tail_b=b,
            tail_beta=tail_beta,
        )

    @staticmethod
    def power_tail(
        b: float,
        beta: float,
        tail_radius: float = 1.0,
        zero_below: float | None = None,
        allow_slow_tail: bool = False,
    ) -> "RadialProfile":
        """Zero (or one) inside, exactly 1 + b r^-beta beyond the tail radius.

        With ``zero_below`` equal to the tail radius the inner region carries
        density zero, which is the shape of a lower radialization whose cut
        radius coincides with the start of the tail.
        """
        zb = tail_radius if zero_below is None else zero_below
        val = 1.0 + b * tail_radius ** (-beta)
        if abs(zb - tail_radius) < 1e-15:
            radii, values = np.array([tail_radius]), np.array([val])
        else:
            radii, values = np.array([zb, tail_radius]), np.array([val, val])
        return RadialProfile(
            inner_radii=radii,
            inner_values=values,
            tail_b=b,
            tail_beta=beta,
            zero_below=zb,
            allow_slow_tail=allow_slow_tail,
        )


def _smoothstep(w):
    w = np.clip(w, 0.0, 1.0)
    return w * w * (3.0 - 2.0 * w)


def remark_profile(bridge_samples: int = 257) -> RadialProfile:
    """The slow-tail counterexample density: 1 on [0,1], 1 + r^-2 beyond 2.

    The bridge on [1, 2] is a cubic smoothstep ramp of the tail amplitude; the
    leading far-field behavior does not depend on this choice.  The profile
    carries beta = 2 and is only constructible through the slow-tail override.
    """
    rb = np.linspace(1.0, 2.0, bridge_samples)
    vb = 1.0 + _smoothstep(rb - 1.0) * rb**-2
    radii = np.concatenate([[0.0], rb])
    values = np.concatenate([[1.0], vb])
    return RadialProfile(
        inner_radii=radii,
        inner_values=values,
        tail_b=1.0,
        tail_beta=2.0,
        allow_slow_tail=True,
    )


# ---------------------------------------------------------------------------
# source measures
# ---------------------------------------------------------------------------


def _vectorized_scalar_field(fn: Callable) -> Callable:
    def wrapped(points):
        pts = np.asarray(points, dtype=float)
        vals = fn(pts)
        return np.asarray(vals, dtype=float)

    return wrapped


@dataclass(frozen=True)
class SourceMeasure:
    """nu = f dx outside Omega = B_rho, compact density + atoms inside.

    ``density`` evaluates f at an (N, n) array of points; it must be valid
    everywhere outside Omega and must equal 1 + amplitude(theta) * r^-beta
    exactly beyond ``tail_radius``.  ``tail_amplitude`` is a float for radial
    tails or a callable theta -> amplitude for angular ones (n = 2 only).
    """

    dimension: int
    density: Callable
    tail_amplitude: float | Callable
    tail_beta: float
    tail_radius: float
    omega_radius: float = 0.0
    compact_density: Callable | None = None
    atoms: tuple = ()
    allow_slow_tail: bool = False

    def __post_init__(self):
        if self.dimension < 2:
            raise UnsupportedDimensionError("dimension must be >= 2")
        if self.tail_beta <= 2.0 and not self.allow_slow_tail:
            raise DivergentTailError(
                f"tail exponent beta={self.tail_beta} <= 2 rejected at measure construction"
            )
        if self.tail_radius < self.omega_radius:
            raise InvalidMeasureError("tail_radius must be >= omega_radius (density field must cover the annulus)")
        atoms = []
        for p, m in self.atoms:
            p = tuple(float(c) for c in p)
            if len(p) != self.dimension:
                raise InvalidMeasureError(f"atom point {p} has wrong dimension")
            if m <= 0:
                raise InvalidMeasureError(f"atom mass {m} must be positive")
            if math.hypot(*p) >= self.omega_radius:
                raise InvalidMeasureError(
                    f"atom at {p} lies outside the open perturbation disk of radius {self.omega_radius}"
                )
            atoms.append((p, float(m)))
        object.__setattr__(self, "atoms", tuple(atoms))
        object.__setattr__(self, "density", _vectorized_scalar_field(self.density))
        if self.compact_density is not None:
            object.__setattr__(self, "compact_density", _vectorized_scalar_field(self.compact_density))

    # -- evaluation helpers ----------------------------------------------------

    @property
    def atom_total(self) -> float:
        return sum(m for _, m in self.atoms)

    def amplitude_at(self, thetas) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float)
        if callable(self.tail_amplitude):
            return np.asarray(self.tail_amplitude(thetas), dtype=float)
        return np.full(thetas.shape, float(self.tail_amplitude))

    def density_polar(self, radii, thetas) -> np.ndarray:
        """f on the polar grid (len(radii), len(thetas)); n = 2 only."""
        self._require_plane()
        r = np.asarray(radii, dtype=float)[:, None]
        t = np.asarray(thetas, dtype=float)[None, :]
        pts = np.stack([r * np.cos(t) + 0.0 * t, r * np.sin(t) + 0.0 * t], axis=-1)
        return self.density(pts.reshape(-1, 2)).reshape(r.shape[0], t.shape[1])

    def radial_density(self, r):
        """Density along the first axis direction; for radially symmetric measures."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        pts = np.zeros((r.shape[0], self.dimension))
        pts[:, 0] = r
        out = np.empty(r.shape[0])
        inside = r < self.omega_radius
        if np.any(inside):
            if self.compact_density is None:
                out[inside] = 0.0
            else:
                out[inside] = self.compact_density(pts[inside])
        if np.any(~inside):
            out[~inside] = self.density(pts[~inside])
        return out if out.shape[0] > 1 else float(out[0])

    def _require_plane(self):
        if self.dimension != 2:
            raise UnsupportedDimensionError("operation implemented for the plane only")

    # -- integrals ---------------------------------------------------------------

    def compact_integral(self, weight: Callable | None = None, angle_count: int = DEFAULT_ANGLE_COUNT) -> float:
        """int_Omega (compact density) * weight dx (planar polar quadrature)."""
        rho = self.omega_radius
        if rho == 0.0 or self.compact_density is None:
            return 0.0
        self._require_plane()
        thetas = TWO_PI * np.arange(angle_count) / angle_count

        def ring(r):
            if r == 0.0:
                return 0.0
            pts = np.stack([r * np.cos(thetas), r * np.sin(thetas)], axis=-1)
            vals = self.compact_density(pts)
            if weight is not None:
                vals = vals * weight(pts)
            return r * vals.mean() * TWO_PI

        val, _ = quad(ring, 0.0, rho, epsabs=1e-11, epsrel=1e-11, limit=200)
        return val

    def annulus_excess(self, angle_count: int = DEFAULT_ANGLE_COUNT) -> float:
        """int over {rho <= |x| <= tail_radius} of (f - 1) dx."""
        self._require_plane()
        rho, rt = self.omega_radius, self.tail_radius
        if rt <= rho:
            return 0.0
        thetas = TWO_PI * np.arange(angle_count) / angle_count

        def ring(r):
            vals = self.density_polar([r], thetas)[0]
            return r * (vals - 1.0).mean() * TWO_PI

        val, _ = quad(ring, rho, rt, epsabs=1e-11, epsrel=1e-11, limit=200)
        return val

    def tail_excess_integral(self, angle_count: int = DEFAULT_ANGLE_COUNT) -> float:
        """int over {|x| > tail_radius} of (f - 1) dx, in closed form per angle."""
        self._require_plane()
        if self.tail_beta <= 2.0:
            raise DivergentTailError("tail excess integral diverges for beta <= 2")
        thetas = TWO_PI * np.arange(angle_count) / angle_count
        amp_mean = self.amplitude_at(thetas).mean()
        if amp_mean == 0.0:
            return 0.0
        rt = self.tail_radius
        if rt == 0.0:
            raise InvalidMeasureError("nonzero tail amplitude requires a positive tail radius")
        return TWO_PI * amp_mean * rt ** (2.0 - self.tail_beta) / (self.tail_beta - 2.0)

    def total_mass(self, radius: float, angle_count: int = DEFAULT_ANGLE_COUNT) -> float:
        """nu(B_radius).  Planar measures integrate the angular field; higher
        dimensions require radial symmetry and integrate along one ray."""
        rho = self.omega_radius
        atoms = sum(m for p, m in self.atoms if math.hypot(*p) < radius)
        if self.dimension == 2:
            total = atoms + self.compact_integral(angle_count=angle_count) if radius >= rho else atoms
            if radius < rho:
                # partial coverage of the compact part
                thetas = TWO_PI * np.arange(angle_count) / angle_count

                def ring(r):
                    if r == 0.0 or self.compact_density is None:
                        return 0.0
                    pts = np.stack([r * np.cos(thetas), r * np.sin(thetas)], axis=-1)
                    return r * self.compact_density(pts).mean() * TWO_PI

                part, _ = quad(ring, 0.0, radius, epsabs=1e-11, epsrel=1e-11, limit=200)
                return atoms + part
            # annulus rho..min(radius, rt) by quadrature
            thetas = TWO_PI * np.arange(angle_count) / angle_count
            mid = min(radius, self.tail_radius)
            if mid > rho:
                def ring(r):
                    return r * self.density_polar([r], thetas)[0].mean() * TWO_PI

                part, _ = quad(ring, rho, mid, epsabs=1e-11, epsrel=1e-11, limit=200)
                total += part
            if radius > self.tail_radius:
                rt = self.tail_radius
                amp_mean = self.amplitude_at(thetas).mean()
                total += math.pi * (radius**2 - rt**2)
                if amp_mean != 0.0:
                    beta = self.tail_beta
                    if abs(beta - 2.0) < 1e-14:
                        total += TWO_PI * amp_mean * math.log(radius / rt)
                    else:
                        total += TWO_PI * amp_mean * (radius ** (2 - beta) - rt ** (2 - beta)) / (2 - beta)
            return total
        # n >= 3: radial quadrature along e1 (radially symmetric measures only)
        sn = _sphere_area(self.dimension)

        def shell(r):
            return sn * r ** (self.dimension - 1) * float(np.atleast_1d(self.radial_density(r))[0])

        val, _ = quad(shell, 0.0, radius, epsabs=1e-11, epsrel=1e-11, limit=200,
                      points=[p for p in (rho, self.tail_radius) if 0 < p < radius] or None)
        return atoms + val


# ---------------------------------------------------------------------------
# measure builders
# ---------------------------------------------------------------------------


def lebesgue_measure(dimension: int = 2) -> SourceMeasure:
    """Plain Lebesgue measure: f identically 1, no perturbation, no atoms."""
    return SourceMeasure(
        dimension=dimension,
        density=lambda pts: np.ones(np.asarray(pts).shape[0]),
        tail_amplitude=0.0,
        tail_beta=4.0,
        tail_radius=0.0,
    )


def point_mass_measure(
    atoms: Sequence[tuple[Sequence[float], float]],
    omega_radius: float = 0.5,
    dimension: int = 2,
) -> SourceMeasure:
    """Lebesgue measure plus finitely many point masses inside B_omega_radius."""
    return SourceMeasure(
        dimension=dimension,
        density=lambda pts: np.ones(np.asarray(pts).shape[0]),
        tail_amplitude=0.0,
        tail_beta=4.0,
        tail_radius=omega_radius,
        omega_radius=omega_radius,
        compact_density=lambda pts: np.ones(np.asarray(pts).shape[0]),
        atoms=tuple((tuple(p), float(m)) for p, m in atoms),
    )


def radial_tail_measure(
    b: float,
    beta: float,
    tail_radius: float = 1.0,
    omega_radius: float | None = None,
    compact_value: float = 1.0,
    dimension: int = 2,
    allow_slow_tail: bool = False,
) -> SourceMeasure:
    """f = 1 + b r^-beta beyond the tail radius, constant compact part inside Omega.

    By default Omega fills the whole region below the tail radius, so the
    density field is exactly its tail form everywhere it is consulted.
    """
    rho = tail_radius if omega_radius is None else omega_radius

    def f(pts):
        pts = np.asarray(pts, dtype=float)
        r = np.sqrt((pts**2).sum(axis=-1))
        r = np.maximum(r, 1e-300)
        return 1.0 + b * r ** (-beta)

    return SourceMeasure(
        dimension=dimension,
        density=f,
        tail_amplitude=b,
        tail_beta=beta,
        tail_radius=tail_radius,
        omega_radius=rho,
        compact_density=(lambda pts: np.full(np.asarray(pts).shape[0], compact_value)) if rho > 0 else None,
        allow_slow_tail=allow_slow_tail,
    )


def angular_tail_measure(
    amplitude: Callable,
    beta: float,
    tail_radius: float = 1.0,
    omega_radius: float | None = None,
    compact_value: float = 1.0,
) -> SourceMeasure:
    """Planar measure with f = 1 + amplitude(theta) r^-beta beyond the tail radius."""
    rho = tail_radius if omega_radius is None else omega_radius

    def f(pts):
        pts = np.asarray(pts, dtype=float)
        r = np.sqrt((pts**2).sum(axis=-1))
        theta = np.arctan2(pts[..., 1], pts[..., 0])
        r = np.maximum(r, 1e-300)
        return 1.0 + np.asarray(amplitude(theta)) * r ** (-beta)

    return SourceMeasure(
        dimension=2,
        density=f,
        tail_amplitude=amplitude,
        tail_beta=beta,
        tail_radius=tail_radius,
        omega_radius=rho,
        compact_density=(lambda pts: np.full(np.asarray(pts).shape[0], compact_value)) if rho > 0 else None,
    )


def remark_measure(dimension: int = 2) -> SourceMeasure:
    """Radial slow-tail measure (beta = 2) matching :func:`remark_profile`."""
    prof = remark_profile()

    def f(pts):
        pts = np.asarray(pts, dtype=float)
        r = np.sqrt((pts**2).sum(axis=-1))
        return np.atleast_1d(prof.value(r))

    return SourceMeasure(
        dimension=dimension,
        density=f,
        tail_amplitude=1.0,
        tail_beta=2.0,
        tail_radius=2.0,
        allow_slow_tail=True,
    )


# ---------------------------------------------------------------------------
# radialization
# ---------------------------------------------------------------------------


def radialize(
    measure: SourceMeasure,
    mode: str,
    sample_count: int = 256,
    angle_count: int = DEFAULT_ANGLE_COUNT,
    start_radius: float | None = None,
) -> RadialProfile:
    """Lower/upper radial envelope of the density field.

    Lower mode returns the circle minimum of f for r >= rho and zero below;
    upper mode returns the circle maximum for r >= 1/2.  Circle extrema are
    taken over ``angle_count`` uniformly spaced angles, so the sampled minimum
    overestimates the true one by at most L_theta * pi / angle_count for an
    angular Lipschitz bound L_theta of f on the circle.
    """
    if mode not in ("lower", "upper"):
        raise UsageError(f"mode must be 'lower' or 'upper', got {mode!r}")
    if sample_count < 8:
        raise UsageError("sample_count must be >= 8")
    if measure.tail_beta <= 2.0 and not measure.allow_slow_tail:
        raise DivergentTailError("measure tail too shallow for radialization")

    lower = mode == "lower"
    start = start_radius
    if start is None:
        start = measure.omega_radius if lower else 0.5
    rt = measure.tail_radius

    if measure.dimension != 2:
        _assert_radial(measure)
        thetas = np.zeros(1)
    else:
        thetas = TWO_PI * np.arange(angle_count) / angle_count

    amp = measure.amplitude_at(thetas)
    tail_b = float(amp.min() if lower else amp.max())

    if start >= rt:
        radii = np.array([rt if rt > 0 else start])
    else:
        radii = np.linspace(start, rt, sample_count)

    if measure.dimension == 2:
        grid = measure.density_polar(radii, thetas)
    else:
        grid = np.stack([np.atleast_1d(measure.radial_density(r)) for r in radii])
    if np.any(grid < 0):
        raise InvalidMeasureError("negative density encountered while sampling circles")
    values = grid.min(axis=1) if lower else grid.max(axis=1)

    if radii.shape[0] == 1 and rt > 0:
        # profile is pure tail; pin the single sample to the tail value
        values = np.array([1.0 + tail_b * rt ** (-measure.tail_beta)])
    zero_below = start if (lower and measure.omega_radius > 0 and start_radius is None) else 0.0
    return RadialProfile(
        inner_radii=radii,
        inner_values=values,
        tail_b=tail_b,
        tail_beta=measure.tail_beta,
        zero_below=zero_below,
        allow_slow_tail=measure.allow_slow_tail,
    )


def _assert_radial(measure: SourceMeasure, radii=(0.7, 1.3, 2.9), tol: float = 1e-9):
    n = measure.dimension
    for r in radii:
        if r <= measure.omega_radius or r < 1e-9:
            continue
        dirs = np.zeros((2 * n, n))
        for i in range(n):
            dirs[2 * i, i] = 1.0
            dirs[2 * i + 1, i] = -1.0
        vals = measure.density(r * dirs)
        if np.ptp(vals) > tol * max(1.0, abs(vals[0])):
            raise UnsupportedDimensionError(
                "only radially symmetric measures are supported for dimension >= 3"
            )
