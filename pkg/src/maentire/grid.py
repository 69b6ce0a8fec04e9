"""Disk-restricted lattice grids for the wide-stencil scheme.

A grid holds the lattice nodes {h (i, j) : |h (i, j)| <= R - h} in
lexicographic order plus, for every node and every stencil line, either the
interior neighbor or the exact intersection of the stencil ray with the
circle |x| = R (the ghost point where Dirichlet data is read).  Second
differences along a line use unequal arms

    D2 u = 2 [ a_m u_p + a_p u_m - (a_p + a_m) u_0 ] / (a_p a_m (a_p + a_m)),

which is exact on quadratics for any arm pair, so cut cells at the rim do not
break the scheme's quadratic exactness.

Stencil lines come in orthogonal pairs (e, e_perp) of primitive lattice
vectors; W is the number of pairs (directions per quadrant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from io import StringIO
from pathlib import Path

import numpy as np

from .errors import CoverageError, InvalidMeasureError, UsageError
from .measures import SourceMeasure


def stencil_directions(W: int) -> np.ndarray:
    """First W primitive first-quadrant lattice directions, ordered by
    max-norm then angle: (1,0), (1,1), (2,1), (1,2), (3,1), (3,2), ..."""
    if W < 1:
        raise UsageError("stencil width must be >= 1")
    dirs = [(1, 0)]
    q = 1
    while len(dirs) < W:
        batch = []
        for a in range(1, q + 1):
            for b in range(1, q + 1):
                if max(a, b) == q and math.gcd(a, b) == 1:
                    batch.append((a, b))
        batch.sort(key=lambda ab: math.atan2(ab[1], ab[0]))
        dirs.extend(batch)
        q += 1
    return np.asarray(dirs[:W], dtype=np.int64)


@dataclass
class GridDisk:
    """Geometry of the disk lattice plus precomputed stencil arms."""

    R: float
    h: float
    W: int
    nodes: np.ndarray = field(init=False)        # (N, 2) positions, lexicographic
    lattice: np.ndarray = field(init=False)      # (N, 2) integer coordinates
    lines: np.ndarray = field(init=False)        # (2W, 2) lattice vectors (pairs k, k+W)
    nb_plus: np.ndarray = field(init=False)      # (N, 2W) neighbor id or -1
    nb_minus: np.ndarray = field(init=False)
    arm_plus: np.ndarray = field(init=False)     # (N, 2W) physical arm length
    arm_minus: np.ndarray = field(init=False)
    bpt_plus: np.ndarray = field(init=False)     # (N, 2W, 2) ghost points (NaN if interior)
    bpt_minus: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.h <= 0:
            raise UsageError("spacing h must be positive")
        if self.R / self.h < 8:
            raise UsageError("need at least 8 nodes per radius (R/h >= 8)")
        R, h = self.R, self.h
        m = int(math.floor((R - h) / h + 1e-12))
        ij = np.mgrid[-m:m + 1, -m:m + 1].reshape(2, -1).T
        pts = ij * h
        keep = (pts**2).sum(axis=1) <= (R - h) ** 2 + 1e-12 * R * R
        ij = ij[keep]
        order = np.lexsort((ij[:, 1], ij[:, 0]))
        self.lattice = ij[order]
        self.nodes = self.lattice * h

        e = stencil_directions(self.W)
        perp = np.column_stack([-e[:, 1], e[:, 0]])
        self.lines = np.vstack([e, perp])

        self._m = m
        self._id_grid = np.full((2 * m + 1, 2 * m + 1), -1, dtype=np.int64)
        self._id_grid[self.lattice[:, 0] + m, self.lattice[:, 1] + m] = np.arange(self.lattice.shape[0])

        N, D = self.nodes.shape[0], self.lines.shape[0]
        self.nb_plus = np.full((N, D), -1, dtype=np.int64)
        self.nb_minus = np.full((N, D), -1, dtype=np.int64)
        self.arm_plus = np.empty((N, D))
        self.arm_minus = np.empty((N, D))
        self.bpt_plus = np.full((N, D, 2), np.nan)
        self.bpt_minus = np.full((N, D, 2), np.nan)
        for d, ev in enumerate(self.lines):
            le = float(np.hypot(*ev))
            unit = ev / le
            full = h * le
            for sign, nb, arm, bpt in (
                (1, self.nb_plus, self.arm_plus, self.bpt_plus),
                (-1, self.nb_minus, self.arm_minus, self.bpt_minus),
            ):
                nb[:, d] = self.ids_at(self.lattice + sign * ev)
                arm[:, d] = full
                out = nb[:, d] < 0
                if np.any(out):
                    x = self.nodes[out]
                    proj = x @ (sign * unit)
                    t = -proj + np.sqrt(proj**2 + (R * R - (x**2).sum(axis=1)))
                    arm[out, d] = t
                    bpt[out, d, :] = x + t[:, None] * (sign * unit)[None, :]
                    # near-tangent rays from the last ring run sqrt(2 R h) to the circle
                    reach = full + math.sqrt(h * (2 * R - h)) + 1e-9 * R
                    if np.any(t <= 0) or np.any(t > reach):
                        raise UsageError("stencil arm left its admissible reach")

    def ids_at(self, lattice_pts: np.ndarray) -> np.ndarray:
        """Node ids at integer lattice coordinates, -1 where absent."""
        lp = np.asarray(lattice_pts, dtype=np.int64)
        m = self._m
        ii, jj = lp[..., 0] + m, lp[..., 1] + m
        ok = (ii >= 0) & (ii <= 2 * m) & (jj >= 0) & (jj <= 2 * m)
        out = np.full(lp.shape[:-1], -1, dtype=np.int64)
        out[ok] = self._id_grid[ii[ok], jj[ok]]
        return out

    @property
    def node_count(self) -> int:
        return self.nodes.shape[0]

    @property
    def origin_index(self) -> int:
        idx = int(self.ids_at(np.array([[0, 0]]))[0])
        if idx < 0:
            raise UsageError("grid does not contain the origin")
        return idx

    def node_index(self, i: int, j: int) -> int | None:
        idx = int(self.ids_at(np.array([[i, j]]))[0])
        return None if idx < 0 else idx

    def boundary_values(self, g) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate Dirichlet data at every ghost point; NaN-filled elsewhere."""
        bvp = np.zeros(self.nb_plus.shape)
        bvm = np.zeros(self.nb_minus.shape)
        for bpt, nb, bv in ((self.bpt_plus, self.nb_plus, bvp), (self.bpt_minus, self.nb_minus, bvm)):
            mask = nb < 0
            if np.any(mask):
                pts = bpt[mask]
                bv[mask] = np.asarray(g(pts), dtype=float)
        return bvp, bvm


def boundary_constant(value: float):
    """Dirichlet data that is constant on the circle."""
    def g(points):
        pts = np.asarray(points, dtype=float)
        return np.full(pts.shape[0], float(value))
    return g


@dataclass
class GridFunction:
    """Values on the interior nodes of a grid."""

    grid: GridDisk
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.node_count,):
            raise UsageError("value vector does not match the grid")

    def value_at_origin(self) -> float:
        return float(self.values[self.grid.origin_index])

    def interpolate(self, points) -> np.ndarray:
        """Bilinear interpolation at arbitrary points inside the covered disk."""
        pts = np.asarray(points, dtype=float)
        h = self.grid.h
        base = np.floor(pts / h + 1e-12).astype(np.int64)
        t = pts / h - base
        # points on the last lattice line: step the base cell back inside
        out = np.zeros(pts.shape[0])
        ok = np.ones(pts.shape[0], dtype=bool)
        for di, dj, wgt in ((0, 0, (1 - t[:, 0]) * (1 - t[:, 1])),
                            (1, 0, t[:, 0] * (1 - t[:, 1])),
                            (0, 1, (1 - t[:, 0]) * t[:, 1]),
                            (1, 1, t[:, 0] * t[:, 1])):
            ids = self.grid.ids_at(base + np.array([di, dj]))
            usable = ids >= 0
            ok &= usable | (np.abs(wgt) < 1e-13)
            out += np.where(usable, wgt * self.values[np.clip(ids, 0, None)], 0.0)
        if not ok.all():
            raise CoverageError("interpolation point outside the covered lattice")
        return out

    def values_at_nodes_of(self, sub: "GridDisk") -> np.ndarray:
        """Exact values at the nodes of an aligned subgrid (shared lattice)."""
        ratio = sub.h / self.grid.h
        scale = round(ratio)
        if abs(ratio - scale) > 1e-12 or scale < 1:
            raise UsageError("subgrid spacing must be an integer multiple of the grid spacing")
        ids = self.grid.ids_at(sub.lattice * scale)
        if np.any(ids < 0):
            raise CoverageError("subgrid node missing from the host grid")
        return self.values[ids]

    def save(self, path) -> None:
        Path(path).write_text(self.serialize(), encoding="utf-8")

    def serialize(self) -> str:
        g = self.grid
        buf = StringIO()
        buf.write(f"# gridfunction R={g.R!r} h={g.h!r} W={g.W} count={g.node_count}\n")
        for (x1, x2), v in zip(g.nodes, self.values):
            buf.write(f"{x1!r} {x2!r} {v!r}\n")
        return buf.getvalue()


def load_grid_function(source) -> GridFunction:
    """Inverse of GridFunction.save; bit-exact round trip.  Accepts a path or
    the serialized text itself."""
    text = str(source)
    if not text.startswith("# gridfunction"):
        text = Path(source).read_text(encoding="utf-8")
    lines = text.strip().splitlines()
    header = lines[0]
    if not header.startswith("# gridfunction"):
        raise UsageError("not a grid-function file")
    fields = dict(tok.split("=") for tok in header.split()[2:])
    grid = GridDisk(R=float(fields["R"]), h=float(fields["h"]), W=int(fields["W"]))
    count = int(fields["count"])
    if grid.node_count != count:
        raise UsageError(f"grid rebuild mismatch: {grid.node_count} nodes vs stored {count}")
    values = np.empty(count)
    for k, row in enumerate(lines[1:count + 1]):
        x1, x2, v = row.split()
        if abs(float(x1) - grid.nodes[k, 0]) > 1e-12 or abs(float(x2) - grid.nodes[k, 1]) > 1e-12:
            raise UsageError(f"node order mismatch at row {k}")
        values[k] = float(v)
    return GridFunction(grid=grid, values=values)


@dataclass
class DiscreteRHS:
    """Cell-lumped density of a measure: per-node mass per unit cell area.

    ``atom_mass`` singles out the portion of each node's mass that came from
    Dirac atoms; the solver gives those nodes a vertex (normal-mapping area)
    equation instead of the pointwise finite-difference one, which a genuine
    density spike cannot satisfy consistently.
    """

    grid: GridDisk
    density: np.ndarray
    atom_mass: np.ndarray | None = None

    def __post_init__(self):
        self.density = np.asarray(self.density, dtype=float)
        if np.any(self.density < 0):
            raise InvalidMeasureError("negative lumped density")
        if self.atom_mass is None:
            self.atom_mass = np.zeros_like(self.density)
        else:
            self.atom_mass = np.asarray(self.atom_mass, dtype=float)

    def total_mass(self) -> float:
        return float(self.density.sum()) * self.grid.h**2


def discretize_measure(measure: SourceMeasure, grid: GridDisk) -> DiscreteRHS:
    """Midpoint-rule sampling of the density plus exact bilinear atom lumping."""
    if measure.dimension != 2:
        raise UsageError("grids are planar")
    if (measure.omega_radius > 0 or measure.atoms) and grid.R < measure.omega_radius:
        raise CoverageError("grid does not cover the perturbation region")
    pts = grid.nodes
    r2 = (pts**2).sum(axis=1)
    inside = r2 < measure.omega_radius**2
    dens = np.empty(grid.node_count)
    if np.any(inside):
        if measure.compact_density is None:
            dens[inside] = 0.0
        else:
            dens[inside] = measure.compact_density(pts[inside])
    if np.any(~inside):
        dens[~inside] = measure.density(pts[~inside])
    if np.any(dens < 0):
        raise InvalidMeasureError("negative density sampled at grid nodes")

    h = grid.h
    atom_mass = np.zeros(grid.node_count)
    for (px, py), mass in measure.atoms:
        fi, fj = math.floor(px / h + 1e-12), math.floor(py / h + 1e-12)
        tx, ty = px / h - fi, py / h - fj
        weights = ((0, 0, (1 - tx) * (1 - ty)), (1, 0, tx * (1 - ty)),
                   (0, 1, (1 - tx) * ty), (1, 1, tx * ty))
        for di, dj, w in weights:
            if w <= 1e-15:
                continue
            idx = grid.node_index(fi + di, fj + dj)
            if idx is None:
                raise CoverageError(f"atom at ({px}, {py}) lumps onto a node outside the grid")
            dens[idx] += w * mass / h**2
            atom_mass[idx] += w * mass
    return DiscreteRHS(grid=grid, density=dens, atom_mass=atom_mass)
