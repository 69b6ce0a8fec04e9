"""Monge-Ampere measures of piecewise-linear convex functions.

A sampled function (nodes x_i, values v_i) is replaced by its convex envelope:
the lower hull of the lifted points (x_i, v_i).  The subdifferential of the
envelope at a hull vertex is a convex polygon in gradient space, namely the
cell of the normal fan at that vertex:

  * at a vertex interior to the node domain the cell is the convex hull of
    the gradients of the incident facets;
  * at a vertex on the domain boundary the cell is unbounded and is clipped
    against a gradient bounding region (by default the convex hull G of all
    facet gradients, which makes the cells tile G exactly).

The Monge-Ampere measure of a PL convex function is purely atomic on hull
vertices with atom mass = cell area, and the total mass over all vertices
equals the area of G because the cells partition it.  These cell areas are
the independent oracle used to verify the finite-difference solver and the
radial constructions.

Conventions: nodes on the 2-d convex hull of the domain are flagged truncated
and are excluded from region mass queries (their cells depend on the clip
region, not on the function).  Degenerate coplanar lifted points are resolved
by qhull after a lexicographic pre-sort of the nodes, which fixes the facet
set deterministically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateDomainError, UsageError

_AREA_TOL = 1e-12


# ---------------------------------------------------------------------------
# polygon primitives
# ---------------------------------------------------------------------------


def polygon_area(poly: np.ndarray) -> float:
    """Shoelace area of a polygon given as an (m, 2) vertex array (any orientation)."""
    p = np.asarray(poly, dtype=float)
    if p.shape[0] < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    return abs(float(cross.sum())) / 2.0


def clip_halfplane(poly: np.ndarray, normal, offset: float) -> np.ndarray:
    """Clip a convex polygon to {p : normal . p <= offset} (Sutherland-Hodgman)."""
    if poly.shape[0] == 0:
        return poly
    n = np.asarray(normal, dtype=float)
    d = poly @ n - offset
    inside = d <= 1e-14 * max(1.0, abs(offset))
    if inside.all():
        return poly
    if not inside.any():
        return np.empty((0, 2))
    out = []
    m = poly.shape[0]
    for i in range(m):
        j = (i + 1) % m
        if inside[i]:
            out.append(poly[i])
        if inside[i] != inside[j]:
            t = d[i] / (d[i] - d[j])
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.asarray(out)


def points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Crossing-number containment test, vectorized over points."""
    pts = np.asarray(points, dtype=float)
    p = np.asarray(poly, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(pts.shape[0], dtype=bool)
    m = p.shape[0]
    for i in range(m):
        x1, y1 = p[i]
        x2, y2 = p[(i + 1) % m]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < np.where(crosses, xint, np.inf))
    return inside


def least_norm_point(poly: np.ndarray) -> np.ndarray:
    """Point of minimal Euclidean norm in a convex polygon (vertices in order)."""
    p = np.asarray(poly, dtype=float)
    if p.shape[0] == 0:
        raise UsageError("empty polygon has no least-norm point")
    if p.shape[0] == 1:
        return p[0].copy()
    if points_in_polygon(np.zeros((1, 2)), p)[0]:
        return np.zeros(2)
    best, best_norm = None, np.inf
    m = p.shape[0]
    for i in range(m):
        a, b = p[i], p[(i + 1) % m]
        ab = b - a
        denom = float(ab @ ab)
        t = 0.0 if denom == 0 else float(np.clip(-(a @ ab) / denom, 0.0, 1.0))
        cand = a + t * ab
        nrm = float(np.hypot(*cand))
        if nrm < best_norm:
            best, best_norm = cand, nrm
    return best


def _order_ccw(points: np.ndarray) -> np.ndarray:
    """Order points of a convex cell counterclockwise around their centroid."""
    c = points.mean(axis=0)
    ang = np.arctan2(points[:, 1] - c[1], points[:, 0] - c[0])
    return points[np.argsort(ang, kind="stable")]


def convex_polygon_intersection_area(a: np.ndarray, b: np.ndarray) -> float:
    poly = np.asarray(a, dtype=float)
    bb = np.asarray(b, dtype=float)
    m = bb.shape[0]
    # walk b's edges as half-planes; b must be CCW
    if m >= 3 and _signed_area(bb) < 0:
        bb = bb[::-1]
    for i in range(m):
        p0, p1 = bb[i], bb[(i + 1) % m]
        edge = p1 - p0
        normal = np.array([edge[1], -edge[0]])  # outward for CCW
        poly = clip_halfplane(poly, normal, float(normal @ p0))
        if poly.shape[0] == 0:
            return 0.0
    return polygon_area(poly)


def _signed_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return float((x * np.roll(y, -1) - np.roll(x, -1) * y).sum()) / 2.0


# ---------------------------------------------------------------------------
# the PL convex envelope
# ---------------------------------------------------------------------------


@dataclass
class PLConvexFunction:
    """Convex envelope of lifted samples with its facet/vertex structure."""

    nodes: np.ndarray          # (N, 2)
    values: np.ndarray         # (N,)
    facets: np.ndarray         # (F, 3) node indices of lower-hull triangles
    gradients: np.ndarray      # (F, 2) facet plane gradients
    is_vertex: np.ndarray      # (N,) node is a vertex of the lower hull
    is_boundary: np.ndarray    # (N,) node lies on the 2-d hull of the domain
    gradient_bounds: np.ndarray | None = None  # clip polygon for boundary cells
    _cells: dict = field(default_factory=dict, repr=False)
    _masses: np.ndarray | None = field(default=None, repr=False)
    _vertex_facets: tuple | None = field(default=None, repr=False)
    _gradient_hull: np.ndarray | None = field(default=None, repr=False)

    # -- structure queries ----------------------------------------------------

    @property
    def non_vertex_nodes(self) -> np.ndarray:
        """Nodes witnessing non-strict convexity (interior to a facet or above the hull)."""
        return np.where(~self.is_vertex)[0]

    def _vertex_facet_map(self):
        if self._vertex_facets is None:
            order = np.argsort(self.facets.ravel(), kind="stable")
            flat = self.facets.ravel()[order]
            fids = np.repeat(np.arange(self.facets.shape[0]), 3)[order]
            starts = np.searchsorted(flat, np.arange(self.nodes.shape[0]))
            ends = np.searchsorted(flat, np.arange(self.nodes.shape[0]) + 1)
            self._vertex_facets = (fids, starts, ends)
        return self._vertex_facets

    def incident_facets(self, node: int) -> np.ndarray:
        fids, starts, ends = self._vertex_facet_map()
        return fids[starts[node]:ends[node]]

    def gradient_hull(self) -> np.ndarray:
        """Convex hull G of all facet gradients, counterclockwise."""
        if self._gradient_hull is None:
            g = self.gradients
            if g.shape[0] < 3:
                self._gradient_hull = _order_ccw(np.unique(g, axis=0))
            else:
                try:
                    h = ConvexHull(g)
                    self._gradient_hull = g[h.vertices]
                except QhullError:
                    self._gradient_hull = _order_ccw(np.unique(g, axis=0))
        return self._gradient_hull

    # -- subdifferential cells --------------------------------------------------

    def subgradient_polygon(self, node: int) -> tuple[np.ndarray, bool]:
        """The cell of the normal fan at a node: (ccw polygon, truncated flag).

        Non-vertex nodes return an empty polygon (no atom there).  Boundary
        vertices are clipped against the gradient bounds and flagged truncated.
        """
        cached = self._cells.get(node)
        if cached is not None:
            return cached
        if not self.is_vertex[node]:
            result = (np.empty((0, 2)), False)
        elif not self.is_boundary[node]:
            grads = self.gradients[self.incident_facets(node)]
            result = (_order_ccw(grads), False)
        else:
            result = (self._boundary_cell(node), True)
        self._cells[node] = result
        return result

    def _boundary_cell(self, node: int) -> np.ndarray:
        bounds = self.gradient_bounds
        poly = np.asarray(bounds, dtype=float) if bounds is not None else self.gradient_hull()
        if _signed_area(poly) < 0:
            poly = poly[::-1]
        x0 = self.nodes[node]
        v0 = self.values[node]
        neighbors = np.unique(self.facets[self.incident_facets(node)])
        for j in neighbors:
            if j == node:
                continue
            # p . (x_j - x0) <= v_j - v0 for every hull neighbor
            poly = clip_halfplane(poly, self.nodes[j] - x0, float(self.values[j] - v0))
            if poly.shape[0] == 0:
                break
        return poly

    def atom_masses(self) -> np.ndarray:
        """Cell areas for every node (zero off vertices); vectorized interior pass."""
        if self._masses is not None:
            return self._masses
        N = self.nodes.shape[0]
        masses = np.zeros(N)
        fids, starts, ends = self._vertex_facet_map()
        counts = ends - starts
        interior = self.is_vertex & ~self.is_boundary
        # bucket interior vertices by incident-facet count for vectorized shoelace
        for deg in np.unique(counts[interior]):
            if deg < 3:
                continue
            sel = np.where(interior & (counts == deg))[0]
            if sel.size == 0:
                continue
            idx = np.stack([fids[starts[i]:ends[i]] for i in sel])
            grads = self.gradients[idx]                      # (m, deg, 2)
            c = grads.mean(axis=1, keepdims=True)
            ang = np.arctan2(grads[..., 1] - c[..., 1], grads[..., 0] - c[..., 0])
            order = np.argsort(ang, axis=1, kind="stable")
            g = np.take_along_axis(grads, order[..., None], axis=1)
            x, y = g[..., 0], g[..., 1]
            cross = x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y
            masses[sel] = np.abs(cross.sum(axis=1)) / 2.0
        for i in np.where(self.is_vertex & self.is_boundary)[0]:
            poly, _ = self.subgradient_polygon(int(i))
            masses[i] = polygon_area(poly)
        self._masses = masses
        return masses


def lower_hull(nodes, values, gradient_bounds=None, collar_width: float | None = None) -> PLConvexFunction:
    """Build the convex envelope of sampled data.

    Nodes are pre-sorted lexicographically before the hull call so degenerate
    (coplanar) configurations triangulate the same way on every run; results
    are reported in the caller's node order.

    ``collar_width`` controls which nodes count as boundary: every node whose
    distance to the domain hull is below it (default: 1.2 typical spacings,
    one node deep).  Cells inside the collar depend on how the domain was cut
    and are excluded from mass queries.
    """
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    if nodes.ndim != 2 or nodes.shape[1] != 2 or values.shape != (nodes.shape[0],):
        raise UsageError("nodes must be (N, 2) and values (N,)")
    if nodes.shape[0] < 3:
        raise DegenerateDomainError("need at least 3 nodes")

    order = np.lexsort((nodes[:, 1], nodes[:, 0]))
    inverse = np.empty_like(order)
    inverse[order] = np.arange(order.size)
    snodes = nodes[order]
    svalues = values[order]

    # a synthetic apex far above the data makes flat lifts (affine samples)
    # full-dimensional without touching the lower hull
    span = float(np.abs(snodes).max() + np.ptp(svalues) + 1.0)
    apex = np.array([[snodes[:, 0].mean(), snodes[:, 1].mean(), svalues.max() + 10.0 * span]])
    lifted = np.vstack([np.column_stack([snodes, svalues]), apex])
    try:
        hull3 = ConvexHull(lifted, qhull_options="Qt")
    except QhullError as exc:
        raise DegenerateDomainError(f"lifted point set is degenerate: {exc}") from exc

    apex_id = snodes.shape[0]
    no_apex = ~(hull3.simplices == apex_id).any(axis=1)
    normals = hull3.equations[:, :3]
    lower = no_apex & (normals[:, 2] < -1e-12)
    facets_sorted = hull3.simplices[lower]
    if facets_sorted.shape[0] == 0:
        raise DegenerateDomainError("no lower facets: all nodes collinear?")
    # facet gradient from its outward normal (a, b, c): v = -(a x + b y + off)/c
    nrm = normals[lower]
    grads = -nrm[:, :2] / nrm[:, 2:3]

    vertex_sorted = np.zeros(snodes.shape[0], dtype=bool)
    vertex_sorted[np.unique(facets_sorted)] = True

    # domain boundary collar: nodes within a typical spacing of the 2-d hull
    try:
        hull2 = ConvexHull(snodes)
        A, b = hull2.equations[:, :2], hull2.equations[:, 2]
        dist_in = -(snodes @ A.T + b[None, :]).max(axis=1)  # >= 0 inside
        if collar_width is None:
            spacing = math.sqrt(hull2.volume / snodes.shape[0])  # 2-d: volume is area
            collar_width = 1.2 * spacing
        boundary_sorted = dist_in < collar_width
    except QhullError as exc:
        raise DegenerateDomainError(f"node set is degenerate: {exc}") from exc

    # map sorted-node indices back to caller order
    facets = order[facets_sorted]
    is_vertex = np.zeros(nodes.shape[0], dtype=bool)
    is_vertex[order] = vertex_sorted
    is_boundary = np.zeros(nodes.shape[0], dtype=bool)
    is_boundary[order] = boundary_sorted

    gb = None if gradient_bounds is None else np.asarray(gradient_bounds, dtype=float)
    return PLConvexFunction(
        nodes=nodes,
        values=values,
        facets=facets,
        gradients=grads,
        is_vertex=is_vertex,
        is_boundary=is_boundary,
        gradient_bounds=gb,
    )


# ---------------------------------------------------------------------------
# measure queries
# ---------------------------------------------------------------------------


def ma_mass(f: PLConvexFunction, region: np.ndarray | None = None, include_boundary: bool = False) -> float:
    """Monge-Ampere mass of the region: sum of cell areas over hull vertices inside.

    The one-node boundary collar (domain-hull nodes) is excluded unless
    ``include_boundary`` is set, because its cells reflect the clip region.
    ``region`` is a polygon; None means every node.
    """
    masses = f.atom_masses()
    keep = f.is_vertex.copy()
    if not include_boundary:
        keep &= ~f.is_boundary
    if region is not None:
        keep &= points_in_polygon(f.nodes, np.asarray(region, dtype=float))
    return float(masses[keep].sum())


@dataclass(frozen=True)
class MeasureReport:
    """Atomic decomposition of a PL Monge-Ampere measure."""

    node_masses: np.ndarray
    total: float
    atoms: tuple  # ((x, y), mass) above the threshold


def measure_report(
    f: PLConvexFunction,
    region: np.ndarray | None = None,
    atom_threshold: float = 0.0,
    include_boundary: bool = False,
) -> MeasureReport:
    masses = f.atom_masses()
    keep = f.is_vertex.copy()
    if not include_boundary:
        keep &= ~f.is_boundary
    if region is not None:
        keep &= points_in_polygon(f.nodes, np.asarray(region, dtype=float))
    total = float(masses[keep].sum())
    atoms = []
    if atom_threshold > 0:
        for i in np.where(keep & (masses > atom_threshold))[0]:
            atoms.append(((float(f.nodes[i, 0]), float(f.nodes[i, 1])), float(masses[i])))
        atoms.sort(key=lambda am: -am[1])
    return MeasureReport(node_masses=masses * keep, total=total, atoms=tuple(atoms))


def total_mass_identity_gap(f: PLConvexFunction) -> float:
    """|sum of all cell areas - area(G)|: zero because the cells tile the
    gradient hull G (up to polygon-area arithmetic)."""
    masses = f.atom_masses()
    return abs(float(masses.sum()) - polygon_area(f.gradient_hull()))


@dataclass(frozen=True)
class ComparisonResult:
    """Outcome of the discrete comparison check between two sampled functions."""

    violation_node: int | None
    max_violation: float
    measures_ordered: bool   # Mu >= Mv at every interior vertex
    boundary_ordered: bool   # u <= v on the domain boundary nodes

    @property
    def passed(self) -> bool:
        return self.violation_node is None


def discrete_comparison(u: PLConvexFunction, v: PLConvexFunction, tol: float = 1e-9) -> ComparisonResult:
    """Check the comparison-principle conclusion u <= v at every node.

    If Mu >= Mv on all interior atoms and u <= v on the boundary nodes, the
    conclusion must hold; the premises are reported alongside so a failed
    conclusion with intact premises flags a solver or construction bug.
    Returns the first conclusion-violating node in lexicographic order.
    """
    if u.nodes.shape != v.nodes.shape or not np.array_equal(u.nodes, v.nodes):
        raise UsageError("discrete comparison requires identical node sets")
    mu = u.atom_masses()
    mv = v.atom_masses()
    interior = ~u.is_boundary
    scale = max(1.0, float(np.abs(mv).max()))
    measures_ordered = bool(np.all(mu[interior] >= mv[interior] - tol * scale))
    vscale = max(1.0, float(np.abs(v.values).max()))
    boundary_ordered = bool(np.all(u.values[u.is_boundary] <= v.values[u.is_boundary] + tol * vscale))

    diff = u.values - v.values
    bad = diff > tol * vscale
    if not bad.any():
        return ComparisonResult(None, float(diff.max()), measures_ordered, boundary_ordered)
    cand = np.where(bad)[0]
    order = np.lexsort((u.nodes[cand, 1], u.nodes[cand, 0]))
    first = int(cand[order[0]])
    return ComparisonResult(first, float(diff.max()), measures_ordered, boundary_ordered)
