"""Structured high-order Lagrange finite elements on rectangles and lines.

Grids are uniform: every 2D element is the same ``hx x hy`` rectangle, so the
element matrices are computed once on the reference square and scattered.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .sparse import TripletBuilder, compile_matrix

OUTER_TAGS = ("surface", "inflow", "outflow", "bottom")
OBSTACLE = "obstacle"


# ---------------------------------------------------------------------------
# reference element

def gauss_lobatto_points(p: int) -> np.ndarray:
    """``p + 1`` Gauss-Lobatto-Legendre points mapped to [0, 1]."""
    if p == 1:
        return np.array([0.0, 1.0])
    interior = np.polynomial.legendre.Legendre.basis(p).deriv().roots()
    pts = np.concatenate(([-1.0], np.sort(interior.real), [1.0]))
    return 0.5 * (pts + 1.0)


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss(cls, n: int) -> "QuadratureRule":
        """Gauss-Legendre rule with ``n`` points on [0, 1] (exact to degree 2n-1)."""
        x, w = np.polynomial.legendre.leggauss(n)
        return cls(0.5 * (x + 1.0), 0.5 * w)

    @classmethod
    def for_order(cls, p: int) -> "QuadratureRule":
        return cls.gauss(math.ceil((2 * p + 1) / 2))

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.points)))


class LagrangeBasis:
    """Nodal Lagrange basis of degree ``p`` on [0, 1]."""

    def __init__(self, p: int, nodes: str = "gll"):
        if not 1 <= p <= 4:
            raise ValueError(f"polynomial order must be in 1..4, got {p}")
        self.p = p
        if nodes == "gll":
            self.nodes = gauss_lobatto_points(p)
        elif nodes == "equispaced":
            self.nodes = np.linspace(0.0, 1.0, p + 1)
        else:
            raise ValueError(f"unknown node family {nodes!r}")

    def values(self, xi) -> np.ndarray:
        """Array of shape ``(len(xi), p+1)``."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        x = self.nodes
        out = np.ones((xi.size, x.size))
        for j in range(x.size):
            for m in range(x.size):
                if m != j:
                    out[:, j] *= (xi - x[m]) / (x[j] - x[m])
        return out

    def derivatives(self, xi) -> np.ndarray:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        x = self.nodes
        n = x.size
        out = np.zeros((xi.size, n))
        for j in range(n):
            for i in range(n):
                if i == j:
                    continue
                term = np.full(xi.size, 1.0 / (x[j] - x[i]))
                for m in range(n):
                    if m != i and m != j:
                        term *= (xi - x[m]) / (x[j] - x[m])
                out[:, j] += term
        return out

    def reference_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """1D reference mass and stiffness on [0, 1]."""
        q = QuadratureRule.for_order(self.p)
        phi = self.values(q.points)
        dphi = self.derivatives(q.points)
        mass = phi.T @ (q.weights[:, None] * phi)
        stiff = dphi.T @ (q.weights[:, None] * dphi)
        return mass, stiff


def reference_basis(p: int, nodes: str = "gll") -> LagrangeBasis:
    return LagrangeBasis(p, nodes)


# ---------------------------------------------------------------------------
# grids

@dataclass(frozen=True)
class EllipseMask:
    center: tuple[float, float]
    semi_axes: tuple[float, float]

    def __post_init__(self):
        if not (self.semi_axes[0] > 0 and self.semi_axes[1] > 0):
            raise ValueError("ellipse semi-axes must be positive")

    def contains(self, x, y):
        (x0, y0), (a, b) = self.center, self.semi_axes
        return ((x - x0) / a) ** 2 + ((y - y0) / b) ** 2 < 1.0


def _n_cells(length: float, h: float) -> int:
    n = round(length / h)
    if n < 1 or abs(n * h - length) > 1e-12 * max(abs(length), 1.0) * 10:
        raise ValueError(f"length {length} is not an integer multiple of h={h}")
    return int(n)


@dataclass
class LineGrid1D:
    """A polyline of nodes with labelled endpoints.

    ``coords`` holds the running coordinate (x or y); ``labels`` maps endpoint
    names to 0 (first node) or -1 (last node).
    """

    coords: np.ndarray
    n_elem: int
    p: int
    labels: dict = field(default_factory=dict)
    nodes: str = "gll"

    def __post_init__(self):
        if self.coords.size != self.n_elem * self.p + 1:
            raise ValueError("line node count must equal n_elem * p + 1")

    @classmethod
    def uniform(cls, a: float, b: float, h: float, p: int, labels=None, nodes="gll"):
        n = _n_cells(b - a, h)
        basis = LagrangeBasis(p, nodes)
        he = (b - a) / n
        coords = np.empty(n * p + 1)
        for e in range(n):
            coords[e * p : e * p + p + 1] = a + he * (e + basis.nodes)
        coords[-1] = b
        return cls(coords, n, p, dict(labels or {}), nodes)

    @property
    def n_nodes(self) -> int:
        return self.coords.size

    @property
    def length(self) -> float:
        return float(self.coords[-1] - self.coords[0])

    def element_nodes(self) -> np.ndarray:
        e = np.arange(self.n_elem)[:, None] * self.p
        return e + np.arange(self.p + 1)[None, :]


def point_functional(line: LineGrid1D, label: str) -> int:
    """Index of the labelled endpoint DOF on a line."""
    try:
        pos = line.labels[label]
    except KeyError:
        raise KeyError(f"unknown endpoint label {label!r}; have {sorted(line.labels)}") from None
    return 0 if pos == 0 else line.n_nodes - 1


class StructuredGrid2D:
    """Uniform rectangular grid of degree-``p`` Lagrange elements.

    Nodes live on an ``(ny*p+1) x (nx*p+1)`` lattice (row ``j`` along y from
    the bottom, column ``i`` along x).  Only nodes touched by an active element
    receive a DOF number; ``node_id`` maps lattice ids to DOFs (or -1).
    """

    def __init__(self, x_range, y_range, h, p, mask: EllipseMask | None = None, nodes="gll"):
        self.x_range = (float(x_range[0]), float(x_range[1]))
        self.y_range = (float(y_range[0]), float(y_range[1]))
        self.h = float(h)
        self.p = int(p)
        if not 1 <= self.p <= 4:
            raise ValueError(f"polynomial order must be in 1..4, got {p}")
        self.node_family = nodes
        self.nx = _n_cells(self.x_range[1] - self.x_range[0], h)
        self.ny = _n_cells(self.y_range[1] - self.y_range[0], h)
        self.hx = (self.x_range[1] - self.x_range[0]) / self.nx
        self.hy = (self.y_range[1] - self.y_range[0]) / self.ny
        self.basis = LagrangeBasis(self.p, nodes)
        self.mask = mask

        self.Nx = self.nx * self.p + 1
        self.Ny = self.ny * self.p + 1
        self.xs = LineGrid1D.uniform(*self.x_range, self.hx, self.p, nodes=nodes).coords
        self.ys = LineGrid1D.uniform(*self.y_range, self.hy, self.p, nodes=nodes).coords

        ex, ey = np.meshgrid(np.arange(self.nx), np.arange(self.ny))
        ex, ey = ex.ravel(), ey.ravel()
        self.active = np.ones(ex.size, dtype=bool)
        if mask is not None:
            self._check_mask(mask)
            xc = self.x_range[0] + (ex + 0.5) * self.hx
            yc = self.y_range[0] + (ey + 0.5) * self.hy
            self.active = ~mask.contains(xc, yc)
            top = ey == self.ny - 1
            assert self.active[top].all(), "obstacle deactivated an element below the surface"
        self.elem_ij = np.stack([ex[self.active], ey[self.active]], axis=1)

        loc = np.arange(self.p + 1)
        li = self.elem_ij[:, 0:1] * self.p + np.tile(loc, self.p + 1)[None, :]
        lj = self.elem_ij[:, 1:2] * self.p + np.repeat(loc, self.p + 1)[None, :]
        lattice = lj * self.Nx + li
        used = np.zeros(self.Nx * self.Ny, dtype=bool)
        used[lattice.ravel()] = True
        self.node_id = np.full(self.Nx * self.Ny, -1, dtype=np.int64)
        self.node_id[used] = np.arange(int(used.sum()))
        self.lattice_of = np.flatnonzero(used)
        self.connectivity = self.node_id[lattice]
        jj, ii = np.divmod(self.lattice_of, self.Nx)
        self.coords = np.stack([self.xs[ii], self.ys[jj]], axis=1)
        self.obstacle_faces = self._obstacle_faces()

    def _check_mask(self, m: EllipseMask):
        (x0, y0), (a, b) = m.center, m.semi_axes
        if not (self.x_range[0] < x0 - a and x0 + a < self.x_range[1]
                and self.y_range[0] < y0 - b and y0 + b < self.y_range[1]):
            raise ValueError("ellipse must lie strictly inside the domain")

    def _obstacle_faces(self):
        if self.mask is None:
            return []
        act = np.zeros((self.ny, self.nx), dtype=bool)
        act[self.elem_ij[:, 1], self.elem_ij[:, 0]] = True
        faces = []
        for ex, ey in self.elem_ij:
            for dx, dy, side in ((1, 0, "right"), (-1, 0, "left"), (0, 1, "top"), (0, -1, "bottom")):
                nx_, ny_ = ex + dx, ey + dy
                if 0 <= nx_ < self.nx and 0 <= ny_ < self.ny and not act[ny_, nx_]:
                    faces.append((int(ex), int(ey), side))
        return faces

    @property
    def n_nodes(self) -> int:
        return self.lattice_of.size

    @property
    def n_elements(self) -> int:
        return self.elem_ij.shape[0]

    @property
    def active_area(self) -> float:
        return self.n_elements * self.hx * self.hy

    def boundary_tag_of(self) -> dict:
        """Map node DOF -> list of boundary tags (outer tags and obstacle)."""
        tags: dict[int, list[str]] = {}
        for tag in OUTER_TAGS:
            for k in boundary_trace_map(self, tag):
                tags.setdefault(int(k), []).append(tag)
        for ex, ey, side in self.obstacle_faces:
            idx = self._face_nodes(ex, ey, side)
            for k in idx:
                tags.setdefault(int(k), []).append(OBSTACLE)
        return tags

    def _face_nodes(self, ex, ey, side):
        p = self.p
        loc = np.arange(p + 1)
        if side == "right":
            i, j = np.full(p + 1, (ex + 1) * p), ey * p + loc
        elif side == "left":
            i, j = np.full(p + 1, ex * p), ey * p + loc
        elif side == "top":
            i, j = ex * p + loc, np.full(p + 1, (ey + 1) * p)
        else:
            i, j = ex * p + loc, np.full(p + 1, ey * p)
        return self.node_id[j * self.Nx + i]

    def line(self, tag: str) -> LineGrid1D:
        """1D grid of the nodes along an outer boundary."""
        p, nodes = self.p, self.node_family
        if tag == "surface":
            return LineGrid1D(self.xs.copy(), self.nx, p, {"P_in": 0, "P_out": -1}, nodes)
        if tag == "bottom":
            return LineGrid1D(self.xs.copy(), self.nx, p, {"Q_in": 0, "Q_out": -1}, nodes)
        if tag == "inflow":
            return LineGrid1D(self.ys.copy(), self.ny, p, {"Q_in": 0, "P_in": -1}, nodes)
        if tag == "outflow":
            return LineGrid1D(self.ys.copy(), self.ny, p, {"Q_out": 0, "P_out": -1}, nodes)
        raise KeyError(f"unknown boundary tag {tag!r}")

    # element matrices on one (uniform) rectangle, local index b*(p+1)+a
    def element_mass(self) -> np.ndarray:
        m1, _ = self.basis.reference_matrices()
        return self.hx * self.hy * np.kron(m1, m1)

    def element_stiffness(self) -> np.ndarray:
        m1, k1 = self.basis.reference_matrices()
        return (self.hy / self.hx) * np.kron(m1, k1) + (self.hx / self.hy) * np.kron(k1, m1)


def build_grid_2d(rect, h, p, mask: EllipseMask | None = None, nodes="gll") -> StructuredGrid2D:
    """``rect = ((x0, x1), (y0, y1))``."""
    return StructuredGrid2D(rect[0], rect[1], h, p, mask=mask, nodes=nodes)


def boundary_trace_map(grid: StructuredGrid2D, tag: str) -> np.ndarray:
    """2D node DOFs along an outer boundary, ordered by increasing coordinate."""
    if tag == "surface":
        lat = (grid.Ny - 1) * grid.Nx + np.arange(grid.Nx)
    elif tag == "bottom":
        lat = np.arange(grid.Nx)
    elif tag == "inflow":
        lat = np.arange(grid.Ny) * grid.Nx
    elif tag == "outflow":
        lat = np.arange(grid.Ny) * grid.Nx + grid.Nx - 1
    else:
        raise KeyError(f"unknown boundary tag {tag!r}")
    ids = grid.node_id[lat]
    if np.any(ids < 0):
        raise ValueError(f"boundary {tag!r} touches inactive elements")
    return ids


# ---------------------------------------------------------------------------
# assembly

def scatter_element(builder: TripletBuilder, conn: np.ndarray, elem: np.ndarray, scale: float,
             row_map=None, col_map=None):
    rows = conn if row_map is None else row_map[conn]
    cols = conn if col_map is None else col_map[conn]
    n = conn.shape[1]
    r = np.repeat(rows, n, axis=1).ravel()
    c = np.tile(cols, (1, n)).ravel()
    v = np.tile(scale * elem.ravel(), conn.shape[0])
    builder.add(r, c, v)


def assemble_mass_2d(grid: StructuredGrid2D, coefficient: float = 1.0):
    b = TripletBuilder(grid.n_nodes)
    scatter_element(b, grid.connectivity, grid.element_mass(), coefficient)
    return compile_matrix(b)


def assemble_stiffness_2d(grid: StructuredGrid2D, coefficient: float = 1.0):
    b = TripletBuilder(grid.n_nodes)
    scatter_element(b, grid.connectivity, grid.element_stiffness(), coefficient)
    return compile_matrix(b)


def line_element_matrices(line: LineGrid1D) -> tuple[np.ndarray, np.ndarray]:
    """Mass and stiffness of one line element (uniform spacing assumed)."""
    m1, k1 = LagrangeBasis(line.p, line.nodes).reference_matrices()
    he = line.length / line.n_elem
    return he * m1, k1 / he


def assemble_line_mass(line: LineGrid1D, coefficient: float = 1.0):
    b = TripletBuilder(line.n_nodes)
    scatter_element(b, line.element_nodes(), line_element_matrices(line)[0], coefficient)
    return compile_matrix(b)


def assemble_line_stiffness(line: LineGrid1D, coefficient: float = 1.0):
    b = TripletBuilder(line.n_nodes)
    scatter_element(b, line.element_nodes(), line_element_matrices(line)[1], coefficient)
    return compile_matrix(b)


def interpolate(grid: StructuredGrid2D, f) -> np.ndarray:
    """Nodal interpolant of ``f(x, y)``."""
    return np.asarray(f(grid.coords[:, 0], grid.coords[:, 1]), dtype=float)


def write_snapshot(path, grid: StructuredGrid2D, values) -> None:
    """CSV with columns ``x,y,value`` (17 significant digits)."""
    values = np.asarray(values)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "value"])
        for (x, y), v in zip(grid.coords, values):
            w.writerow([f"{x:.17g}", f"{y:.17g}", f"{v:.17g}"])
