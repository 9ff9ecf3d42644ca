"""Monolithic second-order system ``M a + C v + K u = F(t)`` for the coupled
surface/basin model with Padé-type absorbing boundaries.

Row scalings (the weak forms are multiplied by these factors):

* basin rows: ``rho / c_f**2`` so that the surface/basin coupling blocks of
  ``C`` are exact negatives of each other's transposes;
* surface rows: unscaled;
* auxiliary rows of index ``n``: ``w_n = (2/M) c_n / (1 + c_n)`` (times
  ``rho / c_f**2`` for line fields), which makes the corner couplings
  symmetric and keeps every auxiliary column proportional to ``c_n``.

Vertical auxiliary lines are numbered from the bottom corner Q to the
surface point P, bottom lines from Q_in to Q_out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fem import (
    StructuredGrid2D,
    assemble_line_mass,
    assemble_line_stiffness,
    assemble_mass_2d,
    assemble_stiffness_2d,
    boundary_trace_map,
)
from .pade import PadeSet, PhysicalParams
from .sparse import TripletBuilder, compile_matrix

SIDES = ("in", "out")
_SIDE_TAG = {"in": "inflow", "out": "outflow"}


@dataclass(frozen=True)
class HabcOptions:
    sides: bool = True
    bottom: bool = True
    corner: str = "ode"  # "ode" | "neumann"
    surface: bool = True  # False: pure wave equation with a rigid top wall
    allow_incompatible: bool = False
    # "null_aux": dropped auxiliary fields are set to zero, so their
    # -c_n d_t(phi) share of the boundary sum stays; "drop_terms": dropped
    # indices vanish from every sum.
    reduction: str = "null_aux"

    def __post_init__(self):
        if self.corner not in ("ode", "neumann"):
            raise ValueError(f"corner must be 'ode' or 'neumann', got {self.corner!r}")
        if self.reduction not in ("null_aux", "drop_terms"):
            raise ValueError(f"reduction must be 'null_aux' or 'drop_terms', got {self.reduction!r}")


@dataclass
class FieldLayout:
    """Ordered, contiguous DOF blocks."""

    blocks: list = field(default_factory=list)  # (key, offset, size)
    index: dict = field(default_factory=dict)

    def add(self, key, size: int) -> None:
        if key in self.index:
            raise ValueError(f"duplicate block {key!r}")
        off = self.size
        self.blocks.append((key, off, int(size)))
        self.index[key] = (off, int(size))

    @property
    def size(self) -> int:
        if not self.blocks:
            return 0
        _, off, n = self.blocks[-1]
        return off + n

    def offset(self, key) -> int:
        return self.index[key][0]

    def slice(self, key) -> slice:
        off, n = self.index[key]
        return slice(off, off + n)

    def has(self, key) -> bool:
        return key in self.index

    def keys(self):
        return [k for k, _, _ in self.blocks]


def build_field_layout(grid: StructuredGrid2D, pade: PadeSet | None, params: PhysicalParams | None,
                       options: HabcOptions) -> FieldLayout:
    """``phi``, ``eta``, then per side and active index the line field
    ``("phi_aux", side, n)`` followed by its surface scalar
    ``("eta_aux", side, n)``, then the bottom lines ``("phi_bottom", m)``."""
    if options.surface and params is None:
        raise ValueError("surface coupling needs physical parameters")
    if options.surface and params.sigma > 0 and params.epsilon == 0:
        raise ValueError("surface tension requires epsilon > 0")
    if (options.sides or options.bottom) and pade is None:
        raise ValueError("HABC requested without a Padé set")
    if options.bottom and not options.sides and options.corner == "ode":
        raise ValueError("bottom HABC with corner ODEs needs the lateral HABC")
    lay = FieldLayout()
    lay.add("phi", grid.n_nodes)
    if options.surface:
        lay.add("eta", grid.Nx)
    if options.sides:
        for side in SIDES:
            for n in pade.active:
                lay.add(("phi_aux", side, n), grid.Ny)
                if options.surface:
                    lay.add(("eta_aux", side, n), 1)
    if options.bottom:
        for m in pade.active:
            lay.add(("phi_bottom", m), grid.Nx)
    return lay


@dataclass
class SystemMatrices:
    M: object
    C: object
    K: object
    load: Callable[[float], np.ndarray]
    layout: FieldLayout
    grid: StructuredGrid2D
    params: PhysicalParams
    parts: dict = field(default_factory=dict)  # physical sub-blocks for energies
    pade: PadeSet | None = None
    options: HabcOptions | None = None

    @property
    def n(self) -> int:
        return self.layout.size


class _Acc:
    def __init__(self, n):
        self.M = TripletBuilder(n)
        self.C = TripletBuilder(n)
        self.K = TripletBuilder(n)


def _sum_weights(pade: PadeSet, options: HabcOptions) -> np.ndarray:
    """Coefficients entering the ``(1 + S)`` self terms of the boundary sums."""
    return pade.coeffs if options.reduction == "null_aux" else pade.active_coeffs


def _aux_weight(pade: PadeSet, n: int) -> float:
    c = pade.c(n)
    return (2.0 / pade.M) * c / (1.0 + c)


def physical_scale(params: PhysicalParams, options: HabcOptions) -> tuple[float, float]:
    """(rho, c_f) used for the basin; the wave benchmark uses rho = 1."""
    return (params.rho if options.surface else 1.0), params.c_f


def assemble_interior(acc: _Acc, layout: FieldLayout, grid: StructuredGrid2D, params: PhysicalParams,
                      options: HabcOptions, parts: dict) -> None:
    """Basin wave equation and the basin side of the surface coupling."""
    rho, c_f = physical_scale(params, options)
    M2 = assemble_mass_2d(grid)
    K2 = assemble_stiffness_2d(grid)
    off = layout.offset("phi")
    acc.M.add_matrix(M2, off, off, rho / c_f**2)
    acc.K.add_matrix(K2, off, off, rho)
    parts["basin_mass"] = (rho / c_f**2) * M2
    parts["basin_stiffness"] = rho * K2
    if options.surface:
        ms = assemble_line_mass(grid.line("surface"))
        trace = boundary_trace_map(grid, "surface")
        acc.C.add_matrix(ms, off, layout.offset("eta"), -rho, row_map=trace)


def assemble_surface(acc: _Acc, layout: FieldLayout, grid: StructuredGrid2D, params: PhysicalParams,
                     excitation, parts: dict):
    """Surface equation rows; returns the load closure ``t -> F``."""
    rho, g, sigma, eps = params.rho, params.g, params.sigma, params.epsilon
    line = grid.line("surface")
    ms = assemble_line_mass(line)
    ks = assemble_line_stiffness(line)
    off = layout.offset("eta")
    trace = boundary_trace_map(grid, "surface")
    if eps > 0:
        acc.M.add_matrix(ms, off, off, eps * rho)
    if sigma > 0:
        acc.K.add_matrix(ks, off, off, sigma)
    acc.K.add_matrix(ms, off, off, rho * g)
    acc.C.add_matrix(ms, off, layout.offset("phi"), rho, col_map=trace)
    parts["surface_mass"] = eps * rho * ms
    parts["surface_stiffness"] = (sigma * ks + rho * g * ms).tocsr()
    parts["surface_line_mass"] = ms

    n = layout.size
    sl = layout.slice("eta")
    xs = line.coords

    def load(t: float) -> np.ndarray:
        F = np.zeros(n)
        if excitation is not None:
            F[sl] = ms @ excitation(xs, t)
        return F

    return load


def assemble_habc_side(acc: _Acc, layout: FieldLayout, grid: StructuredGrid2D, params: PhysicalParams,
                       pade: PadeSet, side: str, options: HabcOptions) -> None:
    if side not in SIDES:
        raise ValueError(f"side must be 'in' or 'out', got {side!r}")
    rho, c_f = physical_scale(params, options)
    a_f = params.a_f if options.surface else 1.0
    a_s = params.a_s if options.surface else 1.0
    ste = options.surface and params.ste
    if ste and a_s * a_f == 0:
        raise ValueError("surface HABC needs non-zero compatibility coefficients")
    if ste and not params.is_compatible() and not options.allow_incompatible:
        raise ValueError("a_s, a_f violate c_s/a_s = c_f/a_f; set allow_incompatible for diagnostics")

    tag = _SIDE_TAG[side]
    line = grid.line(tag)
    mg = assemble_line_mass(line)
    kg = assemble_line_stiffness(line)
    trace = boundary_trace_map(grid, tag)
    phi = layout.offset("phi")
    twoM = 2.0 / pade.M
    S = twoM * float(np.sum(_sum_weights(pade, options)))
    top = line.n_nodes - 1

    # flux replacement in the basin rows
    acc.C.add_matrix(mg, phi, phi, (rho * a_f / c_f) * (1.0 + S), row_map=trace, col_map=trace)
    for n in pade.active:
        c = pade.c(n)
        w = _aux_weight(pade, n)
        aux = layout.offset(("phi_aux", side, n))
        acc.C.add_matrix(mg, phi, aux, -(rho * a_f / c_f) * twoM * c, row_map=trace)
        # a_f^2 (1+c)(phi_n - phi)'' + (1 - a_f^2) phi_n'' - c_f^2 phi_n,yy = 0
        sc = w * rho / c_f**2
        acc.M.add_matrix(mg, aux, aux, sc * (a_f**2 * c + 1.0))
        acc.M.add_matrix(mg, aux, phi, -sc * a_f**2 * (1.0 + c), col_map=trace)
        acc.K.add_matrix(kg, aux, aux, w * rho)
        if options.surface:
            eaux = layout.offset(("eta_aux", side, n))
            # line flux at P: c_f^2 d_nu phi_n = c_f^2 d_t eta_n
            acc.C.add(aux + top, eaux, -w * rho)
            _assemble_eta_aux(acc, layout, grid, params, pade, side, n, aux + top, eaux)

    if ste:
        # sigma d_nu eta at P replaced through the surface Padé condition
        eta_p = layout.offset("eta") + (0 if side == "in" else grid.Nx - 1)
        coef = params.epsilon * params.rho * params.c_s * a_s
        acc.C.add(eta_p, eta_p, coef * (1.0 + S))
        for n in pade.active:
            acc.C.add(eta_p, layout.offset(("eta_aux", side, n)), -coef * twoM * pade.c(n))


def _assemble_eta_aux(acc, layout, grid, params, pade, side, n, aux_top, eaux) -> None:
    rho, g, eps = params.rho, params.g, params.epsilon
    c = pade.c(n)
    w = _aux_weight(pade, n)
    if params.ste:
        # a_s^2 eps rho (1+c)(eta_n - eta)'' + (1 - a_s^2) eps rho eta_n'' + rho g eta_n + rho phi_n' = 0
        a_s2 = params.a_s**2
        eta_p = layout.offset("eta") + (0 if side == "in" else grid.Nx - 1)
        acc.M.add(eaux, eaux, w * eps * rho * (1.0 + a_s2 * c))
        acc.M.add(eaux, eta_p, -w * a_s2 * eps * rho * (1.0 + c))
    elif eps > 0:
        acc.M.add(eaux, eaux, w * eps * rho)
    acc.K.add(eaux, eaux, w * rho * g)
    acc.C.add(eaux, aux_top, w * rho)


def corner_coefficient(pade: PadeSet, n: int, m: int) -> float:
    """Weight ``(1 + c_m) / (1 + c_n + c_m)`` of ``phi_n`` in the corner ODE of ``phi_m^b``."""
    cn, cm = pade.c(n), pade.c(m)
    return (1.0 + cm) / (1.0 + cn + cm)


def assemble_habc_bottom(acc: _Acc, layout: FieldLayout, grid: StructuredGrid2D, params: PhysicalParams,
                         pade: PadeSet, options: HabcOptions) -> None:
    rho, c_f = physical_scale(params, options)
    line = grid.line("bottom")
    mb = assemble_line_mass(line)
    kb = assemble_line_stiffness(line)
    trace = boundary_trace_map(grid, "bottom")
    phi = layout.offset("phi")
    twoM = 2.0 / pade.M
    S = twoM * float(np.sum(_sum_weights(pade, options)))
    acc.C.add_matrix(mb, phi, phi, (rho / c_f) * (1.0 + S), row_map=trace, col_map=trace)
    for m in pade.active:
        c = pade.c(m)
        w = _aux_weight(pade, m)
        aux = layout.offset(("phi_bottom", m))
        acc.C.add_matrix(mb, phi, aux, -(rho / c_f) * twoM * c, row_map=trace)
        sc = w * rho / c_f**2
        acc.M.add_matrix(mb, aux, aux, sc * (1.0 + c))
        acc.M.add_matrix(mb, aux, phi, -sc * (1.0 + c), col_map=trace)
        acc.K.add_matrix(kb, aux, aux, w * rho)

    if options.corner != "ode" or not options.sides:
        return
    # corner closures at Q_in (first node of both lines) and Q_out
    # (last bottom node, first node of the outflow line)
    act = np.asarray(pade.active)
    c = pade.active_coeffs
    w = (2.0 / pade.M) * c / (1.0 + c)
    denom = 1.0 + c[:, None] + c[None, :]  # [n, m]
    ca = _sum_weights(pade, options)
    diag = 1.0 + twoM * (c[:, None] * ca[None, :] / (1.0 + c[:, None] + ca[None, :])).sum(axis=1)
    # row weights times (2/M) c_other (1 + c_self) / (1 + c_n + c_m)
    coup = -(rho / c_f) * (w[:, None] * twoM * c[None, :] * (1.0 + c[:, None]) / denom)
    for side, bpos in (("in", 0), ("out", grid.Nx - 1)):
        side_q = np.array([layout.offset(("phi_aux", side, n)) for n in act])
        bot_q = np.array([layout.offset(("phi_bottom", m)) for m in act]) + bpos
        k = act.size
        acc.C.add(side_q, side_q, (rho / c_f) * w * diag)
        acc.C.add(bot_q, bot_q, (rho / c_f) * w * diag)
        acc.C.add(np.repeat(side_q, k), np.tile(bot_q, k), coup.ravel())
        acc.C.add(np.repeat(bot_q, k), np.tile(side_q, k), coup.ravel())


def assemble_chwm(grid: StructuredGrid2D, params: PhysicalParams, pade: PadeSet | None,
                  options: HabcOptions, excitation=None) -> SystemMatrices:
    """Compose all contributions into compiled CSR matrices."""
    layout = build_field_layout(grid, pade, params, options)
    acc = _Acc(layout.size)
    parts: dict = {}
    assemble_interior(acc, layout, grid, params, options, parts)
    if options.surface:
        load = assemble_surface(acc, layout, grid, params, excitation, parts)
    else:
        n = layout.size

        def load(t):
            return np.zeros(n)
    if options.sides:
        for side in SIDES:
            assemble_habc_side(acc, layout, grid, params, pade, side, options)
    if options.bottom:
        assemble_habc_bottom(acc, layout, grid, params, pade, options)
    return SystemMatrices(
        M=compile_matrix(acc.M), C=compile_matrix(acc.C), K=compile_matrix(acc.K),
        load=load, layout=layout, grid=grid, params=params, parts=parts,
        pade=pade, options=options,
    )
