import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cphabc.fem import (
    EllipseMask,
    LagrangeBasis,
    LineGrid1D,
    QuadratureRule,
    assemble_line_mass,
    assemble_line_stiffness,
    assemble_mass_2d,
    assemble_stiffness_2d,
    boundary_trace_map,
    build_grid_2d,
    gauss_lobatto_points,
    interpolate,
    point_functional,
    write_snapshot,
)

ORDERS = [1, 2, 3, 4]


def test_gll_points_known_values():
    assert np.allclose(gauss_lobatto_points(2), [0.0, 0.5, 1.0])
    # interior GLL points for p = 3 on [-1, 1] are +-1/sqrt(5)
    s = 1 / np.sqrt(5)
    assert np.allclose(gauss_lobatto_points(3), 0.5 * (np.array([-1, -s, s, 1]) + 1), atol=1e-15)


@pytest.mark.parametrize("p", ORDERS)
@pytest.mark.parametrize("nodes", ["gll", "equispaced"])
def test_partition_of_unity(p, nodes):
    rng = np.random.default_rng(p)
    xi = rng.random(100)
    b = LagrangeBasis(p, nodes)
    assert np.abs(b.values(xi).sum(axis=1) - 1).max() < 1e-13
    assert np.abs(b.derivatives(xi).sum(axis=1)).max() < 1e-11


@pytest.mark.parametrize("p", ORDERS)
def test_basis_is_nodal(p):
    b = LagrangeBasis(p)
    assert np.allclose(b.values(b.nodes), np.eye(p + 1), atol=1e-14)


@pytest.mark.parametrize("p", ORDERS)
def test_quadrature_exact_to_degree_2p(p):
    q = QuadratureRule.for_order(p)
    for k in range(2 * p + 1):
        assert q.integrate(lambda x: x**k) == pytest.approx(1 / (k + 1), rel=1e-14)


@pytest.mark.parametrize("p", ORDERS)
def test_reference_matrices(p):
    m, k = LagrangeBasis(p).reference_matrices()
    assert m.sum() == pytest.approx(1.0, rel=1e-14)
    assert np.allclose(m, m.T) and np.allclose(k, k.T)
    assert np.abs(k @ np.ones(p + 1)).max() < 1e-12
    x = LagrangeBasis(p).nodes
    assert x @ k @ x == pytest.approx(1.0, rel=1e-12)  # int (x')^2 = 1


@pytest.mark.parametrize("p", ORDERS)
def test_global_mass_integrates_area_and_stiffness_kernel(p):
    g = build_grid_2d(((-0.1, 0.1), (-0.1, 0.0)), 0.05, p)
    M = assemble_mass_2d(g)
    K = assemble_stiffness_2d(g)
    one = np.ones(g.n_nodes)
    assert one @ M @ one == pytest.approx(0.02, rel=1e-13)
    assert np.abs(K @ one).max() < 1e-11
    assert abs(K - K.T).max() < 1e-13


@pytest.mark.parametrize("p", ORDERS)
def test_patch_test_affine_fields(p):
    g = build_grid_2d(((0.0, 0.3), (-0.2, 0.0)), 0.1, p)
    K = assemble_stiffness_2d(g)
    u = interpolate(g, lambda x, y: 2.0 - 3.0 * x + 0.7 * y)
    r = K @ u
    on_boundary = np.zeros(g.n_nodes, bool)
    for tag in ("surface", "bottom", "inflow", "outflow"):
        on_boundary[boundary_trace_map(g, tag)] = True
    assert np.abs(r[~on_boundary]).max() < 1e-11
    # energy of the affine field equals |grad u|^2 * area
    assert u @ r == pytest.approx((9.0 + 0.49) * 0.06, rel=1e-12)


def test_grid_layout_and_traces():
    g = build_grid_2d(((-0.1, 0.1), (-0.1, 0.0)), 0.05, 2)
    assert (g.Nx, g.Ny) == (9, 5)
    assert g.n_nodes == 45 and g.n_elements == 8
    bottom = boundary_trace_map(g, "bottom")
    outflow = boundary_trace_map(g, "outflow")
    assert bottom[-1] == outflow[0]  # shared corner Q_out
    assert np.all(np.diff(g.coords[boundary_trace_map(g, "surface"), 0]) > 0)
    assert np.allclose(g.coords[boundary_trace_map(g, "inflow"), 0], -0.1)
    with pytest.raises(KeyError):
        boundary_trace_map(g, "top")


def test_grid_rejects_non_divisible_lengths():
    with pytest.raises(ValueError):
        build_grid_2d(((0.0, 0.1), (-0.1, 0.0)), 0.03, 2)


def test_obstacle_mask_deactivates_elements():
    mask = EllipseMask((0.05, -0.01), (0.01, 0.005))
    g = build_grid_2d(((-0.1, 0.1), (-0.025, 0.0)), 0.005, 2, mask=mask)
    full = build_grid_2d(((-0.1, 0.1), (-0.025, 0.0)), 0.005, 2)
    assert g.n_elements < full.n_elements
    assert g.n_nodes < full.n_nodes
    assert g.active_area == pytest.approx(0.2 * 0.025 - (full.n_elements - g.n_elements) * 0.005**2)
    M = assemble_mass_2d(g)
    one = np.ones(g.n_nodes)
    assert one @ M @ one == pytest.approx(g.active_area, rel=1e-13)
    assert len(g.obstacle_faces) > 0


def test_mask_must_fit_inside_domain():
    with pytest.raises(ValueError):
        build_grid_2d(((-0.1, 0.1), (-0.025, 0.0)), 0.005, 2, mask=EllipseMask((0.0, -0.02), (0.01, 0.01)))


@pytest.mark.parametrize("p", ORDERS)
def test_line_matrices(p):
    line = LineGrid1D.uniform(-0.1, 0.0, 0.025, p, labels={"Q": 0, "P": -1})
    M, K = assemble_line_mass(line), assemble_line_stiffness(line)
    one = np.ones(line.n_nodes)
    assert one @ M @ one == pytest.approx(0.1, rel=1e-13)
    assert np.abs(K @ one).max() < 1e-10
    assert line.coords @ K @ line.coords == pytest.approx(0.1, rel=1e-11)  # int (x')^2 over the line
    assert point_functional(line, "P") == line.n_nodes - 1
    with pytest.raises(KeyError):
        point_functional(line, "R")


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.floats(-2, 2), st.floats(-2, 2))
def test_mass_reproduces_integral_of_affine(p, a, b):
    g = build_grid_2d(((0.0, 0.2), (-0.1, 0.0)), 0.05, p)
    M = assemble_mass_2d(g)
    u = interpolate(g, lambda x, y: a * x + b * y)
    # int (a x + b y) over [0, 0.2] x [-0.1, 0] = a*0.002 - b*0.001
    assert np.ones(g.n_nodes) @ M @ u == pytest.approx(a * 0.002 - b * 0.001, abs=1e-14)


def test_write_snapshot(tmp_path):
    g = build_grid_2d(((0.0, 0.1), (-0.1, 0.0)), 0.1, 1)
    write_snapshot(tmp_path / "s.csv", g, np.arange(4.0))
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "x,y,value"
    assert len(lines) == 5


def test_boundary_tags_share_corners():
    g = build_grid_2d(((-0.1, 0.1), (-0.1, 0.0)), 0.05, 2)
    tags = g.boundary_tag_of()
    q_out = boundary_trace_map(g, "bottom")[-1]
    p_in = boundary_trace_map(g, "surface")[0]
    assert sorted(tags[int(q_out)]) == ["bottom", "outflow"]
    assert sorted(tags[int(p_in)]) == ["inflow", "surface"]
    assert len(tags) == 2 * (g.Nx + g.Ny) - 4
