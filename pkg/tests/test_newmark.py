from dataclasses import dataclass, field

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from cphabc.newmark import NewmarkParams, State, consistent_acceleration, newmark_step, run, effective_matrix
from cphabc.sparse import SingularMatrixError


@dataclass
class Toy:
    """Minimal system with the attributes the integrator reads."""

    M: sp.csr_matrix
    C: sp.csr_matrix
    K: sp.csr_matrix
    load: object = field(default=None)

    def __post_init__(self):
        if self.load is None:
            n = self.M.shape[0]
            self.load = lambda t: np.zeros(n)


def oscillator(omega, c=0.0):
    return Toy(sp.csr_matrix([[1.0]]), sp.csr_matrix([[c]]), sp.csr_matrix([[omega**2]]))


def test_parameter_validation():
    with pytest.raises(ValueError):
        NewmarkParams(0.0, 10)
    with pytest.raises(ValueError):
        NewmarkParams(0.1, -1)
    with pytest.raises(ValueError):
        NewmarkParams(0.1, 10, gamma=0.4)
    with pytest.raises(ValueError):
        NewmarkParams(0.1, 10, gamma=0.5, beta=0.2)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 50.0), st.floats(1e-3, 0.5), st.integers(1, 200))
def test_oscillator_matches_discrete_phase(omega, dt, n):
    # average acceleration: u_n = cos(n theta), tan(theta / 2) = omega dt / 2
    sys = oscillator(omega)
    s = State(np.array([1.0]), np.array([0.0]), np.array([-(omega**2)]))
    out = run(sys, NewmarkParams(dt, n), state=s)
    theta = 2 * np.arctan(omega * dt / 2)
    assert out.u[0] == pytest.approx(np.cos(n * theta), abs=1e-9)
    energy = 0.5 * out.v[0] ** 2 + 0.5 * omega**2 * out.u[0] ** 2
    assert energy == pytest.approx(0.5 * omega**2, rel=1e-10)


def test_gyroscopic_coupling_conserves_energy():
    # skew C does no work; K and M symmetric positive definite
    M = sp.diags([1.0, 2.0]).tocsr()
    K = sp.csr_matrix([[3.0, -1.0], [-1.0, 2.0]])
    C = sp.csr_matrix([[0.0, 0.7], [-0.7, 0.0]])
    sys = Toy(M, C, K)
    u0 = np.array([0.3, -0.1])
    s = State(u0, np.zeros(2), consistent_acceleration(sys, u0, np.zeros(2)))
    es = []
    run(sys, NewmarkParams(0.05, 500), [lambda st_: es.append(0.5 * st_.v @ M @ st_.v + 0.5 * st_.u @ K @ st_.u)],
        state=s)
    es = np.array(es)
    assert np.abs(es - es[0]).max() < 1e-13 * es[0]


def test_damping_dissipates():
    sys = oscillator(2.0, c=0.5)
    s = State(np.array([1.0]), np.array([0.0]), np.array([-4.0]))
    es = []
    run(sys, NewmarkParams(0.01, 300), [lambda st_: es.append(0.5 * st_.v[0] ** 2 + 2.0 * st_.u[0] ** 2)], state=s)
    assert np.all(np.diff(es) <= 0)


def test_recorder_stride_and_times():
    sys = oscillator(1.0)
    ts = []
    run(sys, NewmarkParams(0.1, 10), [lambda st_: ts.append(st_.t)], stride=3)
    assert ts == pytest.approx([0.0, 0.3, 0.6, 0.9])


def test_rest_start_requires_zero_initial_load():
    sys = oscillator(1.0)
    sys.load = lambda t: np.array([1.0])
    with pytest.raises(ValueError):
        run(sys, NewmarkParams(0.1, 2))


def test_step_matches_manual_update():
    sys = oscillator(3.0)
    p = NewmarkParams(0.1, 1)
    s = State(np.array([0.5]), np.array([0.2]), np.array([-4.5]))
    out = newmark_step(sys, p, s, effective_matrix(sys, p))
    # (1 + beta dt^2 k) a1 = -k (u + dt v + dt^2/4 a)
    a1 = -9.0 * (0.5 + 0.1 * 0.2 + 0.0025 * -4.5) / (1 + 0.25 * 0.01 * 9.0)
    assert out.a[0] == pytest.approx(a1, rel=1e-14)
    assert out.t == pytest.approx(0.1)


def test_singular_mass_rejected():
    sys = Toy(sp.csr_matrix([[0.0]]), sp.csr_matrix([[1.0]]), sp.csr_matrix([[1.0]]))
    with pytest.raises(SingularMatrixError):
        consistent_acceleration(sys, np.array([1.0]), np.array([0.0]))


def test_non_finite_state_detected():
    sys = oscillator(1.0)
    sys.load = lambda t: np.array([np.nan]) if t > 0 else np.zeros(1)
    with pytest.raises((FloatingPointError, SingularMatrixError)):
        run(sys, NewmarkParams(0.1, 3))
