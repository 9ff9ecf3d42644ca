"""Implicit Newmark integration of ``M a + C v + K u = F(t)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparse import Factorization, SingularMatrixError, factorize


@dataclass(frozen=True)
class NewmarkParams:
    dt: float
    n_steps: int
    gamma: float = 0.5
    beta: float = 0.25

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("time step must be positive")
        if self.n_steps < 0:
            raise ValueError("n_steps must be non-negative")
        if not (2 * self.beta >= self.gamma >= 0.5):
            raise ValueError("Newmark parameters must satisfy 2 beta >= gamma >= 1/2")


@dataclass
class State:
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    t: float = 0.0

    @classmethod
    def zeros(cls, n: int, t: float = 0.0) -> "State":
        return cls(np.zeros(n), np.zeros(n), np.zeros(n), t)


def effective_matrix(sys, p: NewmarkParams) -> Factorization:
    """Factor ``M + gamma dt C + beta dt^2 K``."""
    A = sys.M + (p.gamma * p.dt) * sys.C + (p.beta * p.dt**2) * sys.K
    return factorize(A)


def consistent_acceleration(sys, u, v, t: float = 0.0) -> np.ndarray:
    """Solve ``M a = F(t) - C v - K u``; needs a non-singular mass matrix."""
    rhs = sys.load(t) - sys.C @ v - sys.K @ u
    try:
        return factorize(sys.M).solve(rhs)
    except SingularMatrixError as exc:
        raise SingularMatrixError("mass matrix is singular; start from rest instead") from exc


def newmark_step(sys, p: NewmarkParams, s: State, fact: Factorization) -> State:
    dt, g, b = p.dt, p.gamma, p.beta
    v_pred = s.v + (1.0 - g) * dt * s.a
    u_pred = s.u + dt * s.v + (0.5 - b) * dt**2 * s.a
    t1 = s.t + dt
    rhs = sys.load(t1) - sys.C @ v_pred - sys.K @ u_pred
    a1 = fact.solve(rhs)
    return State(u_pred + b * dt**2 * a1, v_pred + g * dt * a1, a1, t1)


def run(sys, p: NewmarkParams, recorders=(), state: State | None = None, stride: int = 1,
        fact: Factorization | None = None) -> State:
    """Advance ``n_steps`` steps, calling each recorder on samples taken every
    ``stride`` steps (and at t = 0).  Returns the final state."""
    if state is None:
        state = State.zeros(sys.M.shape[0])
        F0 = sys.load(0.0)
        if np.any(F0 != 0.0):
            raise ValueError("homogeneous start requires F(0) = 0")
    for rec in recorders:
        rec(state)
    if p.n_steps == 0:
        return state
    if fact is None:
        fact = effective_matrix(sys, p)
    for k in range(1, p.n_steps + 1):
        state = newmark_step(sys, p, state, fact)
        if not np.all(np.isfinite(state.u)):
            raise FloatingPointError(f"non-finite state at step {k}")
        if k % stride == 0:
            for rec in recorders:
                rec(state)
    return state
