"""Padé coefficients for the square-root boundary operator, the reduction of
the auxiliary set, and the surface/basin compatibility coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

MAX_ORDER = 10**6


def pade_coefficients(N: int) -> np.ndarray:
    """Return ``c_n = tan(n pi / (2N+1))**2`` for ``n = 1..N``."""
    if int(N) != N or N < 1:
        raise ValueError(f"Padé order must be a positive integer, got {N!r}")
    if N > MAX_ORDER:
        raise ValueError(f"Padé order {N} exceeds the supported maximum {MAX_ORDER}")
    N = int(N)
    n = np.arange(1, N + 1, dtype=float)
    return np.tan(n * np.pi / (2 * N + 1)) ** 2


def reduction_active_set(N: int, keep_fraction: float = 1.0) -> tuple[int, ...]:
    """Indices of the retained auxiliary fields.

    Keeps the ``K = max(1, round(keep_fraction * N))`` largest coefficients,
    i.e. the suffix ``N-K+1..N`` (c_n increases with n).  Rounding is half-up.
    """
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError(f"keep_fraction must lie in (0, 1], got {keep_fraction!r}")
    if keep_fraction == 1.0:
        return tuple(range(1, N + 1))
    K = max(1, math.floor(keep_fraction * N + 0.5))
    K = min(K, N)
    return tuple(range(N - K + 1, N + 1))


def threshold_counts(N: int, thresholds) -> list[int]:
    c = pade_coefficients(N)
    return [int(np.count_nonzero(c > tau)) for tau in thresholds]


@dataclass(frozen=True)
class PadeSet:
    """Padé coefficients of order ``N`` with the retained (active) indices."""

    order: int
    coeffs: np.ndarray = field(repr=False, compare=False)
    active: tuple[int, ...]

    @classmethod
    def build(cls, N: int, keep_fraction: float = 1.0) -> "PadeSet":
        return cls(int(N), pade_coefficients(N), reduction_active_set(N, keep_fraction))

    @classmethod
    def with_active(cls, N: int, active) -> "PadeSet":
        active = tuple(sorted(set(int(a) for a in active)))
        if not active or active[0] < 1 or active[-1] > N:
            raise ValueError(f"active indices must be a non-empty subset of 1..{N}")
        return cls(int(N), pade_coefficients(N), active)

    def __post_init__(self):
        if len(self.coeffs) != self.order:
            raise ValueError("coefficient count does not match the order")

    @property
    def M(self) -> int:
        return 2 * self.order + 1

    @property
    def n_active(self) -> int:
        return len(self.active)

    def c(self, n: int) -> float:
        """Coefficient ``c_n`` (1-based)."""
        return float(self.coeffs[n - 1])

    @property
    def active_coeffs(self) -> np.ndarray:
        return self.coeffs[np.asarray(self.active) - 1]


def pade_sqrt(pade: PadeSet, X):
    """Evaluate the Padé approximant of ``sqrt(1 + X)`` over the active set.

    Inactive terms contribute nothing while the ``2/M`` prefactor keeps the
    full ``M = 2N+1``.
    """
    X = np.asarray(X, dtype=float)
    c = pade.active_coeffs
    denom = 1.0 + c[:, None] + X.reshape(1, -1)
    if np.any(denom == 0.0):
        raise ValueError("X hits a pole of the Padé approximant")
    terms = c[:, None] * (1.0 - (1.0 + c[:, None]) / denom)
    out = 1.0 + (2.0 / pade.M) * terms.sum(axis=0)
    return float(out[0]) if X.ndim == 0 else out.reshape(X.shape)


def pade_error_table(orders, X_grid) -> np.ndarray:
    """Absolute error ``|f_N(X) - sqrt(1+X)|``: one row per order, one column per X."""
    orders = list(orders)
    X = np.asarray(list(X_grid), dtype=float)
    if not orders or X.size == 0:
        raise ValueError("orders and X_grid must be non-empty")
    if np.any(X < 0):
        raise ValueError("X_grid must be non-negative")
    exact = np.sqrt(1.0 + X)
    return np.array([np.abs(pade_sqrt(PadeSet.build(N), X) - exact) for N in orders])


@dataclass(frozen=True)
class PhysicalParams:
    """Fluid and surface parameters.

    ``a_s`` and ``a_f`` default to the compatible choice ``a_f = 1``,
    ``a_s = c_s / c_f`` when surface tension is present, and to one otherwise.
    """

    rho: float = 1000.0
    g: float = 9.81
    sigma: float = 0.0
    epsilon: float = 0.0
    c_f: float = 1.0
    a_s: float | None = None
    a_f: float | None = None

    def __post_init__(self):
        if not (self.rho > 0 and self.g > 0 and self.c_f > 0):
            raise ValueError("rho, g and c_f must be positive")
        if self.sigma < 0 or self.epsilon < 0:
            raise ValueError("sigma and epsilon must be non-negative")
        if self.sigma > 0 and self.epsilon == 0:
            raise ValueError("surface tension sigma > 0 requires an added mass epsilon > 0")
        if self.a_s is None or self.a_f is None:
            a_s, a_f = (
                compatibility_coefficients(self, "a") if self.sigma > 0 else (1.0, 1.0)
            )
            object.__setattr__(self, "a_s", a_s if self.a_s is None else self.a_s)
            object.__setattr__(self, "a_f", a_f if self.a_f is None else self.a_f)

    @property
    def ste(self) -> bool:
        return self.sigma > 0

    @property
    def c_s(self) -> float:
        if self.sigma > 0 and self.epsilon > 0:
            return math.sqrt(self.sigma / (self.epsilon * self.rho))
        return 0.0

    def is_compatible(self, rel: float = 1e-12) -> bool:
        if not self.ste:
            return True
        lhs, rhs = self.c_s * self.a_f, self.c_f * self.a_s
        return abs(lhs - rhs) <= rel * max(abs(lhs), abs(rhs))

    def with_compat_mode(self, mode: str) -> "PhysicalParams":
        a_s, a_f = compatibility_coefficients(self, mode)
        return replace(self, a_s=a_s, a_f=a_f)


def compatibility_coefficients(params: PhysicalParams, mode: str = "a") -> tuple[float, float]:
    """Return ``(a_s, a_f)`` satisfying ``c_s / a_s = c_f / a_f``.

    mode ``"a"`` keeps the basin operator unchanged (``a_f = 1``); mode ``"b"``
    keeps the surface operator unchanged (``a_s = 1``).
    """
    if not params.sigma > 0:
        raise ValueError("compatibility coefficients need sigma > 0; disable the surface HABC instead")
    c_s = math.sqrt(params.sigma / (params.epsilon * params.rho))
    if mode == "a":
        return c_s / params.c_f, 1.0
    if mode == "b":
        return 1.0, params.c_f / c_s
    raise ValueError(f"unknown compatibility mode {mode!r} (expected 'a' or 'b')")
