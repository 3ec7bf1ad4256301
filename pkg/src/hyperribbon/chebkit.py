"""Chebyshev series evaluation and truncation bounds on [-1, 1].

Closed-form bounds come in two flavours: analytic functions controlled by
a Bernstein ellipse ``E_rho`` with ``|f| <= M`` inside it, and functions
whose ``nu``-th derivative has bounded variation ``V``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

__all__ = [
    "ChebSeries",
    "AnalyticBudget",
    "SmoothnessBudget",
    "cheb_T",
    "cheb_eval",
    "cheb_coeffs",
    "cheb_points",
    "sup_error",
    "bernstein_rho",
    "bernstein_ellipse",
    "thm1_error_bound",
    "thm1_coeff_bound",
    "nonanalytic_error_bound",
    "nonanalytic_coeff_bound",
]


@dataclass(frozen=True)
class ChebSeries:
    """Truncated Chebyshev series ``sum_j coeffs[j] T_j(t)``."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(x) for x in self.coeffs)
        if len(c) < 1:
            raise DomainError("a Chebyshev series needs at least one coefficient")
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return len(self.coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, t):
        return cheb_eval(self, t)


@dataclass(frozen=True)
class AnalyticBudget:
    """Bound ``|f| <= M`` on the Bernstein ellipse with parameter ``rho``."""

    M: float
    rho: float

    def __post_init__(self):
        if not self.M > 0:
            raise DomainError(f"M must be positive, got {self.M}")
        if not self.rho > 1:
            raise DomainError(f"rho must exceed 1, got {self.rho}")


@dataclass(frozen=True)
class SmoothnessBudget:
    """Total variation ``V`` of the ``nu``-th derivative."""

    V: float
    nu: int

    def __post_init__(self):
        if not (self.V > 0 and math.isfinite(self.V)):
            raise DomainError(f"V must be positive and finite, got {self.V}")
        if self.nu < 0:
            raise DomainError(f"nu must be >= 0, got {self.nu}")


def _check_interval(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0):
        raise DomainError("Chebyshev evaluation requires |t| <= 1")
    return t


def cheb_T(j: int, t):
    """Evaluate ``T_j(t)`` by the three-term recurrence."""
    if j < 0:
        raise DomainError(f"degree must be >= 0, got {j}")
    t = _check_interval(t)
    t_prev = np.ones_like(t)
    if j == 0:
        return t_prev if t.ndim else float(t_prev)
    t_cur = t.copy()
    for _ in range(j - 1):
        t_prev, t_cur = t_cur, 2.0 * t * t_cur - t_prev
    return t_cur if t.ndim else float(t_cur)


def cheb_eval(series: ChebSeries, t):
    """Clenshaw evaluation of a Chebyshev series at ``t`` (scalar or array)."""
    t = _check_interval(t)
    c = series.coeffs
    b1 = np.zeros_like(t)
    b2 = np.zeros_like(t)
    for ck in reversed(c[1:]):
        b1, b2 = 2.0 * t * b1 - b2 + ck, b1
    out = t * b1 - b2 + c[0]
    return out if t.ndim else float(out)


def cheb_points(n: int) -> np.ndarray:
    """Chebyshev points of the second kind, ascending; ``[0.0]`` for n == 1."""
    if n < 1:
        raise DomainError("need at least one point")
    if n == 1:
        return np.zeros(1)
    k = np.arange(n)
    return -np.cos(np.pi * k / (n - 1))


def cheb_coeffs(f: Callable, N: int) -> ChebSeries:
    """Coefficients of the degree ``N-1`` interpolant at second-kind points.

    Polynomials of degree below ``N`` are reproduced exactly (up to rounding).
    ``f`` is called on a numpy array of nodes.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    if N == 1:
        return ChebSeries((float(np.asarray(f(np.zeros(1)), dtype=float).reshape(-1)[0]),))
    n = N - 1
    theta = np.pi * np.arange(N) / n
    x = np.cos(theta)
    fx = np.asarray(f(x), dtype=float) * np.ones(N)
    w = np.ones(N)
    w[0] = w[-1] = 0.5
    # discrete cosine sum over the Chebyshev-Lobatto nodes
    c = (2.0 / n) * np.cos(np.outer(np.arange(N), theta)) @ (w * fx)
    c[0] *= 0.5
    c[-1] *= 0.5
    return ChebSeries(tuple(c))


def sup_error(f: Callable, series: ChebSeries, grid: int = 2001) -> float:
    """Largest ``|f - series|`` over ``grid`` equispaced points on [-1, 1].

    This is a lower bound for the true sup-norm.
    """
    if grid < 2:
        raise DomainError("grid must contain at least 2 points")
    t = np.linspace(-1.0, 1.0, grid)
    return float(np.max(np.abs(np.asarray(f(t), dtype=float) - cheb_eval(series, t))))


def bernstein_rho(zeta: float) -> float:
    """Parameter of the largest Bernstein ellipse with semi-minor axis ``zeta``."""
    if not zeta > 0:
        raise DomainError(f"zeta must be positive, got {zeta}")
    return zeta + math.sqrt(zeta * zeta + 1.0)


def bernstein_ellipse(rho: float, n: int = 4096) -> np.ndarray:
    """``n`` complex points on the Bernstein ellipse ``E_rho``."""
    if not rho > 1:
        raise DomainError(f"rho must exceed 1, got {rho}")
    z = rho * np.exp(2j * np.pi * np.arange(n) / n)
    return 0.5 * (z + 1.0 / z)


def thm1_error_bound(budget: AnalyticBudget, N: int) -> float:
    """``2 M rho^(1-N) / (rho - 1)``: sup-norm error of the N-term truncation."""
    if N < 1:
        raise DomainError("N must be >= 1")
    M, rho = budget.M, budget.rho
    return 2.0 * M * rho ** (-N + 1) / (rho - 1.0)


def thm1_coeff_bound(budget: AnalyticBudget, j: int) -> float:
    if j < 0:
        raise DomainError("j must be >= 0")
    if j == 0:
        return float(budget.M)
    return 2.0 * budget.M * budget.rho ** (-j)


def nonanalytic_error_bound(budget: SmoothnessBudget, N: int) -> float:
    """``(2V / (pi nu)) (N - 1 - nu)^(-nu)``, valid for ``N > nu + 1`` and ``nu >= 1``."""
    V, nu = budget.V, budget.nu
    if nu < 1:
        raise DomainError("the truncation bound requires nu >= 1")
    if N <= nu + 1:
        raise DomainError(f"need N > nu + 1, got N={N}, nu={nu}")
    return 2.0 * V / (math.pi * nu) * (N - 1 - nu) ** (-nu)


def nonanalytic_coeff_bound(budget: SmoothnessBudget, j: int) -> float:
    V, nu = budget.V, budget.nu
    if j < nu + 1:
        raise DomainError(f"need j >= nu + 1, got j={j}, nu={nu}")
    return 2.0 * V / math.pi * (j - nu) ** (-(nu + 1))
