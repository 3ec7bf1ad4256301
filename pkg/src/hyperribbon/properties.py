"""Randomised property suites shared by ``hyperribbon verify`` and the test suite.

Each suite returns a :class:`PropertyResult` with the number of checks made,
the number that failed and the worst margin (positive means violated).
Precondition errors are caught and reported rather than raised.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .bounds import (
    TaylorBudget,
    add_truncation_error,
    cheb_sv_bound,
    taylor_error_bound,
    taylor_width_bound,
    widths_from_spectrum,
)
from .chebkit import AnalyticBudget, cheb_coeffs, sup_error, thm1_error_bound
from .design import Grid1D, cheb_design, vandermonde_design
from .errors import HyperribbonError
from .manifold import ellipsoid_membership, enclosure_check, project_cloud
from .spectral import ese_eigenvalues, schur_lowrank, singular_values, thm2_bound

__all__ = [
    "PropertyResult",
    "random_spd",
    "check_thm2",
    "check_closed_form",
    "check_thm1",
    "check_taylor_error",
    "check_polynomial_enclosure",
    "check_adversarial_enclosure",
    "DEFAULT_EPS",
]

DEFAULT_EPS = tuple(round(0.1 * k, 1) for k in range(1, 10))
REL_TOL = 1e-9


@dataclass
class PropertyResult:
    name: str
    checks: int = 0
    violations: int = 0
    worst_margin: float = -math.inf
    status: str = "pass"
    message: str = ""
    details: dict = field(default_factory=dict)

    def record(self, margin: float, tol: float = 0.0) -> None:
        self.checks += 1
        if margin > self.worst_margin:
            self.worst_margin = float(margin)
        if margin > tol:
            self.violations += 1

    def finish(self) -> "PropertyResult":
        if self.status != "error":
            self.status = "pass" if self.violations == 0 else "fail"
        return self

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        d = asdict(self)
        if not math.isfinite(d["worst_margin"]):
            d["worst_margin"] = None
        return d


def _guard(name: str, body: Callable[[PropertyResult], None]) -> PropertyResult:
    res = PropertyResult(name)
    try:
        body(res)
    except HyperribbonError as exc:
        res.status = "error"
        res.message = f"{type(exc).__name__}: {exc}"
    return res.finish()


def random_spd(rng: np.random.Generator, N: int, cond: float = 1e3) -> np.ndarray:
    """Random symmetric positive definite matrix with spectrum log-uniform in ``[1/cond, 1]``."""
    Q, _ = np.linalg.qr(rng.standard_normal((N, N)))
    lam = np.exp(rng.uniform(-math.log(cond), 0.0, N))
    S = (Q * lam) @ Q.T
    S = 0.5 * (S + S.T)
    return S * math.exp(rng.uniform(-3.0, 3.0))


def check_thm2(trials: int = 500, eps_values: Iterable[float] = DEFAULT_EPS, seed: int = 0,
               n_max: int = 12) -> PropertyResult:
    """``lambda_{m+1}(E S E) <= eps^{2m}/(1-eps^2) max|S|`` and the Frobenius chain.

    Margins are relative: ``lambda / bound - 1``.
    """
    eps_values = tuple(float(e) for e in eps_values)

    def body(res):
        rng = np.random.default_rng(seed)
        chain = PropertyResult("frobenius_chain")
        for _ in range(trials):
            N = int(rng.integers(2, n_max + 1))
            S = random_spd(rng, N)
            for eps in eps_values:
                lam = ese_eigenvalues(S, eps) if 0 < eps < 1 else None
                e = eps ** np.arange(N)
                for m in range(1, N):
                    bound = thm2_bound(S, eps, m)
                    res.record(lam[m] / bound - 1.0, REL_TOL)
                    D = S - schur_lowrank(S, m)
                    # S - S_m vanishes identically on its first m rows and columns
                    D[:m, :] = 0.0
                    D[:, :m] = 0.0
                    fro = float(np.linalg.norm(D * np.outer(e, e)))
                    chain.record(lam[m] / fro - 1.0 if fro > 0 else (math.inf if lam[m] > 0 else -1.0),
                                 REL_TOL)
        res.details = {"trials": trials, "eps": list(eps_values),
                       "chain_checks": chain.checks, "chain_violations": chain.violations,
                       "chain_worst_margin": chain.worst_margin}
        res.violations += chain.violations

    return _guard("ese_eigenvalue_bound", body)


def check_closed_form(Ns: Sequence[int] = (5, 11, 30), scales: Sequence[float] = (1.5, 2.0, 4.236),
                      precision: int = 60, C: float = 1.0) -> PropertyResult:
    """Computed singular values of both scaled designs sit below their closed forms (j >= 2).

    Margins are relative: ``computed / bound - 1``.
    """

    def body(res):
        rows = []
        for N in Ns:
            grid = Grid1D.equispaced(N)
            for a in scales:
                sj = singular_values(cheb_design(grid, a, N), precision).floats()
                sv = singular_values(vandermonde_design(grid, a, N), precision).floats()
                b = TaylorBudget(C, a, N)
                worst = -math.inf
                for j in range(2, N + 1):
                    m1 = sj[j - 1] / cheb_sv_bound(N, a, j) - 1.0
                    m2 = 2.0 * C * math.sqrt(N) * sv[j - 1] / taylor_width_bound(b, j) - 1.0
                    res.record(m1)
                    res.record(m2)
                    worst = max(worst, m1, m2)
                rows.append({"N": N, "scale": a, "worst_margin": worst})
        res.details = {"configs": rows}

    return _guard("closed_form_dominance", body)


def _pole_budget_bound(z0: float, N: int, n_rho: int = 400) -> float:
    """Smallest analytic truncation bound over admissible ellipses for ``1/(t - z0)``.

    For a real pole the nearest point of ``E_rho`` is the vertex
    ``(rho + 1/rho)/2``, so ``M = 1/(|z0| - a)`` exactly.
    """
    rho_p = abs(z0) + math.sqrt(z0 * z0 - 1.0)
    best = math.inf
    for rho in 1.0 + (rho_p - 1.0) * np.linspace(0.01, 0.999, n_rho):
        a = 0.5 * (rho + 1.0 / rho)
        M = 1.0 / (abs(z0) - a)
        best = min(best, thm1_error_bound(AnalyticBudget(M, float(rho)), N))
    return best


def _pole_interp_error(z0: float, N: int, t: np.ndarray) -> np.ndarray:
    """Exact interpolation error of ``1/(t - z0)`` at the N Chebyshev-Lobatto points.

    ``f - p = w(t) / ((t - z0) w(z0))`` with ``w`` the node polynomial.  The
    product form has no cancellation, so it stays accurate far below the
    rounding floor of evaluating ``f - p`` directly.
    """
    nodes = np.cos(np.pi * np.arange(N) / (N - 1))
    ratio = np.prod((t[:, None] - nodes[None, :]) / (z0 - nodes[None, :]), axis=1)
    return np.abs(ratio / (t - z0))


def check_thm1(n_funcs: int = 20, Ns: Sequence[int] = tuple(range(2, 31)), seed: int = 0,
               grid: int = 2001) -> PropertyResult:
    """Interpolation error of ``1/(t - z0)`` against the analytic truncation bound.

    The error is measured with the exact remainder formula; the library's
    floating-point ``sup_error`` must agree with it to within rounding
    (checked separately and counted as a violation if not).  Margins are
    relative: ``measured / bound - 1``.
    """

    def body(res):
        rng = np.random.default_rng(seed)
        t = np.linspace(-1.0, 1.0, grid)
        poles, disagreements = [], 0
        for _ in range(n_funcs):
            rho_p = rng.uniform(1.2, 4.0)
            z0 = float(rng.choice([-1.0, 1.0]) * 0.5 * (rho_p + 1.0 / rho_p))
            poles.append(z0)
            f = (lambda z: (lambda x: 1.0 / (x - z)))(z0)
            for N in Ns:
                exact = float(np.max(_pole_interp_error(z0, N, t)))
                measured = sup_error(f, cheb_coeffs(f, N), grid)
                scale = float(np.max(np.abs(f(t))))
                if abs(measured - exact) > 1e-13 * scale + 1e-6 * exact:
                    disagreements += 1
                res.record(exact / _pole_budget_bound(z0, N) - 1.0)
        res.violations += disagreements
        res.details = {"poles": poles, "float_disagreements": disagreements}

    return _guard("chebyshev_truncation_error", body)


def _taylor_test_functions(rng: np.random.Generator, R: float):
    """Random entire test functions with closed-form Taylor coefficients about 0.

    Returns ``(f, coeff)`` with ``coeff(k, t)`` the k-th scaled derivative at t.
    """
    kind = int(rng.integers(0, 3))
    w = float(rng.uniform(0.2, 1.5) * R)
    phi = float(rng.uniform(0.0, 2.0 * math.pi))
    if kind == 0:
        f = lambda t: np.exp(w * t)  # noqa: E731
        coeff = lambda k, t: w ** k * np.exp(w * t) / math.factorial(k)  # noqa: E731
    elif kind == 1:
        f = lambda t: np.sin(w * t + phi)  # noqa: E731
        coeff = lambda k, t: w ** k * np.sin(w * t + phi + k * math.pi / 2) / math.factorial(k)  # noqa: E731
    else:
        f = lambda t: np.exp(-w * t) * (1.0 + t)  # noqa: E731
        # Leibniz: (e^{-wt}(1+t))^(k) = e^{-wt}((-w)^k (1+t) + k (-w)^(k-1))
        coeff = lambda k, t: np.exp(-w * t) * ((-w) ** k * (1.0 + t)  # noqa: E731
                                               + (k * (-w) ** (k - 1) if k else 0.0)) / math.factorial(k)
    return f, coeff


def check_taylor_error(n_funcs: int = 20, Ns: Sequence[int] = tuple(range(3, 16)), seed: int = 0,
                       C: float = 1.0, R: float = 2.0, grid: int = 2001) -> PropertyResult:
    """Taylor truncation error about 0 of budget-satisfying functions vs the closed form.

    Each function is scaled to use 99% of the budget ``sum_k (R^k a_k(t))^2 < C^2 N``
    on a dense grid, separately for every ``N``.
    """

    def body(res):
        rng = np.random.default_rng(seed)
        t = np.linspace(-1.0, 1.0, grid)
        for _ in range(n_funcs):
            f, coeff = _taylor_test_functions(rng, R)
            for N in Ns:
                lhs = sum((R ** k * coeff(k, t)) ** 2 for k in range(N))
                scale = 0.99 * C * math.sqrt(N) / math.sqrt(float(np.max(lhs)))
                p = sum(coeff(k, 0.0) * t ** k for k in range(N))
                err = scale * float(np.max(np.abs(f(t) - p)))
                res.record(err / taylor_error_bound(TaylorBudget(C, R, N)) - 1.0)

    return _guard("taylor_truncation_error", body)


def check_polynomial_enclosure(samples: int = 2000, N: int = 11, R: float = 2.0, C: float = 1.0,
                               seed: int = 0, precision: int = 60) -> PropertyResult:
    """Polynomial clouds ``Y = V D c`` with ``|c| <= r`` lie inside the ellipsoid.

    Records ``sum_j (Z_j/(r sigma_j))^2 - 1`` per sample with tolerance 1e-10.
    """

    def body(res):
        rng = np.random.default_rng(seed)
        grid = Grid1D.equispaced(N)
        X = vandermonde_design(grid, R, N)
        r = C * math.sqrt(N)
        c = rng.standard_normal((samples, N))
        c *= (r * rng.uniform(0.0, 1.0, (samples, 1)) ** (1.0 / N)) / np.linalg.norm(c, axis=1, keepdims=True)
        Y = c @ X.entries.T
        proj = project_cloud(Y, X, precision)
        q = ellipsoid_membership(proj, proj.spectrum, r)
        for v in q:
            res.record(float(v) - 1.0, 1e-10)
        rep = widths_from_spectrum(proj.spectrum, r)
        enc = enclosure_check(proj, rep)
        res.details = {"max_membership": float(np.max(q)), "componentwise_pass": enc.passed}
        if not enc.passed:
            res.violations += enc.violations

    return _guard("polynomial_enclosure", body)


def check_adversarial_enclosure(N: int = 11, R: float = 2.0, C: float = 1.0,
                                precision: int = 60) -> PropertyResult:
    """A budget-violating exponential (A = 100) must be flagged by the enclosure check.

    The margin recorded is minus the enclosure margin, so a detected violation
    counts as a pass.
    """

    def body(res):
        grid = Grid1D.equispaced(N)
        X = vandermonde_design(grid, R, N)
        b = TaylorBudget(C, R, N)
        x = (np.asarray(grid.points) + 1.0) / 2.0
        Y = np.vstack([np.zeros(N), 100.0 * np.exp(-x)])
        proj = project_cloud(Y, X, precision)
        rep = add_truncation_error(widths_from_spectrum(proj.spectrum, b.radius), taylor_error_bound(b))
        enc = enclosure_check(proj, rep)
        res.record(-enc.worst_margin)
        res.details = {"detected": not enc.passed, "enclosure_margin": enc.worst_margin}

    return _guard("adversarial_enclosure", body)
