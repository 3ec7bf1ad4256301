"""Closed-form hyperellipsoid width bounds and width reports.

A width report pairs computed cross-section diameters ``2 r sigma_j`` with
the closed-form upper bounds that apply to them and, optionally, the widths
actually spanned by a sampled manifold.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from gmpy2 import mpfr

from .chebkit import AnalyticBudget
from .errors import DegenerateFitError, DomainError
from .extreal import fmt_ext, working_precision
from .spectral import SingularSpectrum

__all__ = [
    "TaylorBudget",
    "AxisWidth",
    "WidthReport",
    "WIDTH_HEADER",
    "widths_from_spectrum",
    "add_truncation_error",
    "cheb_sv_bound",
    "hy_cheb_bound",
    "cheb_radius",
    "taylor_error_bound",
    "taylor_error_bound_2d",
    "taylor_width_bound",
    "rho_max",
    "block_exponent",
    "c2_constant",
    "bound_2d_sv",
    "bound_2d_error",
    "coeff_bound_2d",
    "radius_2d",
    "supplement_2d_width_bound",
    "KinkFit",
    "kink_split",
    "write_width_csv",
    "read_width_csv",
]

WIDTH_HEADER = ("j", "sigma", "ell_p", "ell_y", "bound_taylor", "bound_cheb", "empirical")


@dataclass(frozen=True)
class TaylorBudget:
    """Derivative budget ``sum_k (R^k y^(k) / k!)^2 < C^2 N``."""

    C: float
    R: float
    N: int

    def __post_init__(self):
        if not self.C > 0:
            raise DomainError(f"C must be positive, got {self.C}")
        if not self.R > 1:
            raise DomainError(f"R must exceed 1, got {self.R}")
        if self.N < 1:
            raise DomainError(f"N must be >= 1, got {self.N}")

    @property
    def radius(self) -> float:
        """``C sqrt(N)``: bound on the scaled Taylor coefficient vector."""
        return self.C * math.sqrt(self.N)


@dataclass(frozen=True)
class AxisWidth:
    j: int
    sigma: object
    ell_p: object
    ell_y: object
    bound_taylor: float | None = None
    bound_cheb: float | None = None
    empirical: float | None = None


@dataclass(frozen=True)
class WidthReport:
    """Per-axis widths for one design matrix, radius ``r`` and truncation error ``err``."""

    axes: tuple[AxisWidth, ...]
    r: float
    err: float = 0.0
    precision: int = 17

    def __len__(self):
        return len(self.axes)

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if getattr(a, name) is None else float(getattr(a, name))
                         for a in self.axes])

    def with_columns(self, **cols: Sequence[float | None]) -> "WidthReport":
        """Copy with closed-form / empirical columns replaced."""
        axes = list(self.axes)
        for name, values in cols.items():
            if name not in ("bound_taylor", "bound_cheb", "empirical"):
                raise DomainError(f"cannot set column {name!r}")
            values = list(values)
            if len(values) != len(axes):
                raise DomainError(f"column {name} has {len(values)} values for {len(axes)} axes")
            axes = [replace(a, **{name: None if v is None else float(v)}) for a, v in zip(axes, values)]
        return replace(self, axes=tuple(axes))

    def violations(self) -> list[tuple[int, str, float]]:
        """Axes where a closed-form column falls below the computed ``ell_p``."""
        out = []
        for a in self.axes:
            for name in ("bound_taylor", "bound_cheb"):
                b = getattr(a, name)
                if b is not None and float(a.ell_p) > b:
                    out.append((a.j, name, float(a.ell_p) - b))
        return out


def widths_from_spectrum(spectrum: SingularSpectrum | Sequence, r: float) -> WidthReport:
    """``ell_P(j) = 2 r sigma_j``; ``ell_Y`` starts equal to ``ell_P``."""
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r}")
    if isinstance(spectrum, SingularSpectrum):
        vals, prec = spectrum.values, spectrum.precision
    else:
        vals, prec = tuple(float(v) for v in spectrum), 17
    axes = []
    with working_precision(max(prec, 17)):
        two_r = 2 * mpfr(r)
        for j, s in enumerate(vals, start=1):
            ell = two_r * s if isinstance(s, type(mpfr(0))) else 2.0 * r * float(s)
            axes.append(AxisWidth(j, s, ell, ell))
    return WidthReport(tuple(axes), float(r), 0.0, prec)


def add_truncation_error(report: WidthReport, err: float) -> WidthReport:
    """``ell_Y(j) = ell_P(j) + 2 err``."""
    if not err >= 0:
        raise DomainError(f"truncation error must be nonnegative, got {err}")
    with working_precision(max(report.precision, 17)):
        axes = tuple(replace(a, ell_y=a.ell_p + 2 * mpfr(err) if isinstance(a.ell_p, type(mpfr(0)))
                             else a.ell_p + 2.0 * err) for a in report.axes)
    return replace(report, axes=axes, err=float(err))


def _need_rho(rho, name="rho"):
    if not rho > 1:
        raise DomainError(f"{name} must exceed 1, got {rho}")


def cheb_sv_bound(N: int, rho: float, j: int) -> float:
    """``sqrt(N) rho^{2-j} / sqrt(rho^2 - 1)`` for ``j >= 2``."""
    _need_rho(rho)
    if j < 2:
        raise DomainError(f"bound requires j >= 2, got {j}")
    return math.sqrt(N) * rho ** (2 - j) / math.sqrt(rho * rho - 1.0)


def cheb_radius(M: float, N: int, factor: float = 1.0) -> float:
    """Radius ``factor * M sqrt(4N - 3)`` of the scaled Chebyshev coefficient ball."""
    return factor * M * math.sqrt(4 * N - 3)


def hy_cheb_bound(budget: AnalyticBudget, N: int, j: int) -> float:
    """Width bound ``2M sqrt(4N^2 - 3N) rho^{2-j}/sqrt(rho^2-1) + 4M rho^{1-N}/(rho-1)``."""
    if not 2 <= j <= N:
        raise DomainError(f"j must lie in [2, N], got j={j}, N={N}")
    M, rho = budget.M, budget.rho
    return (2.0 * M * math.sqrt(4.0 * N * N - 3.0 * N) * rho ** (2 - j) / math.sqrt(rho * rho - 1.0)
            + 4.0 * M * rho ** (1 - N) / (rho - 1.0))


def taylor_error_bound(budget: TaylorBudget) -> float:
    """Sup-norm error of the degree ``N-1`` Taylor polynomial about 0 on [-1, 1]."""
    C, R, N = budget.C, budget.R, budget.N
    _need_rho(R, "R")
    return C * (N * R - N + R) / (1.0 - R) ** 2 * R ** (-N + 1)


def taylor_error_bound_2d(budget: TaylorBudget, terms: int = 4000) -> float:
    """Tail bound for the total-degree ``N-1`` Taylor polynomial about (0, 0) on [-1, 1]^2.

    The 2-D budget applied at total degree ``d`` gives
    ``|a_jk| <= C sqrt((d+1)(d+2)/2) R^{-d}``; summing the ``d+1`` monomials of
    each degree ``d >= N`` bounds the remainder.
    """
    C, R, N = budget.C, budget.R, budget.N
    _need_rho(R, "R")
    d = np.arange(N, N + terms, dtype=float)
    logs = np.log(d + 1) + 0.5 * np.log((d + 1) * (d + 2) / 2.0) - d * math.log(R)
    return float(C * np.sum(np.exp(logs)))


def taylor_width_bound(budget: TaylorBudget, j: int) -> float:
    """``2 C N R^{2-j} / sqrt(R^2 - 1)`` for ``j >= 2``."""
    C, R, N = budget.C, budget.R, budget.N
    _need_rho(R, "R")
    if j < 2:
        raise DomainError(f"bound requires j >= 2, got {j}")
    return 2.0 * C * N * R ** (2 - j) / math.sqrt(R * R - 1.0)


def rho_max(R: float) -> float:
    """Largest Bernstein ellipse parameter inside the distance-R neighbourhood of [-1, 1]."""
    _need_rho(R, "R")
    return R + math.sqrt(R * R + 1.0)


def block_exponent(j: int) -> int:
    """``floor(sqrt(8(j-1)+1)/2 - 1/2)``: the block index holding axis ``j``."""
    # integer square root keeps triangular-number boundaries exact
    return (math.isqrt(8 * (j - 1) + 1) - 1) // 2


def c2_constant(rho: float) -> float:
    _need_rho(rho)
    q = rho ** -2
    return (1.0 + q + q * q) / (1.0 - q) ** 3


def bound_2d_sv(N: int, rho: float, j: int) -> float:
    """``(3 sqrt(C2) / 2) n rho^{-floor(...)}`` with ``n = N(N+1)/2``."""
    _need_rho(rho)
    if j < 2:
        raise DomainError(f"bound requires j >= 2, got {j}")
    n = N * (N + 1) // 2
    return 1.5 * math.sqrt(c2_constant(rho)) * n * rho ** (-block_exponent(j))


def bound_2d_error(budget: AnalyticBudget, N: int) -> float:
    """``4 M N C1 rho^{1-N}`` with ``C1 = (2 rho - 1)/(1 - rho)^2``."""
    M, rho = budget.M, budget.rho
    c1 = (2.0 * rho - 1.0) / (1.0 - rho) ** 2
    return 4.0 * M * N * c1 * rho ** (1 - N)


def coeff_bound_2d(budget: AnalyticBudget, j: int, k: int) -> float:
    if j < 0 or k < 0:
        raise DomainError("degrees must be nonnegative")
    return 4.0 * budget.M * budget.rho ** (-(j + k))


def radius_2d(M: float, N: int) -> float:
    """``4 M sqrt(n)``, radius of the scaled 2-D Chebyshev coefficient ball."""
    return 4.0 * M * math.sqrt(N * (N + 1) / 2.0)


def supplement_2d_width_bound(N: int, rho: float, j: int) -> float:
    """Alternative 2-D width prefactor ``2 sqrt(N) (3 sqrt(C2)/2) n rho^{-floor(...)}``."""
    return 2.0 * math.sqrt(N) * bound_2d_sv(N, rho, j)


@dataclass(frozen=True)
class KinkFit:
    j_kink: int
    slope_lo: float
    slope_hi: float
    sse: float
    used: int


def kink_split(spectrum: SingularSpectrum | Sequence, R: float | None = None,
               min_segment: int = 8, guard: int = 12) -> KinkFit:
    """Two-segment least-squares fit of ``log10 sigma_j`` against ``j``.

    Every interior breakpoint leaving ``min_segment`` points on each side is
    tried; ``j_kink`` is the first index of the second segment.  Values at or
    below the relative-accuracy floor ``10^-(precision - guard) sigma_1`` are
    dropped first.  ``R`` is accepted for provenance only.
    """
    if R is not None:
        _need_rho(R, "R")
    if isinstance(spectrum, SingularSpectrum):
        logs = spectrum.log10()
        keep = spectrum.floor_mask(guard)
    else:
        vals = np.asarray(spectrum, dtype=float)
        with np.errstate(divide="ignore"):
            logs = np.log10(vals)
        keep = vals > 0
    n_keep = int(np.argmin(keep)) if not keep.all() else len(keep)
    if n_keep < 20:
        raise DomainError(f"need at least 20 usable singular values, have {n_keep}")
    y = logs[:n_keep]
    j = np.arange(1, n_keep + 1, dtype=float)

    def fit(lo, hi):
        x, yy = j[lo:hi], y[lo:hi]
        coef = np.polyfit(x, yy, 1)
        return coef[0], float(np.sum((np.polyval(coef, x) - yy) ** 2))

    best = None
    for b in range(min_segment, n_keep - min_segment + 1):
        s1, e1 = fit(0, b)
        s2, e2 = fit(b, n_keep)
        if best is None or e1 + e2 < best[0]:
            best = (e1 + e2, b, s1, s2)
    sse, b, s1, s2 = best
    if abs(s1 - s2) <= 0.05 * max(abs(s1), abs(s2)):
        raise DegenerateFitError(
            f"best split at j={b + 1} has slopes {s1:.4g} and {s2:.4g} within 5%")
    return KinkFit(b + 1, float(s1), float(s2), sse, n_keep)


def _fmt_opt(v, digits):
    if v is None:
        return ""
    if isinstance(v, float) and math.isnan(v):
        return ""
    return fmt_ext(v, digits)


def write_width_csv(path, report: WidthReport, full_precision: bool = False) -> None:
    """Write ``j,sigma,ell_p,ell_y,bound_taylor,bound_cheb,empirical``.

    Floats carry 17 significant digits; with ``full_precision`` the
    extended-precision columns (sigma, ell_p, ell_y) use the report precision.
    """
    ext_digits = report.precision if full_precision else 17
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(WIDTH_HEADER)
        for a in report.axes:
            w.writerow([
                a.j,
                _fmt_opt(a.sigma, ext_digits),
                _fmt_opt(a.ell_p, ext_digits),
                _fmt_opt(a.ell_y, ext_digits),
                _fmt_opt(a.bound_taylor, 17),
                _fmt_opt(a.bound_cheb, 17),
                _fmt_opt(a.empirical, 17),
            ])


def read_width_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (None if v == "" else (int(v) if k == "j" else float(v))) for k, v in r.items()}
            for r in rows]
