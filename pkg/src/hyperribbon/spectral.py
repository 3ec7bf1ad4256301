"""Singular values in extended precision, the ESE eigenvalue bound, decay fits.

Singular values are computed with one-sided (Hestenes) Jacobi on the columns
of the matrix in MPFR arithmetic.  Jacobi is insensitive to column scaling,
so the small singular values of graded matrices such as ``V D`` come out with
high relative accuracy; bidiagonalisation in double precision would bury
everything below ``1e-16 * sigma_1`` in rounding noise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .design import DesignKind, DesignMatrix
from .errors import ConvergenceError, DomainError, SingularMinorError
from .extreal import DEFAULT_PRECISION, check_precision, fmt_ext, working_precision

__all__ = [
    "SingularSpectrum",
    "singular_values",
    "left_singular_basis",
    "svd_ext",
    "thm2_bound",
    "schur_lowrank",
    "ese_eigenvalues",
    "slope_fit",
    "write_spectrum_csv",
]

MAX_SWEEPS = 60


@dataclass(frozen=True)
class SingularSpectrum:
    """Descending singular values with the precision used to compute them."""

    values: tuple
    precision: int
    kind: DesignKind = DesignKind.CUSTOM

    def __post_init__(self):
        vals = tuple(self.values)
        if any(v < 0 for v in vals):
            raise DomainError("singular values must be nonnegative")
        if any(b > a for a, b in zip(vals, vals[1:])):
            raise DomainError("singular values must be sorted in descending order")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, k):
        return self.values[k]

    def sigma(self, j: int):
        """1-based access, ``sigma(1)`` is the largest."""
        return self.values[j - 1]

    def floats(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def log10(self) -> np.ndarray:
        """Base-10 logs computed in MPFR (no float underflow); ``-inf`` for zeros."""
        with working_precision(self.precision):
            return np.array([float(gmpy2.log10(v)) if v > 0 else -math.inf for v in self.values])

    def floor_mask(self, guard: int = 12) -> np.ndarray:
        """True where ``sigma_j`` sits above the solver's relative-accuracy floor."""
        if not self.values or self.values[0] == 0:
            return np.zeros(len(self.values), dtype=bool)
        with working_precision(self.precision):
            floor = self.values[0] * mpfr(10) ** (-(self.precision - guard))
            return np.array([v > floor for v in self.values])


def _as_ext_matrix(X, precision):
    if isinstance(X, DesignMatrix):
        return X.ext(precision), X.kind
    A = np.asarray(X, dtype=object)
    if A.ndim != 2:
        raise DomainError("expected a 2-D matrix")
    with working_precision(precision):
        out = np.empty(A.shape, dtype=object)
        for idx, v in np.ndenumerate(A):
            out[idx] = mpfr(v)
    return out, DesignKind.CUSTOM


def _jacobi_columns(cols: list, tol, max_sweeps: int, vcols: list | None):
    """Orthogonalise ``cols`` in place by plane rotations; mirror on ``vcols``."""
    n = len(cols)
    # columns below working round-off of ||X||_F carry no information
    ulp = mpfr(2) ** (1 - gmpy2.get_context().precision)
    tiny = sum(np.dot(c, c) for c in cols) * (ulp * ulp) * max(n, 1)
    for sweep in range(1, max_sweeps + 1):
        rotated = 0
        norms = [np.dot(c, c) for c in cols]
        for p in range(n - 1):
            cp = cols[p]
            for q in range(p + 1, n):
                a, b = norms[p], norms[q]
                if a <= tiny or b <= tiny:
                    continue
                cq = cols[q]
                g = np.dot(cp, cq)
                if abs(g) <= tol * gmpy2.sqrt(a * b):
                    continue
                rotated += 1
                zeta = (b - a) / (2 * g)
                t = 1 / (abs(zeta) + gmpy2.sqrt(1 + zeta * zeta))
                if zeta < 0:
                    t = -t
                c = 1 / gmpy2.sqrt(1 + t * t)
                s = c * t
                cp, cq = c * cp - s * cq, s * cp + c * cq
                cols[p], cols[q] = cp, cq
                norms[p], norms[q] = a - t * g, b + t * g
                if vcols is not None:
                    vp, vq = vcols[p], vcols[q]
                    vcols[p], vcols[q] = c * vp - s * vq, s * vp + c * vq
        if rotated == 0:
            return sweep
    raise ConvergenceError(f"one-sided Jacobi did not converge in {max_sweeps} sweeps")


def _complete_basis(basis: list, dim: int) -> list:
    """Extend orthonormal vectors to an orthonormal basis of R^dim (twice-iterated MGS)."""
    out = list(basis)
    candidates = list(range(dim))
    while len(out) < dim:
        best, best_norm = None, mpfr(-1)
        for i in candidates:
            v = np.array([mpfr(0)] * dim, dtype=object)
            v[i] = mpfr(1)
            for _ in range(2):
                for u in out:
                    v = v - np.dot(u, v) * u
            nv = gmpy2.sqrt(np.dot(v, v))
            if nv > best_norm:
                best, best_norm, best_i = v, nv, i
        candidates.remove(best_i)
        out.append(best / best_norm)
    return out


def _fix_sign(u):
    k = int(np.argmax([abs(x) for x in u]))
    return -u if u[k] < 0 else u


def svd_ext(X, precision: int = DEFAULT_PRECISION, full_u: bool = False,
            max_sweeps: int = MAX_SWEEPS):
    """Singular values (descending) and, if ``full_u``, a full square left basis.

    Returns ``(sigma, U, kind)`` with ``sigma`` a list of MPFR numbers of
    length ``min(rows, cols)`` and ``U`` an object array ``rows x rows`` (or
    ``None``).  Ties keep Jacobi output order.
    """
    check_precision(precision)
    A, kind = _as_ext_matrix(X, precision)
    m, n = A.shape
    with working_precision(precision):
        tol = mpfr(10) ** (-(precision - 5))
        transposed = m < n
        B = A.T if transposed else A
        cols = [np.array(B[:, j], dtype=object) for j in range(B.shape[1])]
        vcols = None
        if transposed and full_u:
            k = len(cols)
            vcols = []
            for j in range(k):
                e = np.array([mpfr(0)] * k, dtype=object)
                e[j] = mpfr(1)
                vcols.append(e)
        _jacobi_columns(cols, tol, max_sweeps, vcols)
        norms = [gmpy2.sqrt(np.dot(c, c)) for c in cols]
        order = sorted(range(len(cols)), key=lambda j: -norms[j])
        r = min(m, n)
        sigma = [norms[j] for j in order[:r]]
        U = None
        if full_u:
            if transposed:
                vecs = [_fix_sign(vcols[j]) for j in order[:r]]
            else:
                vecs = [_fix_sign(cols[j] / norms[j]) for j in order[:r] if norms[j] > 0]
            vecs = _complete_basis(vecs, m)
            U = np.empty((m, m), dtype=object)
            for j, u in enumerate(vecs):
                U[:, j] = u
    return sigma, U, kind


def singular_values(X, precision: int = DEFAULT_PRECISION) -> SingularSpectrum:
    """All ``min(rows, cols)`` singular values of ``X`` at ``precision`` digits."""
    sigma, _, kind = svd_ext(X, precision)
    return SingularSpectrum(tuple(sigma), int(precision), kind)


def left_singular_basis(X, precision: int = DEFAULT_PRECISION):
    """Full orthonormal ``U`` (rows x rows) from ``X = U S V^T``, descending order.

    Columns beyond ``rank`` complete the basis.  Each column's largest-magnitude
    entry is made positive.  Returns ``(U, spectrum)``.
    """
    sigma, U, kind = svd_ext(X, precision, full_u=True)
    return U, SingularSpectrum(tuple(sigma), int(precision), kind)


def thm2_bound(S, eps: float, m: int) -> float:
    """``eps^{2m} / (1 - eps^2) * max|S_jk|``: bound on ``lambda_{m+1}(E S E)``."""
    if not 0 < eps < 1:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    S = np.asarray(S, dtype=float)
    N = S.shape[0]
    if not 1 <= m <= N - 1:
        raise DomainError(f"m must lie in [1, {N - 1}], got {m}")
    return eps ** (2 * m) / (1.0 - eps * eps) * float(np.max(np.abs(S)))


def schur_lowrank(S, m: int) -> np.ndarray:
    """Rank-m matrix ``S[:, :m] S[:m, :m]^{-1} S[:m, :]``."""
    S = np.asarray(S, dtype=float)
    N = S.shape[0]
    if S.shape != (N, N):
        raise DomainError("S must be square")
    if not 1 <= m <= N - 1:
        raise DomainError(f"m must lie in [1, {N - 1}], got {m}")
    minor = S[:m, :m]
    try:
        chol = np.linalg.cholesky(minor)
    except np.linalg.LinAlgError as exc:
        raise SingularMinorError("leading minor is not positive definite") from exc
    if np.min(np.abs(np.diag(chol))) <= np.finfo(float).eps * np.max(np.abs(np.diag(chol))):
        raise SingularMinorError("leading minor is numerically singular")
    # S_m = W^T W with W = L^{-1} S[:m, :]
    W = np.linalg.solve(chol, S[:m, :])
    return W.T @ W


def _jacobi_sv_float(G: np.ndarray, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """Singular values of a small float matrix by one-sided Jacobi on its columns.

    Column scaling does not affect the relative accuracy, which is what makes
    graded factors like ``L^T E`` come out right down to tiny values.
    """
    cols = [np.array(G[:, j], dtype=float) for j in range(G.shape[1])]
    tol = 1e-15
    for _ in range(max_sweeps):
        rotated = False
        for p in range(len(cols) - 1):
            for q in range(p + 1, len(cols)):
                a, b = cols[p] @ cols[p], cols[q] @ cols[q]
                if a == 0.0 or b == 0.0:
                    continue
                g = cols[p] @ cols[q]
                if abs(g) <= tol * math.sqrt(a * b):
                    continue
                rotated = True
                zeta = (b - a) / (2.0 * g)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                sn = c * t
                cols[p], cols[q] = c * cols[p] - sn * cols[q], sn * cols[p] + c * cols[q]
        if not rotated:
            return np.sort([math.sqrt(v @ v) for v in cols])[::-1]
    raise ConvergenceError("float Jacobi did not converge")


def ese_eigenvalues(S, eps: float) -> np.ndarray:
    """Descending eigenvalues of ``E S E`` with ``E = diag(eps^(i-1))``, S positive definite.

    With ``S = L L^T`` the eigenvalues are the squared singular values of
    ``L^T E``, which one-sided Jacobi resolves to high relative accuracy even
    when they span many orders of magnitude.
    """
    S = np.asarray(S, dtype=float)
    e = eps ** np.arange(S.shape[0])
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise DomainError("S must be symmetric positive definite") from exc
    return _jacobi_sv_float(L.T * e[None, :]) ** 2


def slope_fit(spectrum, j_lo: int, j_hi: int, mode: str = "geometric") -> float:
    """Least-squares slope of ``log10 sigma_j`` against ``j`` or ``log10 j``.

    ``j_lo``/``j_hi`` are 1-based and inclusive.  ``mode`` is ``"geometric"``
    (slope per index) or ``"algebraic"`` (slope in log-log).
    """
    if isinstance(spectrum, SingularSpectrum):
        logs = spectrum.log10()
    else:
        vals = np.asarray(spectrum, dtype=float)
        with np.errstate(divide="ignore"):
            logs = np.log10(vals)
    if not 1 <= j_lo < j_hi <= len(logs):
        raise DomainError(f"need 1 <= j_lo < j_hi <= {len(logs)}, got ({j_lo}, {j_hi})")
    y = logs[j_lo - 1:j_hi]
    if not np.all(np.isfinite(y)):
        raise DomainError("slope fit range contains zero singular values")
    j = np.arange(j_lo, j_hi + 1, dtype=float)
    if mode == "geometric":
        x = j
    elif mode == "algebraic":
        x = np.log10(j)
    else:
        raise DomainError(f"unknown mode {mode!r}")
    return float(np.polyfit(x, y, 1)[0])


def write_spectrum_csv(path, spectrum: SingularSpectrum, digits: int | None = None) -> None:
    """CSV with header ``j,sigma``; values at ``digits`` (default: full precision)."""
    digits = spectrum.precision if digits is None else digits
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "sigma"])
        for j, v in enumerate(spectrum.values, start=1):
            w.writerow([j, fmt_ext(v, digits)])
