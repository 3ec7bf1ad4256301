"""Scaled design matrices whose singular values size the bounding hyperellipsoids.

Every matrix is stored in float64 for convenience and can be rebuilt
entry-by-entry in extended precision (``DesignMatrix.ext``) from its exact
grid description.  The double-precision copy is *not* adequate for computing
small singular values: rounding each entry perturbs them far beyond their size.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Callable

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .errors import DomainError
from .extreal import DEFAULT_PRECISION, fmt_ext, to_ext, working_precision

__all__ = [
    "DesignKind",
    "Grid1D",
    "Grid2D",
    "DesignMatrix",
    "cheb_design",
    "vandermonde_design",
    "nonanalytic_design",
    "nonanalytic_scales",
    "cheb_design_2d",
    "taylor_design_2d",
    "block_index_pairs",
    "write_matrix_csv",
]


class DesignKind(str, enum.Enum):
    CHEB_RHO = "cheb"
    TAYLOR_R = "taylor"
    NON_ANALYTIC = "nonanalytic"
    CHEB_2D = "cheb2d"
    TAYLOR_2D = "taylor2d"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Grid1D:
    """Strictly increasing sample points in [-1, 1]."""

    points: tuple[float, ...]
    kind: str = "custom"

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if not pts:
            raise DomainError("a grid needs at least one point")
        if any(abs(p) > 1.0 for p in pts):
            raise DomainError("grid points must lie in [-1, 1]")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise DomainError("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def equispaced(cls, n: int) -> "Grid1D":
        """``n`` equally spaced points including both endpoints (``[0]`` if n == 1)."""
        if n < 1:
            raise DomainError("need at least one point")
        if n == 1:
            return cls((0.0,), "equispaced")
        return cls(tuple(np.linspace(-1.0, 1.0, n)), "equispaced")

    @classmethod
    def chebyshev(cls, n: int) -> "Grid1D":
        """Chebyshev points of the second kind, ascending."""
        if n < 1:
            raise DomainError("need at least one point")
        if n == 1:
            return cls((0.0,), "chebyshev")
        pts = -np.cos(np.pi * np.arange(n) / (n - 1))
        pts[0], pts[-1] = -1.0, 1.0
        if n % 2 == 1:
            pts[n // 2] = 0.0
        return cls(tuple(pts), "chebyshev")

    def __len__(self):
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.array(self.points)

    def ext(self) -> list:
        """Points at the current MPFR precision, recomputed exactly when the kind allows."""
        n = len(self.points)
        if self.kind == "equispaced" and n > 1:
            return [mpfr(-1) + mpfr(2 * i) / (n - 1) for i in range(n)]
        if self.kind == "chebyshev" and n > 1:
            pi = gmpy2.const_pi()
            out = [-gmpy2.cos(pi * i / (n - 1)) for i in range(n)]
            out[0], out[-1] = mpfr(-1), mpfr(1)
            if n % 2 == 1:
                out[n // 2] = mpfr(0)
            return out
        return [mpfr(p) for p in self.points]


@dataclass(frozen=True)
class Grid2D:
    """Sample nodes ``(t, s)`` in [-1, 1]^2; tensor grids are t-major."""

    nodes: tuple[tuple[float, float], ...]
    arrangement: str = "custom"
    factors: tuple[Grid1D, Grid1D] | None = None

    def __post_init__(self):
        nodes = tuple((float(t), float(s)) for t, s in self.nodes)
        if not nodes:
            raise DomainError("a grid needs at least one node")
        if any(abs(t) > 1.0 or abs(s) > 1.0 for t, s in nodes):
            raise DomainError("grid nodes must lie in [-1, 1]^2")
        if len(set(nodes)) != len(nodes):
            raise DomainError("duplicate grid nodes")
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def tensor(cls, t_grid: Grid1D, s_grid: Grid1D | None = None) -> "Grid2D":
        s_grid = t_grid if s_grid is None else s_grid
        nodes = tuple((t, s) for t in t_grid.points for s in s_grid.points)
        return cls(nodes, f"tensor {len(t_grid)}x{len(s_grid)}", (t_grid, s_grid))

    @classmethod
    def equispaced(cls, k: int) -> "Grid2D":
        return cls.tensor(Grid1D.equispaced(k))

    def __len__(self):
        return len(self.nodes)

    def as_array(self) -> np.ndarray:
        return np.array(self.nodes)

    def ext(self) -> list:
        if self.factors is not None:
            tg, sg = self.factors
            return [(t, s) for t in tg.ext() for s in sg.ext()]
        return [(mpfr(t), mpfr(s)) for t, s in self.nodes]


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Dense design matrix with provenance.

    ``entries`` is the float64 image; ``ext(precision)`` rebuilds the exact
    matrix at ``precision`` decimal digits.
    """

    entries: np.ndarray
    kind: DesignKind
    scale: float
    order: int
    grid: Grid1D | Grid2D | None = None
    col_scales: tuple[float, ...] = ()
    _builder: Callable[[], np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2:
            raise DomainError("design entries must form a 2-D array")
        if not np.all(np.isfinite(a)):
            raise DomainError("design entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @classmethod
    def from_array(cls, a) -> "DesignMatrix":
        a = np.asarray(a, dtype=object if _is_ext_array(a) else float)
        if a.dtype == object:
            ext = a
            return cls(np.array(a, dtype=float), DesignKind.CUSTOM, 1.0, a.shape[1],
                       _builder=lambda: to_ext(ext))
        return cls(a, DesignKind.CUSTOM, 1.0, a.shape[1])

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def ext(self, precision: int = DEFAULT_PRECISION) -> np.ndarray:
        """Object array of MPFR entries computed at ``precision`` digits."""
        with working_precision(precision):
            if self._builder is None:
                return to_ext(self.entries)
            return self._builder()


def _is_ext_array(a) -> bool:
    arr = np.asarray(a, dtype=object)
    return arr.size > 0 and isinstance(arr.reshape(-1)[0], type(mpfr(0)))


def _cheb_columns(t, n: int):
    """Rows ``[T_0(t), ..., T_{n-1}(t)]`` for an array (float or MPFR) ``t``."""
    cols = [np.ones_like(t) if t.dtype != object else np.array([mpfr(1)] * len(t), dtype=object)]
    if n > 1:
        cols.append(t.copy())
    for _ in range(2, n):
        cols.append(2 * t * cols[-1] - cols[-2])
    return cols


def _scaled_design(grid, n, col_scales_fn, basis_fn, kind, scale):
    """Assemble float and MPFR versions of ``basis(t)_j * scale_j``."""
    t = grid.as_array()
    scales = [float(v) for v in col_scales_fn(float)]
    basis = basis_fn(t, n)
    entries = np.column_stack([basis[j] * scales[j] for j in range(n)]) if n else np.zeros((len(t), 0))

    def build():
        te = np.array(grid.ext(), dtype=object)
        sc = col_scales_fn(mpfr)
        b = basis_fn(te, n)
        out = np.empty((len(te), n), dtype=object)
        for j in range(n):
            out[:, j] = b[j] * sc[j]
        return out

    return DesignMatrix(entries, kind, float(scale), n, grid, tuple(scales), build)


def _monomial_columns(t, n: int):
    if t.dtype == object:
        cols = [np.array([mpfr(1)] * len(t), dtype=object)]
    else:
        cols = [np.ones_like(t)]
    for _ in range(1, n):
        cols.append(cols[-1] * t)
    return cols


def _check_order(N: int):
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")


def cheb_design(grid: Grid1D, rho: float, N: int) -> DesignMatrix:
    """``X_ij = T_{j-1}(t_{i-1}) rho^{-(j-1)}``."""
    if not rho > 1:
        raise DomainError(f"rho must exceed 1, got {rho}")
    _check_order(N)
    return _scaled_design(
        grid, N, lambda num: [num(rho) ** (-j) for j in range(N)],
        _cheb_columns, DesignKind.CHEB_RHO, rho,
    )


def vandermonde_design(grid: Grid1D, R: float, N: int) -> DesignMatrix:
    """Column-scaled Vandermonde matrix ``t_{i-1}^{j-1} R^{-(j-1)}``."""
    if not R > 1:
        raise DomainError(f"R must exceed 1, got {R}")
    _check_order(N)
    return _scaled_design(
        grid, N, lambda num: [num(R) ** (-j) for j in range(N)],
        _monomial_columns, DesignKind.TAYLOR_R, R,
    )


def nonanalytic_scales(nu: int, N: int, num=float) -> list:
    """Column scales ``1`` for ``j <= nu + 1`` and ``(j - 1 - nu)^{-(nu + 1)}`` beyond (1-based j)."""
    out = []
    for j in range(1, N + 1):
        out.append(num(1) if j <= nu + 1 else num(j - 1 - nu) ** (-(nu + 1)))
    return out


def nonanalytic_design(grid: Grid1D, nu: int, N: int) -> DesignMatrix:
    if nu < 1:
        raise DomainError(f"nu must be >= 1, got {nu}")
    _check_order(N)
    return _scaled_design(
        grid, N, lambda num: nonanalytic_scales(nu, N, num),
        _cheb_columns, DesignKind.NON_ANALYTIC, float(nu),
    )


def block_index_pairs(N: int) -> list[tuple[int, int]]:
    """``(m, j - m)`` basis degrees in block order: block j lists m = 0..j."""
    return [(m, j - m) for j in range(N) for m in range(j + 1)]


def _design_2d(grid: Grid2D, scale: float, N: int, basis_fn, kind) -> DesignMatrix:
    _check_order(N)
    pairs = block_index_pairs(N)

    def assemble(t, s, num):
        bt = basis_fn(t, N)
        bs = basis_fn(s, N)
        scl = [num(scale) ** (-j) for j in range(N)]
        return [bt[m] * bs[k] * scl[m + k] for m, k in pairs]

    nodes = grid.as_array()
    cols = assemble(nodes[:, 0], nodes[:, 1], float)
    entries = np.column_stack(cols)

    def build():
        ext_nodes = grid.ext()
        t = np.array([p[0] for p in ext_nodes], dtype=object)
        s = np.array([p[1] for p in ext_nodes], dtype=object)
        c = assemble(t, s, mpfr)
        out = np.empty((len(t), len(c)), dtype=object)
        for j, col in enumerate(c):
            out[:, j] = col
        return out

    scales = tuple(float(scale) ** (-(m + k)) for m, k in pairs)
    return DesignMatrix(entries, kind, float(scale), N, grid, scales, build)


def cheb_design_2d(grid: Grid2D, rho: float, N: int) -> DesignMatrix:
    """Blocks ``rho^{-j} [T_0(t)T_j(s) | T_1(t)T_{j-1}(s) | ... | T_j(t)T_0(s)]``."""
    if not rho > 1:
        raise DomainError(f"rho must exceed 1, got {rho}")
    return _design_2d(grid, rho, N, _cheb_columns, DesignKind.CHEB_2D)


def taylor_design_2d(grid: Grid2D, R: float, N: int) -> DesignMatrix:
    """Blocks ``R^{-j} [s^j | t s^{j-1} | ... | t^j]``."""
    if not R > 1:
        raise DomainError(f"R must exceed 1, got {R}")
    return _design_2d(grid, R, N, _monomial_columns, DesignKind.TAYLOR_2D)


def write_matrix_csv(path, X: DesignMatrix | np.ndarray, precision: int | None = None) -> None:
    """Row-major CSV.  With ``precision`` the exact entries are written at that many digits."""
    if precision is not None and isinstance(X, DesignMatrix):
        rows = X.ext(precision)
        fmt = lambda v: fmt_ext(v, precision)  # noqa: E731
    else:
        rows = X.entries if isinstance(X, DesignMatrix) else np.asarray(X, dtype=float)
        fmt = repr
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in rows:
            w.writerow([fmt(float(v)) if fmt is repr else fmt(v) for v in row])
