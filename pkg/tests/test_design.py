import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperribbon.design import (
    Grid1D,
    Grid2D,
    block_index_pairs,
    cheb_design,
    cheb_design_2d,
    nonanalytic_design,
    nonanalytic_scales,
    taylor_design_2d,
    vandermonde_design,
    write_matrix_csv,
)
from hyperribbon.errors import DomainError
from hyperribbon.extreal import working_precision


def test_cheb_design_small_cases():
    np.testing.assert_allclose(cheb_design(Grid1D((0.0,)), 2.0, 3).entries, [[1, 0, -0.25]])
    np.testing.assert_allclose(cheb_design(Grid1D((-1.0, 1.0)), 10.0, 2).entries, [[1, -0.1], [1, 0.1]])


def test_vandermonde_design_small_cases():
    np.testing.assert_allclose(vandermonde_design(Grid1D((-1.0, 1.0)), 2.0, 2).entries,
                               [[1, -0.5], [1, 0.5]])
    X = vandermonde_design(Grid1D((-0.5, 0.0, 0.5)), 3.0, 4).entries
    np.testing.assert_array_equal(X[1], [1, 0, 0, 0])


def test_cheb_design_column_norms_nonincreasing():
    X = cheb_design(Grid1D.equispaced(11), 2.0, 11).entries
    norms = np.linalg.norm(X, axis=0)
    assert np.all(np.diff(norms) <= 1e-15)


def test_nonanalytic_scales():
    s = nonanalytic_scales(1, 5)
    assert s[2] == 1.0
    assert s[4] == pytest.approx(1 / 9)
    X = nonanalytic_design(Grid1D.chebyshev(7), 1, 5).entries
    np.testing.assert_allclose(np.abs(X).max(axis=0), s)


def test_design_2d_small_cases():
    g = Grid2D.equispaced(3)
    np.testing.assert_array_equal(cheb_design_2d(g, 2.0, 1).entries, np.ones((9, 1)))
    np.testing.assert_array_equal(taylor_design_2d(g, 2.0, 1).entries, np.ones((9, 1)))
    X = cheb_design_2d(Grid2D(((0.0, 0.0),)), 2.0, 2).entries
    np.testing.assert_allclose(X, [[1, 0, 0]])
    corner = taylor_design_2d(Grid2D(((1.0, 1.0),)), 2.0, 4).entries[0]
    expected = [2.0 ** -j for j in range(4) for _ in range(j + 1)]
    np.testing.assert_allclose(corner, expected)


def test_block_index_pairs():
    assert block_index_pairs(3) == [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]


def test_grid_validation():
    with pytest.raises(DomainError):
        Grid1D((0.5, 0.2))
    with pytest.raises(DomainError):
        Grid1D((1.2,))
    with pytest.raises(DomainError):
        Grid2D(((0.0, 0.0), (0.0, 0.0)))
    with pytest.raises(DomainError):
        vandermonde_design(Grid1D.equispaced(3), 0.9, 3)
    with pytest.raises(DomainError):
        nonanalytic_design(Grid1D.equispaced(3), 0, 3)


def test_grid_exact_points():
    with working_precision(40):
        pts = Grid1D.equispaced(11).ext()
        assert pts[5] == 0 and pts[10] == 1
        cheb = Grid1D.chebyshev(5).ext()
        assert abs(float(cheb[3] ** 2) - 0.5) < 1e-30


def test_ext_entries_match_float_entries():
    X = vandermonde_design(Grid1D.equispaced(7), 2.0, 7)
    ext = X.ext(50)
    np.testing.assert_allclose(np.array(ext, dtype=float), X.entries, rtol=1e-14, atol=0)


def test_write_matrix_csv(tmp_path):
    X = cheb_design(Grid1D((-1.0, 1.0)), 10.0, 2)
    write_matrix_csv(tmp_path / "x.csv", X)
    back = np.loadtxt(tmp_path / "x.csv", delimiter=",")
    np.testing.assert_allclose(back, X.entries)


grids_1d = st.integers(1, 14).map(Grid1D.equispaced) | st.integers(2, 14).map(Grid1D.chebyshev)


@given(grids_1d, st.floats(1.1, 6.0), st.integers(1, 14))
def test_design_entry_bounds(grid, scale, N):
    for X in (cheb_design(grid, scale, N), vandermonde_design(grid, scale, N)):
        assert np.all(X.entries[:, 0] == 1.0)
        col_bound = scale ** -np.arange(N)
        assert np.all(np.abs(X.entries) <= col_bound * (1 + 1e-14))


@given(grids_1d, st.integers(1, 5), st.integers(1, 14))
def test_nonanalytic_entry_bounds(grid, nu, N):
    X = nonanalytic_design(grid, nu, N)
    assert np.all(X.entries[:, 0] == 1.0)
    assert np.all(np.abs(X.entries) <= np.array(nonanalytic_scales(nu, N)) * (1 + 1e-14))


@given(st.integers(1, 5), st.integers(1, 8), st.floats(1.1, 5.0))
def test_2d_column_counts(k, N, scale):
    g = Grid2D.equispaced(k)
    for X in (cheb_design_2d(g, scale, N), taylor_design_2d(g, scale, N)):
        assert X.cols == N * (N + 1) // 2
        assert np.all(X.entries[:, 0] == 1.0)
    pairs = block_index_pairs(N)
    for j in range(N):
        assert sum(1 for a, b in pairs if a + b == j) == j + 1
    assert math.isclose(len(pairs), N * (N + 1) / 2)
