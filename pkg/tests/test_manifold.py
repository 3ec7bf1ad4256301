import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperribbon.bounds import TaylorBudget, add_truncation_error, taylor_error_bound, widths_from_spectrum
from hyperribbon.design import Grid1D, Grid2D, taylor_design_2d, vandermonde_design
from hyperribbon.errors import DimensionMismatch, DomainError, SamplerTimeout
from hyperribbon.manifold import (
    ParamPrior,
    default_priors,
    ellipsoid_membership,
    empirical_widths,
    enclosure_check,
    project_cloud,
    read_cloud_csv,
    recheck_cloud,
    sample_cloud,
    write_cloud_csv,
    write_projection_csv,
)
from hyperribbon.models import ExpSumModel, constraint_check, model_value, theory_to_native
from hyperribbon.spectral import singular_values

B11 = TaylorBudget(1.0, 2.0, 11)
GRID = Grid1D.equispaced(11)


@pytest.fixture(scope="module")
def clouds():
    return {kind: sample_cloud(kind, None, B11, GRID, 150, seed=3) for kind in ("expsum", "reaction", "sir")}


@pytest.fixture(scope="module")
def report():
    s = singular_values(vandermonde_design(GRID, 2.0, 11), 60)
    return add_truncation_error(widths_from_spectrum(s, B11.radius), taylor_error_bound(B11))


def test_prior_parse_and_transform():
    p = ParamPrior.parse(["uniform", 1.0, 3.0])
    np.testing.assert_allclose(p.transform(np.array([0.0, 0.5])), [1.0, 2.0])
    q = ParamPrior.parse({"law": "loguniform", "lo": 1e-2, "hi": 1e2})
    assert q.transform(np.array([0.5]))[0] == pytest.approx(1.0)
    for bad in (("normal", 0, 1), ("uniform", 2, 1), ("loguniform", 0, 1)):
        with pytest.raises(DomainError):
            ParamPrior(*bad)


def test_default_priors_cover_parameters():
    assert len(default_priors("expsum", B11)) == 22
    assert set(default_priors("sir", B11, two_d=True)) == {"beta_over_n", "gamma", "i0", "E_beta", "E_gamma"}
    with pytest.raises(DomainError):
        default_priors("logistic", B11)


def test_clouds_satisfy_budget_and_are_nonnegative(clouds):
    for kind, cloud in clouds.items():
        assert cloud.accepted == 150
        assert cloud.attempted >= 150
        assert np.all(cloud.predictions >= 0), kind
        assert np.all(recheck_cloud(cloud) < 1.0), kind
        # each |y(t_i)| < C sqrt(N), so the prediction vector is shorter than C N
        assert np.all(np.linalg.norm(cloud.predictions, axis=1) <= B11.C * B11.N)


def test_cloud_models_reproduce_predictions(clouds):
    cloud = clouds["sir"]
    models = list(cloud.models())
    xs = theory_to_native(np.array(GRID.points))
    for k in (0, 57, 149):
        np.testing.assert_allclose(model_value(models[k], xs), cloud.predictions[k], rtol=1e-12, atol=1e-14)
        assert constraint_check(models[k], B11, extra_t=GRID.points).passed


def test_sampling_is_deterministic_and_worker_independent():
    a = sample_cloud("reaction", None, B11, GRID, 60, seed=11, block_size=32)
    b = sample_cloud("reaction", None, B11, GRID, 60, seed=11, block_size=32)
    c = sample_cloud("reaction", None, B11, GRID, 60, seed=11, block_size=32, workers=2)
    for other in (b, c):
        np.testing.assert_array_equal(a.params, other.params)
        np.testing.assert_array_equal(a.predictions, other.predictions)
        np.testing.assert_array_equal(a.attempt_ids, other.attempt_ids)
        assert a.attempted == other.attempted
    d = sample_cloud("reaction", None, B11, GRID, 60, seed=12, block_size=32)
    assert not np.array_equal(a.params, d.params)


def test_point_prior_gives_zero_widths():
    prior = {"theta_1": ["uniform", 1, 1], "theta_2": ["uniform", 0.5, 0.5],
             "theta_3": ["uniform", 1, 1], "theta_4": ["uniform", 1, 1]}
    cloud = sample_cloud("reaction", prior, B11, GRID, 20, seed=0)
    Z = project_cloud(cloud, vandermonde_design(GRID, 2.0, 11), 40)
    np.testing.assert_allclose(empirical_widths(Z), 0.0, atol=1e-15)


def test_sampler_errors():
    with pytest.raises(DomainError):
        sample_cloud("expsum", {"A_99": ["uniform", 0, 1]}, B11, GRID, 10, seed=0)
    with pytest.raises(DomainError):
        sample_cloud("expsum", None, B11, GRID, 0, seed=0)
    huge = {f"A_{a}": ["uniform", 50, 60] for a in range(11)}
    with pytest.raises(SamplerTimeout):
        sample_cloud("expsum", huge, B11, GRID, 5, seed=0, max_attempts=2000, block_size=500)


def test_projection_of_diagonal_design():
    X = np.diag([1.0, 3.0, 2.0])
    from hyperribbon.design import DesignMatrix
    Y = np.array([[1.0, 2.0, 3.0]])
    Z = project_cloud(Y, DesignMatrix.from_array(X), 30).Z
    np.testing.assert_allclose(np.abs(Z), [[2.0, 3.0, 1.0]], atol=1e-15)
    with pytest.raises(DimensionMismatch):
        project_cloud(np.ones((1, 4)), DesignMatrix.from_array(X), 30)


def test_projection_is_orthogonal(clouds):
    proj = project_cloud(clouds["expsum"], vandermonde_design(GRID, 2.0, 11), 40)
    np.testing.assert_allclose(np.linalg.norm(proj.Z, axis=1),
                               np.linalg.norm(clouds["expsum"].predictions, axis=1), rtol=1e-13)


def test_empirical_widths_examples():
    Z = np.array([[0.0, 0.0, 0.0], [3.0, 0.0, 0.0]])
    np.testing.assert_allclose(empirical_widths(Z), [3, 0, 0])
    Z2 = np.vstack([Z, [[1.5, 0.0, 0.0]]])
    np.testing.assert_allclose(empirical_widths(Z2), empirical_widths(Z))
    with pytest.raises(DomainError):
        empirical_widths(Z[:1])


def test_enclosure_of_sampled_clouds(clouds, report):
    X = vandermonde_design(GRID, 2.0, 11)
    for kind, cloud in clouds.items():
        proj = project_cloud(cloud, X, 60)
        res = enclosure_check(proj, report)
        assert res.passed and res.violations == 0, kind
        w = empirical_widths(proj)
        assert np.all(w <= report.column("ell_y") + 1e-12)


def test_polynomial_cloud_membership(rng, report):
    X = vandermonde_design(GRID, 2.0, 11)
    proj_ref = project_cloud(np.zeros((1, 11)), X, 60)
    r = B11.radius
    c = rng.normal(size=(500, 11))
    c *= (r * rng.uniform(0, 1, (500, 1)) ** (1 / 11)) / np.linalg.norm(c, axis=1, keepdims=True)
    Y = c @ X.entries.T
    Z = Y @ proj_ref.U
    q = ellipsoid_membership(Z, proj_ref.spectrum, r)
    assert np.all(q <= 1 + 1e-10)
    assert enclosure_check(Z, report).passed


def test_adversarial_sample_detected(report):
    xs = theory_to_native(np.array(GRID.points))
    y = model_value(ExpSumModel((100.0,), (1.0,)), xs)[None]
    res = enclosure_check(project_cloud(y, vandermonde_design(GRID, 2.0, 11), 60), report)
    assert not res.passed and res.worst_margin > 0


def test_cloud_csv_roundtrip(tmp_path, clouds):
    cloud = clouds["sir"]
    write_cloud_csv(tmp_path / "c.csv", cloud)
    back = read_cloud_csv(tmp_path / "c.csv")
    np.testing.assert_array_equal(back.params, cloud.params)
    np.testing.assert_array_equal(back.predictions, cloud.predictions)
    assert back.grid == cloud.grid and back.budget == cloud.budget
    np.testing.assert_array_equal(recheck_cloud(back), recheck_cloud(cloud))
    write_projection_csv(tmp_path / "z.csv", np.eye(2))
    assert (tmp_path / "z.csv").read_text().splitlines()[0] == "sample_id,z_1,z_2"


def test_2d_cloud_enclosed():
    b = TaylorBudget(1.0, 2.0, 6)
    g = Grid2D.equispaced(5)
    cloud = sample_cloud("expsum", None, b, g, 40, seed=1, options={"n_terms": 3})
    assert cloud.two_d and cloud.predictions.shape == (40, 25)
    assert np.all(recheck_cloud(cloud) < 1.0)
    X = taylor_design_2d(g, 2.0, 6)
    s = singular_values(X, 40)
    from hyperribbon.bounds import taylor_error_bound_2d
    rep = add_truncation_error(widths_from_spectrum(s, math.sqrt(21)), taylor_error_bound_2d(b))
    assert enclosure_check(project_cloud(cloud, X, 40), rep).passed


@given(st.integers(1, 6), st.integers(2, 30), st.floats(0.1, 10), st.integers(0, 2**31))
def test_enclosure_scales_out(n_axes, n_samples, factor, seed):
    rng = np.random.default_rng(seed)
    sig = np.sort(rng.uniform(0.01, 1, n_axes))[::-1]
    rep = widths_from_spectrum(sig, 1.0)
    Z = rng.uniform(-1, 1, (n_samples, n_axes)) * sig
    assert enclosure_check(Z, rep).passed
    big = Z.copy()
    big[0, 0] = sig[0] * (1 + factor)
    assert not enclosure_check(big, rep).passed
