import math

import numpy as np
import pytest
from sklearn.base import clone

from switchmap.field import FieldSource, ScalarField, eval_field_grid
from switchmap.gp import (
    FieldGP,
    GPFitError,
    GPHyperparams,
    evaluate_rmse,
    kernel,
    kernel_matrix,
)


def test_kernel_zero_distance_is_amplitude_squared():
    hyper = GPHyperparams(amplitude=2.0, length_scale=1.0)
    assert kernel((0.3, -0.7), (0.3, -0.7), hyper) == pytest.approx(4.0, abs=1e-15)


def test_kernel_at_sqrt2_length_scales():
    # ||a-b|| = sqrt(2)*beta gives alpha^2 * exp(-1)
    hyper = GPHyperparams(amplitude=2.0, length_scale=0.8)
    a = np.zeros(2)
    b = np.array([0.8 * math.sqrt(2.0), 0.0])
    assert kernel(a, b, hyper) == pytest.approx(4.0 * math.exp(-1.0), rel=1e-12)
    assert kernel(a, b, hyper) == pytest.approx(1.47152, abs=1e-5)


def test_kernel_far_apart_is_numerically_zero():
    hyper = GPHyperparams(amplitude=2.0, length_scale=1.0)
    assert kernel((0, 0), (100.0, 0.0), hyper) <= 1e-30 * hyper.amplitude**2


def test_kernel_symmetry():
    hyper = GPHyperparams()
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.uniform(-3, 3, size=(2, 2))
        assert kernel(a, b, hyper) == pytest.approx(kernel(b, a, hyper), rel=1e-15)


def test_single_point_training_matrix():
    gp = FieldGP(amplitude=2.0, length_scale=1.0, noise_std=0.1, jitter=1e-8).fit(
        [[0.5, 0.5]], [1.0]
    )
    expected = 4.0 + 0.01 + 1e-8
    assert gp.L_.shape == (1, 1)
    assert gp.L_[0, 0] ** 2 == pytest.approx(expected, rel=1e-15)


def test_duplicate_points_without_regularization_fail():
    gp = FieldGP(noise_std=0.0, jitter=0.0)
    with pytest.raises(GPFitError):
        gp.fit([[1.0, 1.0]] * 3, [1.0, 1.0, 1.0])


def test_factorization_round_trip():
    rng = np.random.default_rng(5)
    pts = rng.uniform(-3, 3, size=(10, 2))
    gp = FieldGP(amplitude=1.5, length_scale=0.9, noise_std=0.2, jitter=1e-9).fit(
        pts, rng.standard_normal(10)
    )
    reg = 0.2**2 + 1e-9
    k_reg = kernel_matrix(pts, pts, gp.hyper) + reg * np.eye(10)
    assert np.max(np.abs(gp.L_ @ gp.L_.T - k_reg)) < 1e-12


def test_noiseless_single_point_interpolates_exactly():
    gp = FieldGP(amplitude=2.0, length_scale=1.0, noise_std=0.0, jitter=0.0).fit(
        [[1.0, 2.0]], [3.0]
    )
    pred = gp.predict_one([1.0, 2.0])
    assert pred.mean == pytest.approx(3.0, abs=1e-12)
    assert pred.variance == pytest.approx(0.0, abs=1e-12)


def test_symmetric_two_point_prediction():
    # brute-force 2x2 inverse oracle for the midpoint posterior mean
    x_train = np.array([[1.0, 0.0], [-1.0, 0.0]])
    z = np.array([1.0, 1.0])
    hyper = GPHyperparams(amplitude=1.0, length_scale=1.0, noise_std=0.0, jitter=0.0)
    k_mat = kernel_matrix(x_train, x_train, hyper)
    k_star = kernel_matrix(np.array([[0.0, 0.0]]), x_train, hyper)
    oracle_mean = float((k_star @ np.linalg.inv(k_mat) @ z)[0])
    assert oracle_mean == pytest.approx(2 * math.exp(-0.5) / (1 + math.exp(-2)), rel=1e-12)

    gp = FieldGP(amplitude=1.0, length_scale=1.0, noise_std=0.0, jitter=0.0).fit(x_train, z)
    pred = gp.predict_one([0.0, 0.0])
    assert pred.mean == pytest.approx(oracle_mean, abs=1e-12)
    assert pred.mean == pytest.approx(1.06846, abs=1e-5)


def test_far_query_recovers_prior():
    rng = np.random.default_rng(6)
    gp = FieldGP(amplitude=2.0, length_scale=1.0, noise_std=0.1).fit(
        rng.uniform(-1, 1, size=(5, 2)), rng.standard_normal(5)
    )
    pred = gp.predict_one([100.0, 100.0])
    assert abs(pred.mean) < 1e-10
    assert abs(pred.variance - 4.0) < 1e-10


def test_noiseless_interpolation_at_training_points():
    rng = np.random.default_rng(8)
    pts = rng.uniform(-4, 4, size=(20, 2))
    values = np.sin(pts[:, 0]) + 0.5 * np.cos(pts[:, 1])
    gp = FieldGP(amplitude=2.0, length_scale=1.0, noise_std=0.0, jitter=0.0).fit(pts, values)
    mean, var = gp.predict(pts, return_var=True)
    assert np.max(np.abs(mean - values)) <= 1e-8
    assert np.max(var) <= 1e-8


def test_factorized_predict_matches_explicit_inverse():
    rng = np.random.default_rng(9)
    for m in range(1, 11):
        pts = rng.uniform(-3, 3, size=(m, 2))
        z = rng.standard_normal(m)
        gp = FieldGP(amplitude=1.3, length_scale=0.7, noise_std=0.15, jitter=1e-9).fit(pts, z)
        reg = 0.15**2 + 1e-9
        k_inv = np.linalg.inv(kernel_matrix(pts, pts, gp.hyper) + reg * np.eye(m))
        queries = rng.uniform(-3, 3, size=(7, 2))
        k_star = kernel_matrix(queries, pts, gp.hyper)
        oracle_mean = k_star @ k_inv @ z
        oracle_var = gp.hyper.amplitude**2 - np.sum((k_star @ k_inv) * k_star, axis=1)
        mean, var = gp.predict(queries, return_var=True)
        assert np.max(np.abs(mean - oracle_mean)) <= 1e-10
        assert np.max(np.abs(var - oracle_var)) <= 1e-10


def test_kernel_matrices_positive_semidefinite():
    hyper = GPHyperparams(amplitude=1.0, length_scale=0.8)
    rng = np.random.default_rng(10)
    for _ in range(50):
        m = rng.integers(2, 31)
        pts = rng.uniform(-5, 5, size=(m, 2))
        eigs = np.linalg.eigvalsh(kernel_matrix(pts, pts, hyper))
        assert eigs.min() >= -1e-10


def test_variance_never_increases_with_more_data():
    rng = np.random.default_rng(12)
    for _ in range(10):
        pts = rng.uniform(-3, 3, size=(11, 2))
        z = rng.standard_normal(11)
        queries = rng.uniform(-3, 3, size=(15, 2))
        small = FieldGP(noise_std=0.1).fit(pts[:10], z[:10])
        large = FieldGP(noise_std=0.1).fit(pts, z)
        _, var_small = small.predict(queries, return_var=True)
        _, var_large = large.predict(queries, return_var=True)
        assert np.all(var_large <= var_small + 1e-8)


def test_rmse_trivial_cases():
    rng = np.random.default_rng(13)
    pts = rng.uniform(-2, 2, size=(6, 2))
    z = rng.standard_normal(6)
    gp = FieldGP(noise_std=0.1).fit(pts, z)
    grid = rng.uniform(-2, 2, size=(30, 2))
    mean = gp.predict(grid)
    exact = evaluate_rmse(gp, grid, mean)
    assert exact.rmse == pytest.approx(0.0, abs=1e-14)
    offset = evaluate_rmse(gp, grid, mean + 0.5)
    assert offset.rmse == pytest.approx(0.5, rel=1e-12)
    constant = evaluate_rmse(gp, grid, np.full(30, 1.3))
    assert constant.normalized is None
    assert offset.normalized == pytest.approx(0.5 / (mean.max() - mean.min()), rel=1e-9)


def test_rmse_interpolation_on_measurement_circle():
    # 20 noiseless samples of the reference field on the radius-2 circle;
    # evaluating on the training locations themselves shows interpolation
    field = ScalarField(
        sources=tuple(
            FieldSource(position=pos, intensity=i, decay=0.5)
            for pos, i in [((-2, 0), 5.0), ((2, 0), 5.0), ((0, 2), 4.0), ((0, -2), 4.0)]
        ),
        domain_bounds=(-5, 5, -5, 5),
    )
    angles = np.linspace(0.0, 2.0 * np.pi, 20, endpoint=False)
    pts = np.column_stack([2.0 * np.cos(angles), 2.0 * np.sin(angles)])
    values = eval_field_grid(field, pts)
    gp = FieldGP(amplitude=2.0, length_scale=1.0, noise_std=0.0, jitter=0.0).fit(pts, values)
    assert evaluate_rmse(gp, pts, values).rmse <= 1e-6


def test_estimator_api():
    gp = FieldGP(amplitude=2.5, length_scale=0.5, noise_std=0.05, jitter=None)
    params = gp.get_params()
    assert params == {
        "amplitude": 2.5,
        "length_scale": 0.5,
        "noise_std": 0.05,
        "jitter": None,
    }
    gp.set_params(length_scale=1.5)
    assert gp.length_scale == 1.5
    dup = clone(gp)
    assert dup.get_params() == gp.get_params()
    with pytest.raises(RuntimeError):
        gp.predict([[0.0, 0.0]])


def test_input_validation():
    gp = FieldGP()
    with pytest.raises(ValueError):
        gp.fit([[0.0, 0.0, 0.0]], [1.0])
    with pytest.raises(ValueError):
        gp.fit([[0.0, 0.0], [1.0, 1.0]], [1.0])
    with pytest.raises(ValueError):
        gp.fit([[np.inf, 0.0]], [1.0])
    with pytest.raises(ValueError):
        FieldGP(amplitude=-1.0).fit([[0.0, 0.0]], [1.0])
    with pytest.raises(ValueError):
        GPHyperparams(length_scale=0.0)
