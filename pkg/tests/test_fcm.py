import logging
import math

import numpy as np
import pytest

from fuzzy_connectome.fcm import (
    FcmResult,
    GaussianMF,
    IT2GaussianMF,
    derive_mfs,
    fcm_cluster,
    mf_eval,
)


def _blobs():
    return np.array([[0.0, 0.0], [0.0, 0.1], [10.0, 10.0], [10.0, 10.1]])


def test_single_cluster_is_the_centroid():
    data = np.random.default_rng(0).standard_normal((20, 3))
    result = fcm_cluster(data, 1)
    assert np.all(result.memberships == 1.0)
    np.testing.assert_allclose(result.centers[0], data.mean(axis=0), atol=1e-9)


def test_separated_blobs_recover_blob_means():
    result = fcm_cluster(_blobs(), 2, seed=3)
    centers = sorted(result.centers.tolist())
    np.testing.assert_allclose(centers[0], [0.0, 0.05], atol=1e-3)
    np.testing.assert_allclose(centers[1], [10.0, 10.05], atol=1e-3)


def test_memberships_are_distributions_and_objective_decreases():
    data = np.random.default_rng(1).standard_normal((50, 4))
    result = fcm_cluster(data, 3, seed=2)
    np.testing.assert_allclose(result.memberships.sum(axis=1), 1.0, atol=1e-9)
    assert result.memberships.min() >= 0.0 and result.memberships.max() <= 1.0
    history = result.objective_history
    assert all(b <= a + 1e-9 for a, b in zip(history, history[1:]))
    assert result.final_objective == pytest.approx(history[-1])


def test_clustering_is_seeded():
    data = np.random.default_rng(4).standard_normal((30, 2))
    a, b = fcm_cluster(data, 3, seed=7), fcm_cluster(data, 3, seed=7)
    np.testing.assert_array_equal(a.centers, b.centers)


def test_point_on_a_center_gets_crisp_membership():
    data = np.array([[0.0], [1.0], [5.0]])
    result = fcm_cluster(data, 3, max_iter=1)
    # with three clusters on three points every point sits on a center
    assert set(np.round(result.memberships.max(axis=1), 12).tolist()) == {1.0}


def test_identical_rows_keep_finite_centers():
    result = fcm_cluster(np.zeros((10, 2)), 3, seed=0)
    assert np.all(np.isfinite(result.centers))
    np.testing.assert_array_equal(result.centers, np.zeros((3, 2)))
    assert np.all(np.isfinite(result.memberships))
    np.testing.assert_allclose(result.memberships, np.full((10, 3), 1.0 / 3.0))


def test_fewer_distinct_rows_than_clusters():
    data = np.array([[0.0, 1.0]] * 6 + [[2.0, 3.0]] * 4)
    for seed in range(5):
        result = fcm_cluster(data, 3, seed=seed)
        assert np.all(np.isfinite(result.centers))
        assert np.all(np.isfinite(result.memberships))
        np.testing.assert_allclose(result.memberships.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(result.memberships.sum(axis=0) > 0)
        bank = derive_mfs(result, data)
        assert np.all(np.isfinite(bank.sigma1)) and np.all(bank.sigma1 > 0)


def test_cluster_argument_checks():
    with pytest.raises(ValueError):
        fcm_cluster(np.zeros((2, 1)), 3)
    with pytest.raises(ValueError):
        fcm_cluster(np.zeros((4, 1)), 2, fuzzifier=1.0)


def test_weighted_sigma_and_spread():
    data = np.array([[0.0], [2.0]])
    result = FcmResult(np.array([[1.0]]), np.ones((2, 1)), 2.0, 1, 0.0)
    bank = derive_mfs(result, data, delta=0.2)
    assert bank.sigma1[0, 0] == pytest.approx(0.8)
    assert bank.sigma2[0, 0] == pytest.approx(1.2)
    flat = derive_mfs(result, data, delta=0.0)
    np.testing.assert_array_equal(flat.sigma1, flat.sigma2)
    assert flat.type1()[0][0] == GaussianMF(1.0, 1.0)


def test_single_point_cluster_is_floored(caplog):
    data = np.array([[0.0], [4.0]])
    result = FcmResult(np.array([[0.0], [4.0]]), np.eye(2), 2.0, 1, 0.0)
    with caplog.at_level(logging.WARNING):
        bank = derive_mfs(result, data, delta=0.0)
    np.testing.assert_allclose(bank.sigma1[:, 0], [4e-6, 4e-6])
    assert "floor" in caplog.text


def test_mf_eval_examples():
    mf = IT2GaussianMF(0.0, 0.5, 1.0)
    assert mf_eval(mf, 0.0) == (1.0, 1.0)
    lower, upper = mf_eval(mf, 1.0)
    assert upper == pytest.approx(math.exp(-0.5), abs=1e-12)
    assert lower == pytest.approx(math.exp(-2.0), abs=1e-12)
    same = IT2GaussianMF(1.0, 0.7, 0.7)
    for x in (-3.0, 0.2, 4.0):
        lo, hi = mf_eval(same, x)
        assert lo == hi


def test_mf_eval_shape_properties():
    mf = IT2GaussianMF(2.0, 0.6, 1.3)
    xs = np.linspace(2.0, 8.0, 25)
    values = [mf_eval(mf, x) for x in xs]
    assert all(0.0 < lo <= hi <= 1.0 for lo, hi in values)
    assert all(a[1] > b[1] for a, b in zip(values, values[1:]))
    for d in (0.3, 1.7):
        assert mf_eval(mf, 2.0 + d) == pytest.approx(mf_eval(mf, 2.0 - d))


def test_invalid_widths_rejected():
    with pytest.raises(ValueError):
        IT2GaussianMF(0.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        GaussianMF(0.0, 0.0)
