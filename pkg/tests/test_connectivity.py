import numpy as np
import pytest

from fuzzy_connectome.connectivity import (
    BACKGROUND,
    ConnectivityMatrix,
    LabelMap,
    correlation_matrix,
    connectivity_matrix,
    export_heatmap,
    load_matrix_csv,
    pearson,
    roi_average,
    save_matrix_csv,
)
from fuzzy_connectome.data_model import BlockSpec, ClassLabel, SubjectRecord, SyntheticSpec, generate_synthetic
from fuzzy_connectome.errors import ShapeError
from utils.ppm import read_ppm


def test_roi_average_midpoint():
    voxels = np.array([[1.0, 3.0, 5.0], [3.0, 5.0, 7.0]])
    np.testing.assert_array_equal(roi_average(voxels, np.array([0, 0]), 1), [[2.0, 4.0, 6.0]])


def test_roi_average_matches_loop_oracle():
    rng = np.random.default_rng(4)
    voxels = rng.standard_normal((10, 20))
    labels = np.array([0, 1, 2, 0, 1, 2, BACKGROUND, 0, 1, 2])
    out = roi_average(voxels, LabelMap(labels), 3)
    for r in range(3):
        rows = [voxels[v] for v in range(10) if labels[v] == r]
        np.testing.assert_allclose(out[r], sum(rows) / len(rows), rtol=0, atol=1e-15)


def test_roi_average_empty_roi_rejected():
    with pytest.raises(ShapeError, match="zero voxels"):
        roi_average(np.ones((2, 4)), np.array([0, 0]), 2)


@pytest.mark.parametrize(
    "x, y, expected",
    [
        ([1, 2, 3], [1, 2, 3], 1.0),
        ([1, 2, 3], [3, 2, 1], -1.0),
        ([1, 2, 3], [1, 2, 4], 0.98198),
    ],
)
def test_pearson_examples(x, y, expected):
    assert pearson(np.array(x), np.array(y)).r == pytest.approx(expected, abs=1e-5)


def test_pearson_constant_series_flagged():
    res = pearson(np.array([2.0, 2.0, 2.0]), np.array([1.0, 2.0, 3.0]))
    assert res.r == 0.0 and res.zero_variance


def test_pearson_errors():
    with pytest.raises(ValueError):
        pearson(np.array([1.0, 2.0]), np.array([1.0, 2.0, 3.0]))
    with pytest.raises(ValueError):
        pearson(np.array([1.0]), np.array([1.0]))


def test_pearson_symmetry_and_affine_invariance():
    rng = np.random.default_rng(0)
    x, y = rng.standard_normal(50), rng.standard_normal(50)
    assert pearson(x, y).r == pytest.approx(pearson(y, x).r, abs=1e-15)
    assert pearson(-3.0 * x + 2.0, y).r == pytest.approx(-pearson(x, y).r, abs=1e-12)


def test_single_roi_matrix():
    np.testing.assert_array_equal(correlation_matrix(np.array([[1.0, 5.0, 2.0]])).values, [[1.0]])


def test_linear_dependence_gives_one():
    x = np.array([1.0, 4.0, 2.0, 8.0])
    m = connectivity_matrix(SubjectRecord("s", ClassLabel.HC, np.stack([x, 2 * x])))
    assert m.values[0, 1] == pytest.approx(1.0, abs=1e-12)


def test_matrix_invariants_on_random_subjects():
    rng = np.random.default_rng(8)
    for _ in range(100):
        m = correlation_matrix(rng.standard_normal((6, 15))).values
        np.testing.assert_allclose(m, m.T, atol=1e-12)
        np.testing.assert_array_equal(np.diag(m), 1.0)
        assert np.all(np.abs(m) <= 1.0)


def test_matrix_agrees_with_pairwise_pearson():
    series = np.random.default_rng(2).standard_normal((4, 30))
    m = correlation_matrix(series).values
    for i in range(4):
        for j in range(4):
            if i != j:
                assert m[i, j] == pytest.approx(pearson(series[i], series[j]).r, abs=1e-12)


def test_synthetic_blocks_recovered():
    spec = SyntheticSpec(
        n_per_class=(1, 0, 0),
        roi_count=6,
        timepoints=5000,
        class_block_structure=[[BlockSpec(rois=[0, 1, 2], target=0.9)], [], []],
        noise_sigma=1.0,
        seed=5,
    )
    m = connectivity_matrix(generate_synthetic(spec)[0]).values
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        assert m[i, j] == pytest.approx(0.9, abs=0.05)
    for i, j in [(0, 3), (3, 4), (2, 5)]:
        assert m[i, j] == pytest.approx(0.0, abs=0.05)


def test_zero_variance_row_set_to_zero(caplog):
    series = np.array([[1.0, 2.0, 3.0], [5.0, 5.0, 5.0], [2.0, 1.0, 4.0]])
    m = correlation_matrix(series, "flat").values
    assert m[1].tolist() == [0.0, 0.0, 0.0]
    assert "zero variance" in caplog.text


def test_matrix_csv_round_trip(tmp_path):
    m = correlation_matrix(np.random.default_rng(1).standard_normal((5, 12)), "s9")
    path = save_matrix_csv(m, tmp_path / "s9.csv")
    np.testing.assert_array_equal(load_matrix_csv(path).values, m.values)
    assert "e" in path.read_text().split(",")[0]


def test_upper_triangle_length():
    m = ConnectivityMatrix(np.eye(118))
    assert m.upper_triangle().size == 6903


def test_heatmap_colors(tmp_path):
    m = ConnectivityMatrix(np.array([[1.0, -1.0], [0.0, 1.0]]))
    img = read_ppm(export_heatmap(m, tmp_path / "m.ppm"))
    assert img.shape == (2, 2, 3)
    assert img[0, 0].tolist() == [255, 0, 0]
    assert img[0, 1].tolist() == [0, 0, 255]
    assert img[1, 0].tolist() == [255, 255, 255]
