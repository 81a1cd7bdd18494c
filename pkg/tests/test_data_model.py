import numpy as np
import pytest

from fuzzy_connectome.data_model import (
    BlockSpec,
    ClassLabel,
    DatasetManifest,
    SubjectRecord,
    SyntheticSpec,
    demo_synthetic_spec,
    generate_synthetic,
    load_dataset,
    save_dataset,
    write_series_csv,
)
from fuzzy_connectome.errors import DatasetError


def _write_manifest(tmp_path, subjects, roi_count):
    doc = DatasetManifest.model_validate({"roi_count": roi_count, "subjects": subjects})
    path = tmp_path / "manifest.json"
    path.write_text(doc.model_dump_json(), encoding="utf-8")
    return path


def test_label_encoding_is_stable():
    assert [int(c) for c in ClassLabel] == [0, 1, 2]
    assert ClassLabel.parse("sz") is ClassLabel.SZ
    assert ClassLabel.parse(2) is ClassLabel.ADHD
    with pytest.raises(ValueError):
        ClassLabel.parse("MDD")


def test_empty_manifest_loads_empty_list(tmp_path):
    assert load_dataset(_write_manifest(tmp_path, [], 118)) == []


def test_single_subject_round_trip(tmp_path):
    series = np.random.default_rng(0).standard_normal((118, 142))
    write_series_csv(series, tmp_path / "s1.csv")
    manifest = _write_manifest(tmp_path, [{"id": "s1", "label": "SZ", "path": "s1.csv"}], 118)

    records = load_dataset(manifest)
    assert len(records) == 1
    rec = records[0]
    assert rec.label is ClassLabel.SZ
    assert (rec.roi_count, rec.timepoints) == (118, 142)
    np.testing.assert_array_equal(rec.series, series)


def test_dimension_mismatch_names_subject(tmp_path):
    write_series_csv(np.ones((117, 142)) + np.arange(142), tmp_path / "bad.csv")
    manifest = _write_manifest(tmp_path, [{"id": "sub-07", "label": "HC", "path": "bad.csv"}], 118)
    with pytest.raises(DatasetError, match="sub-07"):
        load_dataset(manifest)


def test_missing_series_file_reports_location(tmp_path):
    manifest = _write_manifest(tmp_path, [{"id": "ghost", "label": "HC", "path": "nope.csv"}], 4)
    with pytest.raises(DatasetError) as err:
        load_dataset(manifest)
    assert "ghost" in str(err.value) and "nope.csv" in str(err.value)


def test_duplicate_ids_rejected(tmp_path):
    with pytest.raises(ValueError, match="duplicate"):
        _write_manifest(
            tmp_path,
            [{"id": "a", "label": "HC", "path": "a.csv"}, {"id": "a", "label": "SZ", "path": "b.csv"}],
            4,
        )


def test_non_finite_series_rejected():
    series = np.ones((3, 5))
    series[1, 2] = np.nan
    with pytest.raises(DatasetError, match="non-finite"):
        SubjectRecord("x", ClassLabel.HC, series)


def test_save_load_save_is_byte_identical(tmp_path):
    records = generate_synthetic(demo_synthetic_spec(seed=3, roi_count=12, timepoints=20))[:5]
    first = save_dataset(records, tmp_path / "a", seed=3)
    second = save_dataset(load_dataset(first), tmp_path / "b", seed=3)
    for rec in records:
        a = (tmp_path / "a" / "series" / f"{rec.id}.csv").read_bytes()
        b = (tmp_path / "b" / "series" / f"{rec.id}.csv").read_bytes()
        assert a == b
    assert first.read_bytes() == second.read_bytes()


def test_extra_columns_pass_through(tmp_path):
    series = np.random.default_rng(1).standard_normal((3, 6))
    rec = SubjectRecord("p1", ClassLabel.ADHD, series, {"sex": "F", "age": "31"})
    manifest = save_dataset([rec], tmp_path)
    assert load_dataset(manifest)[0].extra == {"sex": "F", "age": "31"}


def test_synthetic_empty_and_counts():
    assert generate_synthetic(SyntheticSpec(n_per_class=(0, 0, 0), roi_count=4, timepoints=10)) == []
    records = generate_synthetic(demo_synthetic_spec(roi_count=24, timepoints=30))
    counts = np.bincount([int(r.label) for r in records], minlength=3)
    assert counts.tolist() == [60, 58, 45]


def test_synthetic_is_deterministic():
    spec = demo_synthetic_spec(seed=11, roi_count=12, timepoints=25)
    a = generate_synthetic(spec)
    b = generate_synthetic(spec)
    assert all(np.array_equal(x.series, y.series) for x, y in zip(a, b))


def test_synthetic_block_hits_target_correlation():
    spec = SyntheticSpec(
        n_per_class=(1, 0, 0),
        roi_count=2,
        timepoints=5000,
        class_block_structure=[[BlockSpec(rois=[0, 1], target=0.9)], [], []],
        noise_sigma=0.1,
        seed=0,
    )
    series = generate_synthetic(spec)[0].series
    assert np.corrcoef(series)[0, 1] == pytest.approx(0.9, abs=0.05)


def test_overlapping_blocks_rejected():
    with pytest.raises(ValueError):
        SyntheticSpec(
            n_per_class=(1, 1, 1),
            roi_count=6,
            class_block_structure=[[BlockSpec(rois=[0, 1], target=0.5), BlockSpec(rois=[1, 2], target=0.5)], [], []],
        )
