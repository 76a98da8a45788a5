import json
import struct

import numpy as np
import pytest

from disco.errors import FormatError, InvalidInput
from disco.io import (
    Box,
    ClassificationLabels,
    DegenerateCropWarning,
    DetectionLabels,
    ImageAnnotation,
    _atomic_binary,
    adaptive_avg_pool,
    build_box_features,
    load_benchmark,
    load_feature_maps,
    load_features,
    load_labels,
    load_manifest,
    pca_fit_transform,
    save_classification_labels,
    save_detection_labels,
    save_feature_maps,
    save_features,
    write_json_atomic,
)


class TestFeatureFiles:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        matrix = rng.normal(size=(5, 3)).astype(np.float32).astype(np.float64)
        path = tmp_path / "features.fmx"
        save_features(matrix, path)
        loaded = load_features(path)
        assert loaded.dtype == np.float64
        assert np.array_equal(loaded, matrix)
        # saving the loaded copy reproduces the file byte for byte
        second = tmp_path / "again.fmx"
        save_features(loaded, second)
        assert path.read_bytes() == second.read_bytes()

    def test_independent_byte_level_writer(self, tmp_path):
        # cross-implementation fixture: 2x2 identity laid out by hand
        path = tmp_path / "identity.fmx"
        blob = b"FMX1" + struct.pack("<BB", 1, 2) + struct.pack("<2I", 2, 2)
        blob += struct.pack("<4f", 1.0, 0.0, 0.0, 1.0)
        path.write_bytes(blob)
        assert np.array_equal(load_features(path), np.eye(2))

    def test_map_sequence_round_trip(self, tmp_path, rng):
        maps = [
            rng.normal(size=(4, 3, 5)).astype(np.float32).astype(np.float64),
            rng.normal(size=(4, 2, 2)).astype(np.float32).astype(np.float64),
        ]
        path = tmp_path / "maps.fmx"
        save_feature_maps(maps, path)
        loaded = load_feature_maps(path)
        assert len(loaded) == 2
        for original, restored in zip(maps, loaded):
            assert np.array_equal(original, restored)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.fmx"
        path.write_bytes(b"FMX0" + struct.pack("<BB2I4f", 1, 2, 1, 1, 0.0, 0.0, 0.0, 0.0))
        with pytest.raises(FormatError, match="bad magic"):
            load_features(path)

    def test_malformed_fixture_set(self, tmp_path):
        good_header = b"FMX1" + struct.pack("<BB", 1, 2) + struct.pack("<2I", 2, 2)
        payload = struct.pack("<4f", 1.0, 2.0, 3.0, 4.0)
        fixtures = {
            "bad-dtype": b"FMX1" + struct.pack("<BB", 9, 2) + struct.pack("<2I", 2, 2) + payload,
            "bad-rank": b"FMX1" + struct.pack("<BB", 1, 4) + struct.pack("<4I", 1, 1, 1, 1) + payload,
            "zero-dim": b"FMX1" + struct.pack("<BB", 1, 2) + struct.pack("<2I", 0, 2) + payload,
            "truncated-dims": b"FMX1" + struct.pack("<BB", 1, 2) + struct.pack("<I", 2),
            "truncated-payload": good_header + payload[:-2],
            "nan-payload": good_header + struct.pack("<4f", 1.0, float("nan"), 3.0, 4.0),
            "inf-payload": good_header + struct.pack("<4f", 1.0, 2.0, float("inf"), 4.0),
            "trailing-data": good_header + payload + b"xx",
        }
        for name, blob in fixtures.items():
            path = tmp_path / f"{name}.fmx"
            path.write_bytes(blob)
            with pytest.raises(FormatError):
                load_features(path)

    def test_non_finite_offset_reported(self, tmp_path):
        header = b"FMX1" + struct.pack("<BB", 1, 2) + struct.pack("<2I", 2, 2)
        path = tmp_path / "nan.fmx"
        path.write_bytes(header + struct.pack("<4f", 1.0, float("nan"), 3.0, 4.0))
        with pytest.raises(FormatError) as excinfo:
            load_features(path)
        assert excinfo.value.offset == len(header) + 4

    def test_writer_rejects_float32_overflow(self, tmp_path):
        with pytest.raises(InvalidInput):
            save_features(np.array([[1e39, 0.0]]), tmp_path / "overflow.fmx")


class TestLabels:
    def test_classification_round_trip(self, tmp_path):
        path = tmp_path / "labels.json"
        save_classification_labels([0, 1, 2, 1, 0], path)
        loaded = load_labels(path)
        assert isinstance(loaded, ClassificationLabels)
        assert loaded.labels.tolist() == [0, 1, 2, 1, 0]
        assert loaded.class_count == 3

    def test_classification_gap_rejected(self, tmp_path):
        path = tmp_path / "labels.json"
        path.write_text(json.dumps({"task": "classification", "labels": [0, 2, 2]}))
        with pytest.raises(FormatError, match="dense"):
            load_labels(path)

    def test_detection_round_trip(self, tmp_path):
        det = DetectionLabels(
            images=[
                ImageAnnotation(
                    image_id="a",
                    width=10,
                    height=8,
                    boxes=[Box(0, 1.0, 1.0, 5.0, 6.0), Box(1, 0.0, 0.0, 10.0, 8.0)],
                )
            ]
        )
        path = tmp_path / "det.json"
        save_detection_labels(det, path)
        loaded = load_labels(path)
        assert isinstance(loaded, DetectionLabels)
        assert loaded.total_boxes == 2
        assert loaded.images[0].boxes[0] == Box(0, 1.0, 1.0, 5.0, 6.0)

    def test_detection_box_outside_image(self, tmp_path):
        path = tmp_path / "det.json"
        doc = {
            "task": "detection",
            "images": [
                {
                    "image_id": "a",
                    "width": 4,
                    "height": 4,
                    "boxes": [{"class": 0, "x_min": 0, "y_min": 0, "x_max": 5, "y_max": 2}],
                }
            ],
        }
        path.write_text(json.dumps(doc))
        with pytest.raises(FormatError, match="x-range"):
            load_labels(path)

    def test_unknown_task(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"task": "segmentation"}))
        with pytest.raises(FormatError, match="unknown task"):
            load_labels(path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(FormatError, match="invalid JSON"):
            load_labels(path)


class TestPca:
    def test_low_rank_data_reconstructs_exactly(self, rng):
        data = rng.normal(size=(40, 5)) @ rng.normal(size=(5, 20))
        transformed, model = pca_fit_transform(data, target_dim=5)
        reconstructed = transformed @ model.components.T + model.mean
        assert np.abs(reconstructed - data).max() < 1e-8

    def test_small_dimension_passes_through(self, rng):
        data = rng.normal(size=(30, 10))
        transformed, model = pca_fit_transform(data, target_dim=128)
        assert np.array_equal(transformed, data - data.mean(axis=0))
        assert model.note is not None
        assert np.array_equal(model.components, np.eye(10))

    def test_variance_matches_eigenvalue_oracle(self, rng):
        data = rng.normal(size=(50, 10)) * np.linspace(3.0, 0.5, 10)
        transformed, model = pca_fit_transform(data, target_dim=4)
        # independent oracle: eigenvalues of the sample covariance matrix
        eigenvalues = np.sort(np.linalg.eigvalsh(np.cov(data.T, ddof=1)))[::-1]
        assert np.abs(model.explained - eigenvalues[:4]).max() < 1e-8
        output_variance = transformed.var(axis=0, ddof=1).sum()
        assert abs(output_variance - eigenvalues[:4].sum()) < 1e-8

    def test_output_columns_uncorrelated(self, rng):
        data = rng.normal(size=(60, 12)) @ rng.normal(size=(12, 12))
        transformed, _ = pca_fit_transform(data, target_dim=6)
        covariance = np.cov(transformed.T, ddof=1)
        off_diagonal = covariance - np.diag(np.diag(covariance))
        assert np.abs(off_diagonal).max() < 1e-6 * covariance.max()

    def test_explained_nonincreasing_components_orthonormal(self, rng):
        data = rng.normal(size=(40, 9))
        _, model = pca_fit_transform(data, target_dim=5)
        assert np.all(np.diff(model.explained) <= 1e-12)
        gram = model.components.T @ model.components
        assert np.abs(gram - np.eye(model.components.shape[1])).max() < 1e-8

    def test_single_sample_rejected(self):
        with pytest.raises(InvalidInput):
            pca_fit_transform(np.ones((1, 4)))


class TestAdaptivePool:
    def test_constant_map(self):
        pooled = adaptive_avg_pool(np.full((1, 4, 4), 7.0), 2, 2)
        assert np.allclose(pooled, 7.0)

    def test_quadrant_means(self):
        values = np.arange(16, dtype=float).reshape(1, 4, 4)
        pooled = adaptive_avg_pool(values, 2, 2)
        expected = np.array([[[2.5, 4.5], [10.5, 12.5]]])
        assert np.allclose(pooled, expected)

    def test_identity_when_sizes_match(self, rng):
        values = rng.normal(size=(3, 5, 4))
        assert np.allclose(adaptive_avg_pool(values, 5, 4), values)

    def test_global_mean_preserved_on_exact_division(self, rng):
        values = rng.normal(size=(2, 6, 8))
        pooled = adaptive_avg_pool(values, 3, 4)
        assert pooled.mean() == pytest.approx(values.mean(), abs=1e-12)

    def test_output_larger_than_input(self):
        values = np.array([[[1.0, 3.0]]])  # 1 x 1 x 2 expands to overlapping cells
        pooled = adaptive_avg_pool(values, 1, 3)
        assert np.allclose(pooled, [[[1.0, 2.0, 3.0]]])

    def test_invalid_sizes(self):
        with pytest.raises(InvalidInput):
            adaptive_avg_pool(np.ones((1, 2, 2)), 0, 2)
        with pytest.raises(InvalidInput):
            adaptive_avg_pool(np.ones((2, 2)), 1, 1)


def detection_annotation(width=8, height=8, boxes=None):
    return DetectionLabels(
        images=[
            ImageAnnotation(
                image_id="img",
                width=width,
                height=height,
                boxes=boxes or [Box(0, 0.0, 0.0, width, height), Box(1, 0.0, 0.0, 4.0, 4.0)],
            )
        ]
    )


class TestBuildBoxFeatures:
    def test_full_image_box_equals_pooled_map(self, rng):
        spatial = rng.normal(size=(3, 6, 6))
        labels = DetectionLabels(
            images=[
                ImageAnnotation(
                    image_id="img", width=12, height=12,
                    boxes=[Box(0, 0.0, 0.0, 12.0, 12.0), Box(1, 0.0, 0.0, 6.0, 6.0)],
                )
            ]
        )
        features, targets = build_box_features([spatial], labels, pooled_side=2)
        expected = adaptive_avg_pool(spatial, 2, 2).ravel()
        assert np.allclose(features[0], expected)
        assert np.allclose(targets.boxes[0], [0.0, 0.0, 1.0, 1.0])

    def test_identical_boxes_identical_rows(self, rng):
        spatial = rng.normal(size=(2, 4, 4))
        labels = detection_annotation(
            boxes=[Box(0, 1.0, 1.0, 6.0, 7.0), Box(1, 1.0, 1.0, 6.0, 7.0)]
        )
        features, _ = build_box_features([spatial], labels)
        assert np.array_equal(features[0], features[1])

    def test_row_order_follows_image_then_box(self, rng):
        maps = [rng.normal(size=(2, 4, 4)) for _ in range(3)]
        counts = (2, 1, 3)
        images = []
        for i, count in enumerate(counts):
            boxes = [Box(k % 2, 0.0, 0.0, 4.0 + k, 8.0) for k in range(count)]
            images.append(ImageAnnotation(image_id=f"i{i}", width=8, height=8, boxes=boxes))
        features, targets = build_box_features(maps, DetectionLabels(images=images))
        assert features.shape[0] == 6
        assert targets.box_to_image.tolist() == [0, 0, 1, 2, 2, 2]

    def test_degenerate_box_expands_with_warning(self, rng):
        spatial = rng.normal(size=(1, 4, 4))
        labels = detection_annotation(
            boxes=[Box(0, 2.0, 2.0, 2.0, 2.0), Box(1, 0.0, 0.0, 8.0, 8.0)]
        )
        with pytest.warns(DegenerateCropWarning):
            features, _ = build_box_features([spatial], labels)
        assert features.shape == (2, 4)
        assert np.all(np.isfinite(features))

    def test_channel_mismatch_rejected(self, rng):
        maps = [rng.normal(size=(2, 4, 4)), rng.normal(size=(3, 4, 4))]
        labels = DetectionLabels(
            images=[
                ImageAnnotation("a", 8, 8, [Box(0, 0.0, 0.0, 8.0, 8.0)]),
                ImageAnnotation("b", 8, 8, [Box(1, 0.0, 0.0, 8.0, 8.0)]),
            ]
        )
        with pytest.raises(InvalidInput, match="channel"):
            build_box_features(maps, labels)

    def test_map_count_mismatch_rejected(self, rng):
        labels = detection_annotation()
        with pytest.raises(InvalidInput):
            build_box_features([rng.normal(size=(1, 4, 4))] * 2, labels)


class TestBenchmarkAndManifest:
    def test_benchmark_round_trip(self, tmp_path):
        path = tmp_path / "bench.json"
        doc = [
            {"model_id": "a", "score": 0.5, "performance": 91.0},
            {"model_id": "b", "score": 0.25, "performance": 88.5},
        ]
        path.write_text(json.dumps(doc))
        rec = load_benchmark(path)
        assert rec.model_ids == ("a", "b")
        assert rec.scores.tolist() == [0.5, 0.25]

    def test_malformed_benchmark(self, tmp_path):
        path = tmp_path / "bench.json"
        path.write_text(json.dumps([{"model_id": "a", "score": 0.5}]))
        with pytest.raises(FormatError):
            load_benchmark(path)

    def test_manifest_paths_relative_to_file(self, tmp_path):
        sub = tmp_path / "hub"
        sub.mkdir()
        manifest = sub / "manifest.json"
        manifest.write_text(
            json.dumps([{"model_id": "m", "features": "f.fmx", "labels": "l.json"}])
        )
        entries = load_manifest(manifest)
        assert entries[0].features_path == sub / "f.fmx"
        assert entries[0].labels_path == sub / "l.json"


class TestAtomicWrites:
    def test_no_partial_file_on_error(self, tmp_path):
        target = tmp_path / "out.bin"
        with pytest.raises(RuntimeError):
            with _atomic_binary(target) as handle:
                handle.write(b"partial")
                raise RuntimeError("boom")
        assert not target.exists()
        assert list(tmp_path.iterdir()) == []

    def test_successful_write_replaces(self, tmp_path):
        target = tmp_path / "out.json"
        write_json_atomic({"ok": 1}, target)
        assert json.loads(target.read_text()) == {"ok": 1}
        assert list(tmp_path.iterdir()) == [target]
