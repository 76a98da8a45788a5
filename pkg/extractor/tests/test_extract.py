import json
import struct
import subprocess
import sys

import numpy as np
from PIL import Image

from hubextract import ExtractionJob, extract, extract_batch


def run_disco(*args):
    return subprocess.run(
        [sys.executable, "-m", "disco", *args], capture_output=True, text=True
    )


def test_fmx_header_layout(tmp_path, toy_classification_dataset):
    result = extract(
        ExtractionJob("toy-linear", toy_classification_dataset, output_dir=tmp_path / "out")
    )
    blob = result.features_path.read_bytes()
    assert blob[:4] == b"FMX1"
    dtype_code, rank = struct.unpack("<BB", blob[4:6])
    assert (dtype_code, rank) == (1, 2)
    dims = struct.unpack("<2I", blob[6:14])
    assert dims == (10, 8)
    assert len(blob) == 14 + 4 * 10 * 8


def test_fixed_weight_fixture_matches_hand_computation(tmp_path, toy_classification_dataset):
    result = extract(
        ExtractionJob("toy-linear", toy_classification_dataset, output_dir=tmp_path / "out")
    )
    blob = result.features_path.read_bytes()
    features = np.frombuffer(blob[14:], dtype="<f4").reshape(10, 8)

    # hand recomputation: decode, 4x4 block means, fixed linear map
    with Image.open(toy_classification_dataset / "img3.png") as img:
        pixels = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    pixels = np.transpose(pixels, (2, 0, 1))  # (3, 16, 16)
    pooled = pixels.reshape(3, 4, 4, 4, 4).mean(axis=(2, 4))
    flat = pooled.ravel()
    expected = np.empty(8)
    for i in range(8):
        acc = 0.0
        for j in range(48):
            acc += (((3 * i + 7 * j) % 11) - 5) / 10.0 * flat[j]
        expected[i] = acc + (i - 3.5) / 10.0
    assert np.abs(features[3] - expected).max() < 1e-5


def test_round_trip_scores_in_primary_toolkit(tmp_path, toy_classification_dataset):
    out_dir = tmp_path / "out"
    result = extract(ExtractionJob("toy-linear", toy_classification_dataset, output_dir=out_dir))
    assert result.n_samples == 10

    proc = run_disco(
        "score", str(result.features_path), str(result.labels_path), "--groups", "4"
    )
    assert proc.returncode == 0, proc.stderr
    report = json.loads(proc.stdout)
    assert 0.0 <= report["final"]["S_cls"] <= 1.0
    assert report["n_samples"] == 10


def test_extraction_is_deterministic(tmp_path, toy_classification_dataset):
    first = extract(
        ExtractionJob("toy-linear", toy_classification_dataset, output_dir=tmp_path / "a")
    )
    second = extract(
        ExtractionJob("toy-linear", toy_classification_dataset, output_dir=tmp_path / "b")
    )
    assert first.features_path.read_bytes() == second.features_path.read_bytes()
    assert first.labels_path.read_text() == second.labels_path.read_text()


def test_detection_maps_score_in_primary_toolkit(tmp_path, toy_detection_dataset):
    result = extract(
        ExtractionJob(
            "toy-conv", toy_detection_dataset, layer="stage1", output_dir=tmp_path / "out"
        )
    )
    blob = result.features_path.read_bytes()
    assert blob[:4] == b"FMX1" and blob[5] == 3  # rank-3 records

    proc = run_disco(
        "score", str(result.features_path), str(result.labels_path),
        "--task", "det", "--groups", "2", "--pca-dim", "0",
    )
    assert proc.returncode == 0, proc.stderr
    report = json.loads(proc.stdout)
    assert report["n_boxes"] == 4
    assert report["final"]["S_reg"] <= 0.0
    assert 0.0 <= report["final"]["S_cls"] <= 1.0


def test_seeded_resnet_smoke(tmp_path, toy_classification_dataset):
    result = extract(
        ExtractionJob(
            "resnet18", toy_classification_dataset, batch_size=4, output_dir=tmp_path / "out"
        )
    )
    blob = result.features_path.read_bytes()
    dims = struct.unpack("<2I", blob[6:14])
    assert dims == (10, 512)
    proc = run_disco("score", str(result.features_path), str(result.labels_path))
    assert proc.returncode == 0, proc.stderr


def test_batch_reports_failures_without_aborting(tmp_path, toy_classification_dataset):
    jobs = [
        ExtractionJob("toy-linear", toy_classification_dataset, output_dir=tmp_path / "out"),
        ExtractionJob("no-such-model", toy_classification_dataset, output_dir=tmp_path / "out"),
    ]
    results, failures = extract_batch(jobs)
    assert len(results) == 1 and results[0].model_id == "toy-linear"
    assert len(failures) == 1 and failures[0]["model"] == "no-such-model"


def test_manifest_feeds_primary_rank(tmp_path, toy_classification_dataset):
    out_dir = tmp_path / "out"
    for model in ("toy-linear", "toy-conv"):
        extract(ExtractionJob(model, toy_classification_dataset, output_dir=out_dir))
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert {entry["model_id"] for entry in manifest} == {"toy-linear", "toy-conv"}

    proc = run_disco("rank", str(out_dir / "manifest.json"), "--groups", "2")
    assert proc.returncode == 0, proc.stderr
    report = json.loads(proc.stdout)
    assert len(report["models"]) == 2
