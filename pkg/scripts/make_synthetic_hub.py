#!/usr/bin/env python3
"""Build a synthetic model hub on disk and evaluate the ranking end to end.

Writes one FMX1 feature file per synthetic model, a shared label file, a hub
manifest consumable by ``disco rank``, and a benchmark file whose ground-truth
performances come from the held-out nearest-mean oracle. Then runs the rank
and eval flows in process and prints the resulting correlation.

Usage:
    python3 scripts/make_synthetic_hub.py --out-dir /tmp/hub --seed 0
"""

import argparse
import json
from pathlib import Path

import numpy as np

from disco.io import save_benchmark, save_classification_labels, save_features, write_json_atomic
from disco.pipeline import RunConfig, run_eval, run_rank
from disco.ranking import BenchmarkRecord
from disco.synthetic import heldout_nearest_mean_accuracy, synthetic_hub


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--samples", type=int, default=600)
    parser.add_argument("--classes", type=int, default=6)
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--groups", type=int, default=8)
    args = parser.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    labels, models = synthetic_hub(
        args.seed, n_samples=args.samples, n_classes=args.classes, dim=args.dim
    )
    labels_path = args.out_dir / "labels.json"
    save_classification_labels(labels, labels_path)

    manifest = []
    performances = []
    for model_id, features in models:
        features_path = args.out_dir / f"{model_id}.fmx"
        save_features(features, features_path)
        manifest.append(
            {"model_id": model_id, "features": features_path.name, "labels": labels_path.name}
        )
        performances.append(heldout_nearest_mean_accuracy(features, labels))
    manifest_path = args.out_dir / "manifest.json"
    write_json_atomic(manifest, manifest_path)

    config = RunConfig(task="cls", groups=args.groups)
    ranking = run_rank(manifest_path, config)
    scores = {row["model_id"]: row["S_cls"] for row in ranking["models"]}

    record = BenchmarkRecord(
        model_ids=tuple(m["model_id"] for m in manifest),
        scores=np.array([scores[m["model_id"]] for m in manifest]),
        performances=np.array(performances),
    )
    benchmark_path = args.out_dir / "benchmark.json"
    save_benchmark(record, benchmark_path)
    metrics = run_eval(benchmark_path)

    print(f"hub written to {args.out_dir}")
    print("ranking (best first):")
    for row in ranking["models"]:
        oracle = performances[[m["model_id"] for m in manifest].index(row["model_id"])]
        print(f"  {row['rank']:2d}. {row['model_id']}  S_cls={row['S_cls']:.4f}  heldout-acc={oracle:.3f}")
    print(json.dumps({k: metrics[k] for k in ("tau", "weighted_tau", "top_k_hits")}, indent=2))


if __name__ == "__main__":
    main()
