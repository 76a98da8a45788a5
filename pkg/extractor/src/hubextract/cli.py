"""Command line: extract features for one or more models over a dataset."""

from __future__ import annotations

import argparse
import sys

from .extract import ExtractionJob, extract_batch


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hub-extract",
        description="Write FMX1 features and label JSON for vision models over an image dataset",
    )
    parser.add_argument("dataset", help="dataset directory containing dataset.json")
    parser.add_argument(
        "--models", required=True,
        help="comma-separated model names (toy-linear, toy-conv, resnet18[, name@weights.pt])",
    )
    parser.add_argument("--layer", default="penultimate",
                        help="'penultimate' or a spatial stage name like layer4/stage1")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--out-dir", default="extracted")
    args = parser.parse_args(argv)

    jobs = [
        ExtractionJob(
            model_name=name.strip(),
            dataset_path=args.dataset,
            layer=args.layer,
            batch_size=args.batch_size,
            output_dir=args.out_dir,
        )
        for name in args.models.split(",")
        if name.strip()
    ]
    results, failures = extract_batch(jobs)
    for result in results:
        print(f"{result.model_id}: {result.n_samples} samples -> {result.features_path}")
    for failure in failures:
        print(f"{failure['model']}: FAILED: {failure['error']}", file=sys.stderr)
    return 0 if results else 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
