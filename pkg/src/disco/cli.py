"""Command-line interface: score, rank, eval, analyze, sample."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import pipeline
from .errors import DiscoError, StageError
from .io import write_text_atomic


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--groups", type=int, default=8, help="number of spectral groups")
    parser.add_argument(
        "--pca-dim", type=int, default=128,
        help="PCA target dimension; 0 disables the PCA stage (no centering)",
    )
    parser.add_argument(
        "--sample-ratio", type=float, default=None,
        help="keep this fraction of hard examples per class before scoring",
    )
    parser.add_argument("--rcond", type=float, default=None, help="pseudo-inverse cutoff")
    parser.add_argument(
        "--seed", type=int, default=None,
        help="echoed into the report; scoring itself is deterministic",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="disco",
        description="Rank pre-trained models by the distribution of spectral components",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    score = sub.add_parser("score", help="score one model's features against its labels")
    score.add_argument("features", help="FMX1 feature file")
    score.add_argument("labels", help="label JSON file")
    score.add_argument("--task", choices=pipeline.TASKS, default="cls")
    _add_config_flags(score)
    score.add_argument("--out", default=None, help="report path (default: stdout)")

    rank = sub.add_parser("rank", help="score and rank every model in a hub manifest")
    rank.add_argument("manifest", help="hub manifest JSON")
    rank.add_argument("--task", choices=pipeline.TASKS, default="cls")
    _add_config_flags(rank)
    rank.add_argument("--jobs", type=int, default=None, help="concurrent model scorings")
    rank.add_argument("--out", default=None)

    ev = sub.add_parser("eval", help="correlate scores with ground-truth performances")
    ev.add_argument("benchmark", help="benchmark JSON of {model_id, score, performance}")
    ev.add_argument(
        "--tie-tolerance", type=float, default=0.1,
        help="performance gaps at or below this merge into one rank",
    )
    ev.add_argument("--out", default=None)

    analyze = sub.add_parser("analyze", help="per-group change between two feature files")
    analyze.add_argument("before", help="FMX1 feature file")
    analyze.add_argument("after", help="FMX1 feature file, same shape")
    analyze.add_argument("--groups", type=int, default=8)
    analyze.add_argument("--out", default=None, help="JSON path; CSV mirror written alongside")

    sample = sub.add_parser("sample", help="select hard examples and emit their indices")
    sample.add_argument("features", help="FMX1 feature file")
    sample.add_argument("labels", help="classification label JSON")
    sample.add_argument("--ratio", type=float, required=True)
    sample.add_argument("--out", default=None)

    return parser


def _config_from_args(args: argparse.Namespace) -> pipeline.RunConfig:
    return pipeline.RunConfig(
        task=getattr(args, "task", "cls"),
        groups=args.groups,
        pca_dim=args.pca_dim,
        sample_ratio=args.sample_ratio,
        rcond=args.rcond,
        seed=args.seed,
        jobs=getattr(args, "jobs", None),
    )


def _emit(report: dict, out: str | None, started: float, csv_text: str | None = None) -> None:
    report["timing"] = {"seconds": time.perf_counter() - started}
    text = json.dumps(report, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    write_text_atomic(text, out)
    if csv_text is not None:
        write_text_atomic(csv_text, Path(out).with_suffix(".csv"))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        if args.command == "score":
            report = pipeline.run_score(args.features, args.labels, _config_from_args(args))
            _emit(report, args.out, started)
        elif args.command == "rank":
            report = pipeline.run_rank(args.manifest, _config_from_args(args))
            _emit(report, args.out, started)
        elif args.command == "eval":
            report = pipeline.run_eval(args.benchmark, args.tie_tolerance)
            _emit(report, args.out, started)
        elif args.command == "analyze":
            report = pipeline.run_analyze(args.before, args.after, args.groups)
            csv_text = pipeline.analyze_csv(report)
            _emit(report, args.out, started, csv_text=csv_text)
        elif args.command == "sample":
            report = pipeline.run_sample(args.features, args.labels, args.ratio)
            _emit(report, args.out, started)
    except StageError as exc:
        print(f"disco: {exc}", file=sys.stderr)
        return 1
    except (DiscoError, OSError) as exc:
        print(f"disco: error: {exc}", file=sys.stderr)
        return 1
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
