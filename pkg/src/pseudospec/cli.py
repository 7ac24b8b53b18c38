"""Command-line interface.

Subcommands cover the whole workflow: `generate` random banded corpora,
`train` the classifier, `calibrate` its decision threshold, `compute` a
single pseudospectrum (full or hybrid), and `benchmark` a held-out corpus.
Every command takes an explicit --seed, uses no ambient entropy, and writes a
.config.json sidecar with its fully-resolved parameters next to its outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import io
from .core import make_grid, full_pseudospectrum, sensitive_zone
from .generate import GenSpec, generate_corpus
from .network import TrainConfig, load_model, save_model, train
from .pipeline import (aggregate_records, benchmark, build_dataset,
                       calibrate_threshold, hybrid_pseudospectrum)


def _add_grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--x-min", type=float, default=-4.0)
    p.add_argument("--x-max", type=float, default=4.0)
    p.add_argument("--y-min", type=float, default=-4.0)
    p.add_argument("--y-max", type=float, default=4.0)
    p.add_argument("--nx", type=int, default=100)
    p.add_argument("--ny", type=int, default=100)


def _grid_from(args):
    return make_grid(args.x_min, args.x_max, args.y_min, args.y_max,
                     args.nx, args.ny)


def _config_dict(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def cmd_generate(args) -> int:
    spec = GenSpec(n=args.n, bandwidths=tuple(args.bandwidths),
                   cond_cap=args.cond_cap, seed=args.seed,
                   max_rejects=args.max_rejects)
    corpus = generate_corpus(spec, args.count, workers=args.threads)
    out = Path(args.out)
    io.write_corpus(out, corpus)
    io.write_config_sidecar(out / "corpus", _config_dict(args))
    print(f"wrote {len(corpus)} matrices to {out}")
    return 0


def cmd_train(args) -> int:
    corpus = io.read_corpus(args.corpus)
    grid = _grid_from(args)
    cache = Path(args.dataset_cache) if args.dataset_cache else None
    if cache is not None and cache.exists():
        import numpy as np
        from .pipeline import Dataset
        blob = np.load(cache)
        dataset = Dataset(xy=blob["xy"], features=blob["features"],
                          labels=blob["labels"], matrix_ids=blob["matrix_ids"])
        print(f"loaded cached dataset ({len(dataset)} samples) from {cache}")
    else:
        dataset = build_dataset(corpus, grid, args.eps, args.seed,
                                workers=args.threads)
        if cache is not None:
            import numpy as np
            np.savez_compressed(cache, xy=dataset.xy, features=dataset.features,
                                labels=dataset.labels, matrix_ids=dataset.matrix_ids)
    config = TrainConfig(learning_rate=args.lr, batch_size=args.batch_size,
                         max_epochs=args.max_epochs, patience=args.patience,
                         val_fraction=args.val_fraction, seed=args.seed)
    bundle, history = train(dataset, config)
    bundle.meta["n_samples"] = len(dataset)
    bundle.meta["n_matrices"] = len(corpus)
    bundle.meta["n_positive"] = int(dataset.labels.sum())
    bundle.meta["eps"] = args.eps
    save_model(bundle, args.out)
    history_path = args.history or str(Path(args.out).with_suffix(".history.csv"))
    with open(history_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss"])
        writer.writerows(history)
    io.write_config_sidecar(args.out, _config_dict(args))
    print(f"trained on {len(dataset)} samples "
          f"({bundle.meta['n_positive']} positive), "
          f"{bundle.meta['epochs_run']} epochs, "
          f"best val loss {bundle.meta['final_val_loss']:.6f}")
    return 0


def cmd_calibrate(args) -> int:
    bundle = load_model(args.model)
    corpus = io.read_corpus(args.corpus)
    grid = _grid_from(args)
    report = calibrate_threshold(bundle, corpus, grid, args.eps,
                                 workers=args.threads)
    report_path = args.report or str(Path(args.model).with_suffix(".calibration.csv"))
    io.write_calibration_csv(report_path, report)
    io.write_config_sidecar(report_path, _config_dict(args))
    if not report.passed:
        print("calibration FAILED: no threshold reaches the recall targets",
              file=sys.stderr)
        return 1
    bundle.tau_star = report.tau_star
    sel = report.taus == report.tau_star
    bundle.meta["calibration_median_recall"] = float(report.median_recall[sel][0])
    bundle.meta["calibration_p10_recall"] = float(report.p10_recall[sel][0])
    save_model(bundle, args.model)
    print(f"calibrated threshold {report.tau_star:.2f} "
          f"(median recall {bundle.meta['calibration_median_recall']:.3f}, "
          f"p10 {bundle.meta['calibration_p10_recall']:.3f})")
    return 0


def cmd_compute(args) -> int:
    A = io.load_matrix(args.matrix)
    grid = _grid_from(args)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    timing: dict = {"mode": args.mode}
    if args.mode == "full":
        t0 = time.perf_counter()
        fld = full_pseudospectrum(A, grid, workers=args.threads)
        timing["t_full"] = time.perf_counter() - t0
        fld.eps = args.eps
        sensitive = sensitive_zone(fld, args.eps)
    else:
        if args.model is None:
            raise SystemExit("--mode hybrid requires --model")
        bundle = load_model(args.model)
        if bundle.tau_star is None:
            raise SystemExit("model is not calibrated; run `pseudospec calibrate` first")
        result = hybrid_pseudospectrum(bundle, A, grid, args.eps,
                                       probe_seed=args.probe_seed)
        fld = result.field
        sensitive = sensitive_zone(fld, args.eps)
        timing.update({"t_nn": result.t_nn, "t_restricted": result.t_restricted,
                       "t_hybrid": result.t_nn + result.t_restricted,
                       "nn_evaluations": result.nn_evaluations,
                       "grid_fraction": float(result.region.mean())})
        io.write_mask_csv(f"{prefix}_region.csv", result.region, grid)
    io.write_field_csv(f"{prefix}_field.csv", fld)
    io.write_mask_csv(f"{prefix}_sensitive.csv", sensitive, grid)
    with open(f"{prefix}_timing.json", "w") as fh:
        json.dump(timing, fh, indent=1)
    io.write_config_sidecar(str(prefix), _config_dict(args))
    print(f"wrote {prefix}_field.csv ({args.mode} mode)")
    return 0


def cmd_benchmark(args) -> int:
    bundle = load_model(args.model)
    corpus = io.read_corpus(args.corpus)
    if args.count is not None:
        corpus = corpus[: args.count]
    grid = _grid_from(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run_baseline = args.baseline == "random"
    if args.single_thread:
        with threadpool_limits(limits=1):
            records, baseline_metrics = benchmark(
                bundle, corpus, grid, args.eps, seed=args.seed,
                baseline=run_baseline, workers=1)
    else:
        records, baseline_metrics = benchmark(
            bundle, corpus, grid, args.eps, seed=args.seed,
            baseline=run_baseline, workers=args.threads)
    rows = [r.as_dict() for r in records]
    if run_baseline:
        for row, m in zip(rows, baseline_metrics):
            row["baseline"] = m.as_dict()
    io.write_jsonl(out / "records.jsonl", rows)
    io.write_aggregate_csv(out / "aggregate.csv",
                           aggregate_records(records, baseline_metrics))
    io.write_config_sidecar(out / "records.jsonl", _config_dict(args))
    mean_speedup = sum(r.speedup_actual for r in records) / len(records)
    mean_frac = sum(r.metrics.grid_fraction for r in records) / len(records)
    print(f"benchmarked {len(records)} matrices: mean speedup "
          f"{mean_speedup:.2f}x, mean grid fraction {mean_frac:.3f}")
    return 0


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return n


def _bandwidth_list(value: str) -> list[int]:
    try:
        bands = [int(tok) for tok in value.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad bandwidth list '{value}'") from exc
    if not bands:
        raise argparse.ArgumentTypeError("bandwidth list is empty")
    return bands


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pseudospec",
        description="Pseudospectra of non-normal banded matrices with "
                    "neural-guided domain restriction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a random banded corpus")
    p.add_argument("--count", type=_positive_int, required=True)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--bandwidths", type=_bandwidth_list, default=[1, 2, 3, 4])
    p.add_argument("--cond-cap", type=float, default=1e8)
    p.add_argument("--max-rejects", type=int, default=GenSpec.max_rejects)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="build the labeled dataset and train")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=512)
    p.add_argument("--max-epochs", type=int, default=25)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--dataset-cache", default=None,
                   help="npz path; reused if it exists, written otherwise")
    p.add_argument("--history", default=None, help="loss history CSV path")
    p.add_argument("--threads", type=int, default=1)
    _add_grid_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", help="calibrate the decision threshold")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True, help="held-out validation corpus")
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--report", default=None, help="calibration CSV path")
    p.add_argument("--threads", type=int, default=1)
    _add_grid_args(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("compute", help="compute one pseudospectrum")
    p.add_argument("--matrix", required=True, help=".mtx or dense .csv file")
    p.add_argument("--mode", choices=("full", "hybrid"), default="hybrid")
    p.add_argument("--model", default=None)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--probe-seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--threads", type=int, default=1)
    _add_grid_args(p)
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("benchmark", help="full vs hybrid over a test corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--count", type=_positive_int, default=None)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--baseline", choices=("none", "random"), default="none")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--single-thread", action="store_true",
                   help="serialize everything and pin BLAS to one thread")
    p.add_argument("--threads", type=int, default=1)
    _add_grid_args(p)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
