"""File formats: matrices, corpora, field and mask exports, reports.

Matrices interchange as Matrix Market coordinate files (real, general); a
header-less dense CSV (n rows of n comma-separated values) is also accepted.
Field exports are plain CSV with one row per grid point in row-major order.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .core import ComplexGrid, ParameterError, SigmaField, require_real_matrix
from .generate import CorpusMatrix

MANIFEST_NAME = "manifest.csv"


def write_matrix_market(path, A) -> None:
    A = require_real_matrix(A)
    scipy.io.mmwrite(str(path), scipy.sparse.coo_matrix(A))


def read_matrix_market(path) -> np.ndarray:
    M = scipy.io.mmread(str(path))
    if scipy.sparse.issparse(M):
        M = M.toarray()
    return require_real_matrix(np.asarray(M))


def write_dense_csv(path, A) -> None:
    np.savetxt(path, require_real_matrix(A), fmt="%.17g", delimiter=",")


def read_dense_csv(path) -> np.ndarray:
    return require_real_matrix(np.loadtxt(path, delimiter=",", ndmin=2))


def load_matrix(path) -> np.ndarray:
    """Dispatch on extension: .mtx/.mm Matrix Market, .csv dense."""
    suffix = Path(path).suffix.lower()
    if suffix in (".mtx", ".mm"):
        return read_matrix_market(path)
    if suffix == ".csv":
        return read_dense_csv(path)
    raise ParameterError(f"unsupported matrix format '{suffix}' for {path}")


def matrix_filename(index: int) -> str:
    return f"matrix_{index:04d}.mtx"


def write_corpus(directory, corpus: list[CorpusMatrix]) -> None:
    """One Matrix Market file per entry plus a manifest
    (index, seed, bandwidth, kappa)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for entry in corpus:
        write_matrix_market(directory / matrix_filename(entry.index), entry.matrix)
    with open(directory / MANIFEST_NAME, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "seed", "bandwidth", "kappa"])
        for entry in corpus:
            writer.writerow([entry.index, entry.seed, entry.bandwidth,
                             f"{entry.kappa:.17g}"])


def read_corpus(directory) -> list[CorpusMatrix]:
    directory = Path(directory)
    manifest = directory / MANIFEST_NAME
    if not manifest.exists():
        raise ParameterError(f"no {MANIFEST_NAME} in {directory}")
    corpus = []
    with open(manifest, newline="") as fh:
        for row in csv.DictReader(fh):
            index = int(row["index"])
            corpus.append(CorpusMatrix(
                index=index,
                seed=int(row["seed"]),
                matrix=read_matrix_market(directory / matrix_filename(index)),
                bandwidth=int(row["bandwidth"]),
                kappa=float(row["kappa"]),
            ))
    return corpus


def write_field_csv(path, field: SigmaField) -> None:
    """Rows `x,y,log10_smin` in row-major grid order; unevaluated points
    emit the literal `nan`."""
    xs, ys = field.grid.xs(), field.grid.ys()
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log10(field.values)
    with open(path, "w") as fh:
        fh.write("x,y,log10_smin\n")
        for i in range(field.grid.ny):
            for j in range(field.grid.nx):
                fh.write(f"{xs[j]:.17g},{ys[i]:.17g},{logs[i, j]:.17g}\n")


def write_mask_csv(path, mask: np.ndarray, grid: ComplexGrid) -> None:
    """Rows `x,y,flag` with flag in {0,1}, row-major grid order."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != grid.shape:
        raise ParameterError(f"mask shape {mask.shape} does not match grid {grid.shape}")
    xs, ys = grid.xs(), grid.ys()
    with open(path, "w") as fh:
        fh.write("x,y,flag\n")
        for i in range(grid.ny):
            for j in range(grid.nx):
                fh.write(f"{xs[j]:.17g},{ys[i]:.17g},{int(mask[i, j])}\n")


def write_jsonl(path, rows: list[dict]) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def read_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_aggregate_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["section", "metric", "mean",
                                                "std", "median", "min", "max"])
        writer.writeheader()
        writer.writerows(rows)


def write_calibration_csv(path, report) -> None:
    """One row per candidate threshold plus the selection outcome."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "median_recall", "p10_recall", "selected"])
        for tau, med, p10 in zip(report.taus, report.median_recall, report.p10_recall):
            selected = int(report.tau_star is not None and tau == report.tau_star)
            writer.writerow([f"{tau:.2f}", f"{med:.17g}", f"{p10:.17g}", selected])


def write_config_sidecar(output_path, config: dict) -> None:
    """Drop `<output>.config.json` with the fully-resolved run parameters."""
    side = Path(str(output_path) + ".config.json")
    with open(side, "w") as fh:
        json.dump(config, fh, indent=1, sort_keys=True)
        fh.write("\n")
