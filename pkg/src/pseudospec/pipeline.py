"""End-to-end machinery around the classifier.

Builds balanced labeled datasets from exact sigma fields, evaluates the
trained network densely or coarse-to-fine, calibrates the decision threshold
for recall, runs the hybrid restricted solver, and benchmarks it against
exhaustive evaluation and a random-sampling baseline.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (ComplexGrid, ParameterError, SigmaField, dilate,
                   full_pseudospectrum, restricted_field, sensitive_zone)
from .features import assemble_many, global_features, standardize
from .generate import CorpusMatrix, mix64
from .network import ModelBundle, forward, fourier_encode

TRUTH_DILATION = 3
PRED_DILATION = 5
CAL_TAUS = np.round(np.arange(0.05, 0.95, 0.01), 2)

# Floor used when comparing log10(sigma) values so exact zeros stay finite.
_LOG_FLOOR = 1e-300


@dataclass
class Dataset:
    """Columnar labeled samples: one row per (matrix, grid point) pair."""

    xy: np.ndarray          # (N, 2) real/imag coordinates
    features: np.ndarray    # (N, 33) raw, not standardized
    labels: np.ndarray      # (N,) 0/1
    matrix_ids: np.ndarray  # (N,) corpus index per sample

    def __len__(self):
        return len(self.labels)

    @classmethod
    def concatenate(cls, parts: list["Dataset"]) -> "Dataset":
        return cls(
            xy=np.concatenate([p.xy for p in parts]),
            features=np.concatenate([p.features for p in parts]),
            labels=np.concatenate([p.labels for p in parts]),
            matrix_ids=np.concatenate([p.matrix_ids for p in parts]),
        )


@dataclass
class EvalMetrics:
    accuracy: float
    precision: float
    recall: float
    coverage: float
    grid_fraction: float
    tp: int
    fp: int
    fn: int
    tn: int

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("accuracy", "precision", "recall", "coverage", "grid_fraction",
                 "tp", "fp", "fn", "tn")}


@dataclass
class CalibrationReport:
    taus: np.ndarray
    median_recall: np.ndarray
    p10_recall: np.ndarray
    tau_star: float | None
    passed: bool
    recalls: np.ndarray = field(repr=False, default=None)  # (n_matrices, n_taus)


@dataclass
class HybridResult:
    field: SigmaField
    region: np.ndarray
    prob_field: np.ndarray
    t_nn: float
    t_restricted: float
    nn_evaluations: int


@dataclass
class BenchmarkRecord:
    matrix_id: int
    bandwidth: int
    metrics: EvalMetrics
    t_full: float
    t_nn: float
    t_restricted: float
    mae_log10_smin: float

    @property
    def t_hybrid(self) -> float:
        return self.t_nn + self.t_restricted

    @property
    def speedup_actual(self) -> float:
        return self.t_full / self.t_hybrid

    @property
    def speedup_best(self) -> float:
        return self.t_full / self.t_restricted

    def as_dict(self) -> dict:
        d = {"matrix_id": self.matrix_id, "bandwidth": self.bandwidth}
        d.update(self.metrics.as_dict())
        d.update({
            "t_full": self.t_full,
            "t_nn": self.t_nn,
            "t_restricted": self.t_restricted,
            "t_hybrid": self.t_hybrid,
            "speedup_actual": self.speedup_actual,
            "speedup_best": self.speedup_best,
            "mae_log10_smin": self.mae_log10_smin,
        })
        return d


def _sample_matrix(args):
    entry, grid, eps, seed, workers = args
    fld = full_pseudospectrum(entry.matrix, grid, label=f"matrix {entry.index}",
                              workers=workers)
    truth = sensitive_zone(fld, eps)
    flat_truth = truth.ravel()
    pos = np.flatnonzero(flat_truth)
    neg = np.flatnonzero(~flat_truth)
    n_neg = min(max(10 * pos.size, 200), neg.size)
    rng = np.random.default_rng(np.random.PCG64(mix64(seed, entry.index)))
    neg_sel = neg[rng.choice(neg.size, size=n_neg, replace=False)]
    sel = np.concatenate([pos, neg_sel])

    zs = grid.points().ravel()[sel]
    gf = global_features(entry.matrix, probe_seed=entry.probe_seed)
    return Dataset(
        xy=np.column_stack([zs.real, zs.imag]),
        features=assemble_many(gf, zs),
        labels=flat_truth[sel].astype(float),
        matrix_ids=np.full(sel.size, entry.index),
    )


def build_dataset(corpus: list[CorpusMatrix], grid: ComplexGrid, eps: float,
                  seed: int, workers: int = 1) -> Dataset:
    """Balanced samples per matrix: every sensitive point, plus
    max(10 * n_pos, 200) non-sensitive points drawn without replacement
    (capped at the available count). Deterministic given the seed."""
    if not corpus:
        raise ParameterError("corpus is empty")
    if eps <= 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    tasks = [(entry, grid, eps, seed, 1) for entry in corpus]
    if workers <= 1:
        parts = [_sample_matrix(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sample_matrix, tasks))
    return Dataset.concatenate(parts)


def _predict_points(bundle: ModelBundle, gf, zs: np.ndarray) -> np.ndarray:
    feats = standardize(assemble_many(gf, zs), bundle.feature_mean, bundle.feature_std)
    phi = fourier_encode(np.column_stack([zs.real, zs.imag]))
    return forward(bundle.params, phi, feats)


def predict_map(bundle: ModelBundle, A, grid: ComplexGrid,
                probe_seed: int = 0) -> np.ndarray:
    """Dense probability field: the network at every grid point."""
    gf = global_features(A, probe_seed=probe_seed)
    return _predict_points(bundle, gf, grid.points().ravel()).reshape(grid.shape)


def hierarchical_predict(bundle: ModelBundle, A, grid: ComplexGrid,
                         stride: int = 4, probe_seed: int = 0):
    """Coarse-to-fine probability field.

    The network runs on every stride-th point; cells whose coarse probability
    reaches the 80th percentile (linear-interpolation quantile, ties refine)
    are filled in by evaluating their remaining fine points. Unflagged cells
    are zero. Returns (field, number of network evaluations); coarse anchor
    values are reused, never recomputed, so flagged-cell probabilities match
    the dense map bitwise.
    """
    if stride < 2:
        raise ParameterError(f"stride must be >= 2, got {stride}")
    gf = global_features(A, probe_seed=probe_seed)
    points = grid.points()
    ay = np.arange(0, grid.ny, stride)
    ax = np.arange(0, grid.nx, stride)
    coarse_pts = points[np.ix_(ay, ax)]
    p_coarse = _predict_points(bundle, gf, coarse_pts.ravel()).reshape(coarse_pts.shape)
    tau_coarse = np.percentile(p_coarse, 80)
    flagged = p_coarse >= tau_coarse

    prob = np.zeros(grid.shape)
    fine_rows, fine_cols = [], []
    for iy, ix in zip(*np.nonzero(flagged)):
        r0, c0 = ay[iy], ax[ix]
        rr, cc = np.meshgrid(np.arange(r0, min(r0 + stride, grid.ny)),
                             np.arange(c0, min(c0 + stride, grid.nx)),
                             indexing="ij")
        rr, cc = rr.ravel(), cc.ravel()
        keep = ~((rr == r0) & (cc == c0))
        fine_rows.append(rr[keep])
        fine_cols.append(cc[keep])
        prob[r0, c0] = p_coarse[iy, ix]

    n_evals = p_coarse.size
    if fine_rows:
        rows = np.concatenate(fine_rows)
        cols = np.concatenate(fine_cols)
        if rows.size:
            prob[rows, cols] = _predict_points(bundle, gf, points[rows, cols])
            n_evals += rows.size
    return prob, n_evals


def predicted_region(prob_field: np.ndarray, tau: float) -> np.ndarray:
    """Threshold at >= tau, then widen by the 5x5 safety dilation."""
    if not 0 < tau < 1:
        raise ParameterError(f"tau must lie in (0, 1), got {tau}")
    return dilate(np.asarray(prob_field) >= tau, PRED_DILATION)


def _recall(pred: np.ndarray, truth_dil: np.ndarray) -> float:
    denom = truth_dil.sum()
    if denom == 0:
        return 1.0
    return float((pred & truth_dil).sum() / denom)


def calibrate_threshold(bundle: ModelBundle, val_corpus: list[CorpusMatrix],
                        grid: ComplexGrid, eps: float,
                        workers: int = 1) -> CalibrationReport:
    """Sweep candidate thresholds and pick the smallest with median
    validation recall >= 0.90 and 10th-percentile recall >= 0.75.

    Recall is measured per matrix between the 5x5-dilated prediction and the
    3x3-dilated exact sensitive zone.
    """
    if not val_corpus:
        raise ParameterError("validation corpus is empty")
    recalls = np.empty((len(val_corpus), CAL_TAUS.size))
    for row, entry in enumerate(val_corpus):
        fld = full_pseudospectrum(entry.matrix, grid,
                                  label=f"matrix {entry.index}", workers=workers)
        truth_dil = dilate(sensitive_zone(fld, eps), TRUTH_DILATION)
        pmap = predict_map(bundle, entry.matrix, grid, probe_seed=entry.probe_seed)
        for col, tau in enumerate(CAL_TAUS):
            recalls[row, col] = _recall(predicted_region(pmap, tau), truth_dil)

    med = np.median(recalls, axis=0)
    p10 = np.percentile(recalls, 10, axis=0)
    passing = (med >= 0.90) & (p10 >= 0.75)
    if passing.any():
        best = int(np.argmax(passing))
        return CalibrationReport(CAL_TAUS.copy(), med, p10,
                                 tau_star=float(CAL_TAUS[best]), passed=True,
                                 recalls=recalls)
    return CalibrationReport(CAL_TAUS.copy(), med, p10, tau_star=None,
                             passed=False, recalls=recalls)


def hybrid_pseudospectrum(bundle: ModelBundle, A, grid: ComplexGrid, eps: float,
                          probe_seed: int = 0, stride: int = 4,
                          label: str = "matrix") -> HybridResult:
    """Predict the sensitive region, then compute exact sigma_min only there.

    t_nn covers feature extraction, network evaluation, thresholding and
    dilation; t_restricted covers only the exact SVD sweep over the region.
    """
    if bundle.tau_star is None:
        raise ParameterError("model bundle carries no calibrated threshold")
    if eps <= 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    t0 = time.perf_counter()
    prob, n_evals = hierarchical_predict(bundle, A, grid, stride=stride,
                                         probe_seed=probe_seed)
    region = predicted_region(prob, bundle.tau_star)
    t_nn = time.perf_counter() - t0

    t0 = time.perf_counter()
    fld = restricted_field(A, grid, region, label=label)
    t_restricted = time.perf_counter() - t0
    fld.eps = eps
    return HybridResult(field=fld, region=region, prob_field=prob,
                        t_nn=t_nn, t_restricted=t_restricted,
                        nn_evaluations=n_evals)


def evaluate(pred_mask: np.ndarray, truth_field: SigmaField, eps: float,
             grid_fraction: float) -> EvalMetrics:
    """Classification metrics of a predicted region against the exact field.

    Accuracy, precision and coverage are measured against the raw sensitive
    zone; recall against the 3x3-dilated zone. An empty prediction scores
    precision 1.0 only when the truth is empty too.
    """
    truth = sensitive_zone(truth_field, eps)
    pred = np.asarray(pred_mask, dtype=bool)
    if pred.shape != truth.shape:
        raise ParameterError("prediction and truth masks are not aligned")
    truth_dil = dilate(truth, TRUTH_DILATION)
    n = truth.size
    tp = int((pred & truth).sum())
    fp = int((pred & ~truth).sum())
    fn = int((~pred & truth).sum())
    tn = n - tp - fp - fn
    n_pred = tp + fp
    if n_pred == 0:
        precision = 1.0 if truth.sum() == 0 else 0.0
    else:
        precision = tp / n_pred
    coverage = 1.0 if truth.sum() == 0 else tp / truth.sum()
    return EvalMetrics(
        accuracy=(tp + tn) / n,
        precision=float(precision),
        recall=_recall(pred, truth_dil),
        coverage=float(coverage),
        grid_fraction=float(grid_fraction),
        tp=tp, fp=fp, fn=fn, tn=tn,
    )


def random_baseline(truth_field: SigmaField, eps: float, fraction: float,
                    seed: int) -> EvalMetrics:
    """Evaluate a uniformly random subset of the grid instead of a predicted
    region. Sensitive points discovered by the sampled evaluations get the
    same 5x5 safety dilation the hybrid predictions receive."""
    if not 0 < fraction <= 1:
        raise ParameterError(f"fraction must lie in (0, 1], got {fraction}")
    n = truth_field.grid.size
    k = int(fraction * n)
    rng = np.random.default_rng(np.random.PCG64(seed))
    selected = np.zeros(n, dtype=bool)
    selected[rng.choice(n, size=k, replace=False)] = True
    selected = selected.reshape(truth_field.grid.shape)
    found = selected & sensitive_zone(truth_field, eps)
    pred = dilate(found, PRED_DILATION)
    return evaluate(pred, truth_field, eps, grid_fraction=k / n)


def benchmark(bundle: ModelBundle, test_corpus: list[CorpusMatrix],
              grid: ComplexGrid, eps: float, seed: int = 0,
              baseline: bool = False, workers: int = 1):
    """Full-versus-hybrid comparison over a held-out corpus.

    Returns (records, baseline_metrics) where baseline_metrics is a parallel
    list (empty unless `baseline`) of random-sampling results at each
    matrix's realized grid fraction. Wall-clock timings use a monotonic
    clock; pass workers=1 (and pin BLAS threads externally) for
    single-thread timing parity.
    """
    if bundle.tau_star is None:
        raise ParameterError("model bundle carries no calibrated threshold")
    records: list[BenchmarkRecord] = []
    baseline_metrics: list[EvalMetrics] = []
    for entry in test_corpus:
        t0 = time.perf_counter()
        full = full_pseudospectrum(entry.matrix, grid,
                                   label=f"matrix {entry.index}", workers=workers)
        t_full = time.perf_counter() - t0

        result = hybrid_pseudospectrum(bundle, entry.matrix, grid, eps,
                                       probe_seed=entry.probe_seed,
                                       label=f"matrix {entry.index}")
        frac = result.region.mean()
        metrics = evaluate(result.region, full, eps, grid_fraction=frac)

        idx = result.region
        if idx.any():
            a = np.log10(np.maximum(result.field.values[idx], _LOG_FLOOR))
            b = np.log10(np.maximum(full.values[idx], _LOG_FLOOR))
            mae = float(np.mean(np.abs(a - b)))
        else:
            mae = 0.0
        records.append(BenchmarkRecord(
            matrix_id=entry.index, bandwidth=entry.bandwidth, metrics=metrics,
            t_full=t_full, t_nn=result.t_nn, t_restricted=result.t_restricted,
            mae_log10_smin=mae,
        ))
        if baseline:
            baseline_metrics.append(
                random_baseline(full, eps, fraction=max(frac, 1.0 / grid.size),
                                seed=mix64(seed, entry.index))
            )
    return records, baseline_metrics


def _stats(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {
        "mean": float(v.mean()),
        "std": float(v.std()),
        "median": float(np.median(v)),
        "min": float(v.min()),
        "max": float(v.max()),
    }


def aggregate_records(records: list[BenchmarkRecord],
                      baseline_metrics: list[EvalMetrics] | None = None) -> list[dict]:
    """Summary rows (metric, mean, std, median, min, max), overall, per
    bandwidth stratum, and for the baseline when present."""
    rows = []

    def add(section, name, values):
        rows.append({"section": section, "metric": name, **_stats(values)})

    metric_names = ("accuracy", "precision", "recall", "coverage", "grid_fraction")
    for name in metric_names:
        add("overall", name, [getattr(r.metrics, name) for r in records])
    add("overall", "speedup_actual", [r.speedup_actual for r in records])
    add("overall", "speedup_best", [r.speedup_best for r in records])
    add("overall", "t_full", [r.t_full for r in records])
    add("overall", "t_nn", [r.t_nn for r in records])
    add("overall", "t_restricted", [r.t_restricted for r in records])
    add("overall", "t_hybrid", [r.t_hybrid for r in records])
    add("overall", "mae_log10_smin", [r.mae_log10_smin for r in records])

    for beta in sorted({r.bandwidth for r in records}):
        sub = [r for r in records if r.bandwidth == beta]
        section = f"bandwidth={beta}"
        rows.append({"section": section, "metric": "count",
                     "mean": len(sub), "std": 0.0, "median": len(sub),
                     "min": len(sub), "max": len(sub)})
        add(section, "speedup_actual", [r.speedup_actual for r in sub])
        add(section, "recall", [r.metrics.recall for r in sub])
        add(section, "coverage", [r.metrics.coverage for r in sub])

    if baseline_metrics:
        for name in metric_names:
            add("baseline", name, [getattr(m, name) for m in baseline_metrics])
    return rows
