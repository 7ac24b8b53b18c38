"""Matrix descriptors feeding the classifier.

Thirty global features per matrix (eigenvalue statistics, non-normality and
conditioning measures, norm ratios, diagonal/off-diagonal structure, sparsity,
spread, and three resolvent probes) plus three per-point eigenvalue-distance
features, concatenated into a 33-vector per (z, A) pair.

Feature indices below follow the fixed layout f1..f30; the scale-stability
epsilon is 1e-12 throughout and log-scale features saturate at 16 instead of
overflowing on singular or defective inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import require_real_matrix
from .generate import mix64

EPS = 1e-12
LOG_CAP = 16.0
PROBE_DELTAS = (0.5, 1.0, 2.0)


@dataclass
class GlobalFeatures:
    """The 30 per-matrix features plus cached spectra for per-point reuse."""

    values: np.ndarray       # (30,)
    eigvals: np.ndarray      # (n,) complex
    singvals: np.ndarray     # (n,) descending


def _capped_log10(x: float) -> float:
    if not np.isfinite(x) or x <= 0:
        return LOG_CAP
    return float(min(np.log10(x), LOG_CAP))


def _resolvent_ratio(A: np.ndarray, centroid: complex, delta: float, seed: int) -> float:
    """log10 of |x| / |b| where (z I - A) x = b, z = centroid + delta,
    b standard normal. Singular shifted systems saturate at LOG_CAP."""
    rng = np.random.default_rng(np.random.PCG64(seed))
    b = rng.standard_normal(A.shape[0])
    z = complex(centroid) + delta
    try:
        x = np.linalg.solve(z * np.eye(A.shape[0]) - A, b.astype(complex))
    except np.linalg.LinAlgError:
        return LOG_CAP
    ratio = np.linalg.norm(x) / np.linalg.norm(b)
    return _capped_log10(float(ratio))


def resolvent_probe(A, delta: float, probe_seed: int) -> float:
    """Resolvent growth estimate at the eigenvalue centroid shifted by delta."""
    A = require_real_matrix(A)
    centroid = complex(np.mean(np.linalg.eigvals(A)))
    return _resolvent_ratio(A, centroid, delta, probe_seed)


def global_features(A, probe_seed: int = 0) -> GlobalFeatures:
    """Compute f1..f30 for A.

    The three resolvent probes draw one fresh normal vector each, seeded by
    mix64(probe_seed, k) for k = 0, 1, 2, so the whole vector is a pure
    function of (A, probe_seed).
    """
    A = require_real_matrix(A)
    n = A.shape[0]
    fro = float(np.linalg.norm(A, "fro"))
    A_tilde = A / (fro + EPS)

    lam, V = np.linalg.eig(A)
    sv = np.linalg.svd(A, compute_uv=False)
    re, im, mod = lam.real, lam.imag, np.abs(lam)

    f = np.empty(30)
    f[0] = re.mean()
    f[1] = re.std()
    f[2] = re.min()
    f[3] = re.max()
    f[4] = im.mean()
    f[5] = im.std()
    f[6] = im.min()
    f[7] = im.max()
    f[8] = mod.max()
    f[9] = mod.min()
    f[10] = np.linalg.norm(A - A.T, "fro") / (fro + EPS)
    f[11] = np.linalg.norm(A - A.conj().T, "fro") / (fro + EPS)
    kappa = np.inf if sv[-1] == 0 else sv[0] / sv[-1]
    f[12] = _capped_log10(kappa + EPS)
    f[13] = sv[0] / (fro + EPS)
    f[14] = np.abs(A).sum(axis=0).max() / (fro + EPS)
    f[15] = np.abs(A).sum(axis=1).max() / (fro + EPS)
    d = np.abs(np.diag(A))
    f[16] = d.mean()
    f[17] = d.std()
    off = np.abs(A - np.diag(np.diag(A)))
    f[18] = off.mean()
    f[19] = off.std()
    f[20] = np.mean(np.abs(A) > 1e-10)
    sq = A_tilde ** 2
    f[21] = sq.mean()
    f[22] = sq.std()
    sv_V = np.linalg.svd(V, compute_uv=False)
    kappa_V = np.inf if sv_V[-1] == 0 else sv_V[0] / sv_V[-1]
    f[23] = _capped_log10(kappa_V + EPS)
    f[24] = np.log10(np.linalg.norm(A - A.conj().T, "fro") / (fro + EPS) + EPS)
    f[25] = (sv[0] - sv[-1]) / (sv[0] + EPS)
    f[26] = (mod.max() - mod.min()) / (mod.max() + EPS)
    centroid = complex(lam.mean())
    for k, delta in enumerate(PROBE_DELTAS):
        f[27 + k] = _resolvent_ratio(A, centroid, delta, mix64(probe_seed, k))

    return GlobalFeatures(values=f, eigvals=lam, singvals=sv)


def point_features(z: complex, eigvals: np.ndarray) -> tuple[float, float, float]:
    """(min, centroid, mean) distances from z to the eigenvalue set."""
    eigvals = np.asarray(eigvals)
    if eigvals.size == 0:
        raise ValueError("eigenvalue set is empty")
    dist = np.abs(z - eigvals)
    return float(dist.min()), float(np.abs(z - eigvals.mean())), float(dist.mean())


def point_features_many(zs: np.ndarray, eigvals: np.ndarray) -> np.ndarray:
    """Vectorized distances: (P, 3) array of [g1, g2, g3] per point."""
    zs = np.asarray(zs, dtype=complex).ravel()
    dist = np.abs(zs[:, None] - eigvals[None, :])
    out = np.empty((zs.size, 3))
    out[:, 0] = dist.min(axis=1)
    out[:, 1] = np.abs(zs - eigvals.mean())
    out[:, 2] = dist.mean(axis=1)
    return out


def assemble(gf: GlobalFeatures, z: complex) -> np.ndarray:
    """Full 33-vector [f1..f30, g1, g2, g3] for one point."""
    return np.concatenate([gf.values, point_features_many(np.array([z]), gf.eigvals)[0]])


def assemble_many(gf: GlobalFeatures, zs: np.ndarray) -> np.ndarray:
    """(P, 33) feature matrix sharing the cached global part across points."""
    zs = np.asarray(zs, dtype=complex).ravel()
    out = np.empty((zs.size, 33))
    out[:, :30] = gf.values
    out[:, 30:] = point_features_many(zs, gf.eigvals)
    return out


def fit_standardization(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean and std over a training feature matrix; std floored at
    1e-8 so constant columns stay harmless."""
    features = np.asarray(features, dtype=float)
    mean = features.mean(axis=0)
    std = np.maximum(features.std(axis=0), 1e-8)
    return mean, std


def standardize(features: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    return (np.asarray(features, dtype=float) - mean) / std
