"""Random banded non-normal test matrices.

Entries inside the band |i - j| <= beta are drawn i.i.d. uniformly from
{-1, 0, 1}; everything outside the band is exactly zero. Draws that come out
symmetric or with condition number at or above the cap are rejected and
redrawn. Corpus generation derives one independent child seed per matrix from
the master seed with the mix64 rule below, so corpora are reproducible
byte-for-byte and entries can be generated in any order or in parallel.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import GenerationError, ParameterError

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Tag for deriving the resolvent-probe seed of a matrix from its child seed.
PROBE_TAG = 0x70726F6265


def mix64(seed: int, index: int) -> int:
    """Deterministic 64-bit child seed: splitmix64 finalizer applied to
    seed + (index + 1) * golden-gamma. This is the documented splitting rule
    used everywhere a stream of independent seeds is needed."""
    z = (int(seed) + (int(index) + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def probe_seed_for(matrix_seed: int) -> int:
    """Resolvent-probe base seed for a matrix generated from `matrix_seed`."""
    return mix64(matrix_seed, PROBE_TAG)


@dataclass(frozen=True)
class GenSpec:
    """Parameters of the banded ensemble.

    The rejection budget is per matrix and must absorb the narrow-band
    bottleneck: at n = 64 a beta = 1 draw is nonsingular only about 3 times
    in 100,000 (any interior row is all-zero with probability 1/27, and
    decoupled tridiagonal blocks add more zero determinants), so accepted
    matrices routinely consume tens of thousands of attempts.
    """

    n: int = 64
    bandwidths: tuple[int, ...] = (1, 2, 3, 4)
    cond_cap: float = 1e8
    seed: int = 0
    max_rejects: int = 2_000_000

    def __post_init__(self):
        if self.n < 2:
            raise ParameterError(f"need n >= 2, got {self.n}")
        if not self.bandwidths:
            raise ParameterError("bandwidth candidate set is empty")
        if any(b < 1 or b > self.n - 1 for b in self.bandwidths):
            raise ParameterError(
                f"bandwidths must lie in 1..{self.n - 1}, got {self.bandwidths}"
            )
        if self.cond_cap <= 1:
            raise ParameterError(f"cond_cap must exceed 1, got {self.cond_cap}")


@dataclass
class CorpusMatrix:
    """One accepted matrix with its provenance."""

    index: int
    seed: int
    matrix: np.ndarray
    bandwidth: int
    kappa: float

    @property
    def probe_seed(self) -> int:
        return probe_seed_for(self.seed)


def _condition_number(A: np.ndarray) -> float:
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] == 0.0:
        return np.inf
    return float(sv[0] / sv[-1])


def _draw(spec: GenSpec):
    """Rejection-sample one matrix; returns (A, bandwidth, kappa).

    The bandwidth is drawn once per matrix and held fixed while entries are
    redrawn, so accepted bandwidths stay uniform even though narrow bands are
    rejected far more often (a beta = 1 draw at n = 64 is singular with high
    probability, since any interior row is all-zero with probability 1/27).
    """
    rng = np.random.default_rng(np.random.PCG64(spec.seed))
    bands = np.asarray(sorted(set(spec.bandwidths)))
    beta = int(rng.choice(bands))
    rows = np.arange(spec.n)
    band_mask = np.abs(rows[:, None] - rows[None, :]) > beta
    rejects = {"symmetric": 0, "condition": 0}
    for _ in range(spec.max_rejects + 1):
        A = rng.integers(-1, 2, size=(spec.n, spec.n)).astype(float)
        A[band_mask] = 0.0
        if np.array_equal(A, A.T):
            rejects["symmetric"] += 1
            continue
        # cheap singularity pre-filter before the SVD: a nonsingular integer
        # matrix has |det| >= 1, so anything below 0.5 is a zero determinant
        sign, logdet = np.linalg.slogdet(A)
        if sign == 0 or logdet < np.log(0.5):
            rejects["condition"] += 1
            continue
        kappa = _condition_number(A)
        if not kappa < spec.cond_cap:
            rejects["condition"] += 1
            continue
        return A, beta, kappa
    raise GenerationError(
        f"no acceptable matrix within {spec.max_rejects} rejections "
        f"(symmetric: {rejects['symmetric']}, condition: {rejects['condition']})"
    )


def random_banded(spec: GenSpec) -> tuple[np.ndarray, int]:
    """One random banded non-normal matrix and the bandwidth used."""
    A, beta, _ = _draw(spec)
    return A, beta


def _corpus_entry(args):
    spec, index = args
    child = mix64(spec.seed, index)
    A, beta, kappa = _draw(replace(spec, seed=child))
    return CorpusMatrix(index=index, seed=child, matrix=A, bandwidth=beta, kappa=kappa)


def generate_corpus(spec: GenSpec, count: int, workers: int = 1) -> list[CorpusMatrix]:
    """`count` accepted matrices with per-matrix child seeds mix64(seed, index).

    Output is ordered by index regardless of worker scheduling.
    """
    if count < 1:
        raise ParameterError(f"count must be >= 1, got {count}")
    tasks = [(spec, i) for i in range(count)]
    if workers <= 1:
        return [_corpus_entry(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_corpus_entry, tasks))
