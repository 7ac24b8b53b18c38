"""Exact numerical kernels: grids, eigenvalues, minimum singular values,
sensitivity masks, and binary morphology.

The sigma field of a matrix A over a grid holds sigma_min(z*I - A) at every
evaluated point; points that were never evaluated carry NaN. A point is
"sensitive" at level eps when its evaluated sigma_min is <= eps.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_dilation


class ParameterError(ValueError):
    """Invalid argument to a public operation."""


class NumericalError(ArithmeticError):
    """A dense decomposition failed to converge."""


class GenerationError(RuntimeError):
    """Matrix generation exhausted its rejection budget."""


class CalibrationError(RuntimeError):
    """Threshold calibration found no admissible threshold."""


class ModelFormatError(ValueError):
    """A model file is missing fields or carries malformed arrays."""


@dataclass(frozen=True)
class ComplexGrid:
    """Uniform rectangular grid over a box in the complex plane.

    Point (i, j) is x[j] + 1j * y[i] with inclusive endpoints on both axes,
    so rows index the imaginary axis and columns the real axis.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ParameterError(
                f"grid bounds must be ordered, got x=[{self.x_min}, {self.x_max}] "
                f"y=[{self.y_min}, {self.y_max}]"
            )
        if self.nx < 2 or self.ny < 2:
            raise ParameterError(f"need nx, ny >= 2, got nx={self.nx} ny={self.ny}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    def ys(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    def points(self) -> np.ndarray:
        """All grid points as an (ny, nx) complex array."""
        return self.xs()[None, :] + 1j * self.ys()[:, None]


def make_grid(x_min, x_max, y_min, y_max, nx, ny) -> ComplexGrid:
    return ComplexGrid(float(x_min), float(x_max), float(y_min), float(y_max),
                       int(nx), int(ny))


@dataclass
class SigmaField:
    """Per-grid-point sigma_min values; NaN marks unevaluated points."""

    grid: ComplexGrid
    values: np.ndarray
    eps: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ParameterError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def evaluated(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def mask(self, eps: float) -> np.ndarray:
        """Evaluated points with sigma_min <= eps (NaN entries are False)."""
        if eps <= 0:
            raise ParameterError(f"eps must be positive, got {eps}")
        with np.errstate(invalid="ignore"):
            return np.asarray(self.values <= eps)


def require_real_matrix(A) -> np.ndarray:
    """Validate and return A as a finite real n x n float array, n >= 2."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 2:
        raise ParameterError(f"expected a square matrix with n >= 2, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ParameterError("matrix entries must be finite")
    return A


def eigenvalues(A, label: str = "matrix") -> np.ndarray:
    """All n eigenvalues of A, multiplicity included."""
    A = require_real_matrix(A)
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue solver failed to converge on {label}") from exc


def smin_at(A, z: complex, label: str = "matrix") -> float:
    """Smallest singular value of z*I - A via a dense SVD of the shifted matrix."""
    A = require_real_matrix(A)
    shifted = z * np.eye(A.shape[0]) - A
    try:
        return float(np.linalg.svd(shifted, compute_uv=False)[-1])
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed to converge on {label} at z={z}") from exc


def smin_many(A, zs: np.ndarray, label: str = "matrix", chunk: int = 512) -> np.ndarray:
    """sigma_min(z*I - A) for a 1-D array of shift points.

    Each point is an independent dense SVD of the shifted matrix; chunking
    only batches the LAPACK calls and does not change any value bitwise.
    """
    A = require_real_matrix(A)
    zs = np.asarray(zs, dtype=complex).ravel()
    n = A.shape[0]
    eye = np.eye(n)
    out = np.empty(zs.size)
    for start in range(0, zs.size, chunk):
        zc = zs[start:start + chunk]
        shifted = zc[:, None, None] * eye - A
        try:
            sv = np.linalg.svd(shifted, compute_uv=False)
        except np.linalg.LinAlgError:
            # Redo one by one so the failing grid index can be reported.
            for k, z in enumerate(zc):
                try:
                    out[start + k] = np.linalg.svd(z * eye - A, compute_uv=False)[-1]
                except np.linalg.LinAlgError as exc:
                    raise NumericalError(
                        f"SVD failed to converge on {label} at point index {start + k}, z={z}"
                    ) from exc
            continue
        out[start:start + chunk] = sv[:, -1]
    return out


def _field_rows(args):
    A, xs, ys, rows, label = args
    zs = (xs[None, :] + 1j * ys[rows, None]).ravel()
    return rows[0], smin_many(A, zs, label=label).reshape(len(rows), -1)


def full_pseudospectrum(A, grid: ComplexGrid, label: str = "matrix",
                        workers: int = 1) -> SigmaField:
    """Evaluate sigma_min(z*I - A) at every grid point.

    Deterministic: values are identical for any worker count because each
    point is an isolated dense SVD and results are placed by grid index.
    """
    A = require_real_matrix(A)
    xs, ys = grid.xs(), grid.ys()
    if workers <= 1:
        values = smin_many(A, grid.points().ravel(), label=label).reshape(grid.shape)
        return SigmaField(grid, values)
    blocks = np.array_split(np.arange(grid.ny), min(workers * 4, grid.ny))
    tasks = [(A, xs, ys, rows, label) for rows in blocks if rows.size]
    values = np.empty(grid.shape)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for row0, block in pool.map(_field_rows, tasks):
            values[row0:row0 + block.shape[0]] = block
    return SigmaField(grid, values)


def restricted_field(A, grid: ComplexGrid, region: np.ndarray,
                     label: str = "matrix") -> SigmaField:
    """Evaluate sigma_min only on the True points of `region`; rest stays NaN."""
    A = require_real_matrix(A)
    region = _check_mask(region, grid.shape)
    values = np.full(grid.shape, np.nan)
    idx = np.flatnonzero(region.ravel())
    if idx.size:
        zs = grid.points().ravel()[idx]
        values.ravel()[idx] = smin_many(A, zs, label=label)
    return SigmaField(grid, values)


def sensitive_zone(field: SigmaField, eps: float) -> np.ndarray:
    """Boolean mask of evaluated points with sigma_min <= eps."""
    return field.mask(eps)


def _check_mask(mask, shape) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.dtype != bool or mask.shape != tuple(shape):
        raise ParameterError(f"expected boolean mask of shape {tuple(shape)}, "
                             f"got {mask.dtype} {mask.shape}")
    return mask


def dilate(mask: np.ndarray, k: int) -> np.ndarray:
    """Morphological dilation by a k x k box, clipped at the grid borders."""
    mask = np.asarray(mask, dtype=bool)
    if k < 1 or k % 2 == 0:
        raise ParameterError(f"structuring element size must be odd and positive, got {k}")
    if k == 1:
        return mask.copy()
    return binary_dilation(mask, structure=np.ones((k, k), dtype=bool))
