"""Pseudospectra of non-normal banded matrices, accelerated by a learned
restriction of the complex plane.

The exact kernels (`core`), the random banded ensemble (`generate`), the
matrix/point descriptors (`features`), the dual-path classifier (`network`),
and the end-to-end machinery (`pipeline`) are importable individually; the
most common entry points are re-exported here.
"""

from .core import (CalibrationError, ComplexGrid, GenerationError,
                   ModelFormatError, NumericalError, ParameterError,
                   SigmaField, dilate, eigenvalues, full_pseudospectrum,
                   make_grid, restricted_field, sensitive_zone, smin_at,
                   smin_many)
from .features import (GlobalFeatures, assemble, assemble_many,
                       fit_standardization, global_features, point_features,
                       point_features_many, resolvent_probe, standardize)
from .generate import (CorpusMatrix, GenSpec, generate_corpus, mix64,
                       probe_seed_for, random_banded)
from .network import (ModelBundle, ModelParams, TrainConfig, adam_step,
                      backward, bce_loss, forward, fourier_encode, init_params,
                      load_model, param_count, save_model, train)
from .pipeline import (BenchmarkRecord, CalibrationReport, Dataset,
                       EvalMetrics, HybridResult, aggregate_records, benchmark,
                       build_dataset, calibrate_threshold, evaluate,
                       hierarchical_predict, hybrid_pseudospectrum,
                       predict_map, predicted_region, random_baseline)

__version__ = "0.1.0"
