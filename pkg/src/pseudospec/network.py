"""Dual-path sensitivity classifier with from-scratch training.

Two input pathways: grid coordinates pass through a Fourier encoding and two
64-unit SiLU layers; the 33 standardized matrix features pass through 128- and
64-unit SiLU layers. The concatenated 128-vector goes through a two-layer
residual block, a 64-unit projection, and a sigmoid head producing the
probability that the point is spectrally sensitive.

Everything here is plain float64 numpy: exact analytic gradients of the mean
binary cross-entropy, bias-corrected Adam, epoch-shuffled mini-batches, and
early stopping on a held-out validation split. Determinism contract: a fixed
seed reproduces initialization, batch order, the validation split, and hence
the final parameters bit for bit.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.special import expit

from .core import ModelFormatError, ParameterError
from .features import fit_standardization, standardize
from .generate import mix64

logger = logging.getLogger(__name__)

COORD_DIM = 26
FEATURE_DIM = 33
_FREQS = tuple(float(2 ** k) for k in range(1, 7))

PARAM_SHAPES = {
    "w_c1": (64, COORD_DIM),
    "b_c1": (64,),
    "w_c2": (64, 64),
    "b_c2": (64,),
    "w_m1": (128, FEATURE_DIM),
    "b_m1": (128,),
    "w_m2": (64, 128),
    "b_m2": (64,),
    "w_t1": (128, 128),
    "b_t1": (128,),
    "w_t2": (128, 128),
    "b_t2": (128,),
    "w_proj": (64, 128),
    "b_proj": (64,),
    "w_head": (64,),
    "b_head": (),
}

# Seed tags for the independent RNG streams of a training run.
_TAG_INIT = 1
_TAG_SPLIT = 2
_TAG_EPOCH = 3

_CLIP = 1e-7


def fourier_encode(coords) -> np.ndarray:
    """[c, sin(2c), cos(2c), ..., sin(64c), cos(64c)] element-wise over the
    six dyadic frequency bands; a 2-vector becomes a 26-vector."""
    c = np.asarray(coords, dtype=float)
    single = c.ndim == 1
    c = np.atleast_2d(c)
    if c.shape[1] != 2:
        raise ParameterError(f"expected (x, y) coordinates, got shape {c.shape}")
    parts = [c]
    for f in _FREQS:
        parts.append(np.sin(f * c))
        parts.append(np.cos(f * c))
    out = np.concatenate(parts, axis=1)
    return out[0] if single else out


def silu(x: np.ndarray) -> np.ndarray:
    return x * expit(x)


def silu_grad(x: np.ndarray) -> np.ndarray:
    s = expit(x)
    return s * (1.0 + x * (1.0 - s))


def _dense(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    # BLAS gemm rounds each row differently depending on batch size, which
    # would break the bitwise batch-invariance of forward outputs; plain
    # einsum keeps a fixed per-row reduction order (optimize would re-enable
    # BLAS, so it must stay off).
    return np.einsum("bi,oi->bo", x, w) + b


def params_to_dict(params: "ModelParams") -> dict[str, np.ndarray]:
    return {f.name: getattr(params, f.name) for f in fields(params)}


@dataclass
class ModelParams:
    """All trainable arrays, shapes fixed by PARAM_SHAPES."""

    w_c1: np.ndarray
    b_c1: np.ndarray
    w_c2: np.ndarray
    b_c2: np.ndarray
    w_m1: np.ndarray
    b_m1: np.ndarray
    w_m2: np.ndarray
    b_m2: np.ndarray
    w_t1: np.ndarray
    b_t1: np.ndarray
    w_t2: np.ndarray
    b_t2: np.ndarray
    w_proj: np.ndarray
    b_proj: np.ndarray
    w_head: np.ndarray
    b_head: np.ndarray

    def __post_init__(self):
        for name, shape in PARAM_SHAPES.items():
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ParameterError(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ParameterError(f"{name} contains non-finite values")
            setattr(self, name, arr)

    def copy(self) -> "ModelParams":
        return ModelParams(**{k: v.copy() for k, v in params_to_dict(self).items()})


def param_count() -> int:
    return int(sum(np.prod(s, dtype=int) if s else 1 for s in PARAM_SHAPES.values()))


def init_params(seed: int) -> ModelParams:
    """Fan-in-scaled uniform weights, zero biases, seeded per tensor."""
    values = {}
    for k, (name, shape) in enumerate(PARAM_SHAPES.items()):
        if name.startswith("b"):
            values[name] = np.zeros(shape)
            continue
        rng = np.random.default_rng(np.random.PCG64(mix64(mix64(seed, _TAG_INIT), k)))
        fan_in = shape[-1] if len(shape) > 1 else shape[0]
        bound = 1.0 / np.sqrt(fan_in)
        values[name] = rng.uniform(-bound, bound, size=shape)
    params = ModelParams(**values)
    logger.info("model created with %d trainable parameters", param_count())
    return params


def _forward_cache(params: ModelParams, phi: np.ndarray, f: np.ndarray) -> dict:
    if phi.ndim != 2 or phi.shape[1] != COORD_DIM:
        raise ParameterError(f"encoded coordinates must be (B, {COORD_DIM}), got {phi.shape}")
    if f.ndim != 2 or f.shape[1] != FEATURE_DIM:
        raise ParameterError(f"feature batch must be (B, {FEATURE_DIM}), got {f.shape}")
    if phi.shape[0] != f.shape[0]:
        raise ParameterError("coordinate and feature batches differ in length")
    c = {}
    c["phi"], c["f"] = phi, f
    c["a_c1"] = _dense(phi, params.w_c1, params.b_c1)
    c["h_c1"] = silu(c["a_c1"])
    c["a_c2"] = _dense(c["h_c1"], params.w_c2, params.b_c2)
    c["h_c2"] = silu(c["a_c2"])
    c["a_m1"] = _dense(f, params.w_m1, params.b_m1)
    c["h_m1"] = silu(c["a_m1"])
    c["a_m2"] = _dense(c["h_m1"], params.w_m2, params.b_m2)
    c["h_m2"] = silu(c["a_m2"])
    c["h3"] = np.concatenate([c["h_c2"], c["h_m2"]], axis=1)
    c["a4"] = _dense(c["h3"], params.w_t1, params.b_t1)
    c["h4"] = silu(c["a4"])
    c["a5"] = _dense(c["h4"], params.w_t2, params.b_t2)
    c["h5"] = silu(c["a5"])
    c["h6"] = c["h4"] + c["h5"]
    c["a7"] = _dense(c["h6"], params.w_proj, params.b_proj)
    c["h7"] = silu(c["a7"])
    c["logit"] = _dense(c["h7"], params.w_head[None, :], params.b_head[None])[:, 0]
    c["p"] = expit(c["logit"])
    return c


def forward(params: ModelParams, phi, f) -> np.ndarray | float:
    """Sensitivity probability for one sample (1-D inputs) or a batch."""
    phi = np.asarray(phi, dtype=float)
    f = np.asarray(f, dtype=float)
    single = phi.ndim == 1
    cache = _forward_cache(params, np.atleast_2d(phi), np.atleast_2d(f))
    p = cache["p"]
    return float(p[0]) if single else p


def bce_loss(probs, labels) -> float:
    """Mean binary cross-entropy; probabilities are clipped to
    [1e-7, 1 - 1e-7] before the logs."""
    p = np.clip(np.asarray(probs, dtype=float), _CLIP, 1.0 - _CLIP)
    y = np.asarray(labels, dtype=float)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def backward(params: ModelParams, phi, f, labels) -> dict[str, np.ndarray]:
    """Exact gradients of the mean clipped BCE with respect to every parameter."""
    return _loss_and_grads(params, phi, f, labels)[1]


def _loss_and_grads(params: ModelParams, phi, f, labels):
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    f = np.atleast_2d(np.asarray(f, dtype=float))
    y = np.asarray(labels, dtype=float).ravel()
    if y.size == 0:
        raise ParameterError("empty batch")
    c = _forward_cache(params, phi, f)
    loss = bce_loss(c["p"], y)
    B = y.size

    p = c["p"]
    # Where the clip is active the loss is locally constant in the logit.
    inside = (p > _CLIP) & (p < 1.0 - _CLIP)
    g_logit = np.where(inside, p - y, 0.0) / B

    g = {}
    g["w_head"] = c["h7"].T @ g_logit
    g["b_head"] = np.asarray(g_logit.sum())
    g_h7 = g_logit[:, None] * params.w_head[None, :]
    g_a7 = g_h7 * silu_grad(c["a7"])
    g["w_proj"] = g_a7.T @ c["h6"]
    g["b_proj"] = g_a7.sum(axis=0)
    g_h6 = g_a7 @ params.w_proj
    # h6 = h4 + h5 and h5 depends on h4, so h4 collects both terms.
    g_a5 = g_h6 * silu_grad(c["a5"])
    g["w_t2"] = g_a5.T @ c["h4"]
    g["b_t2"] = g_a5.sum(axis=0)
    g_h4 = g_h6 + g_a5 @ params.w_t2
    g_a4 = g_h4 * silu_grad(c["a4"])
    g["w_t1"] = g_a4.T @ c["h3"]
    g["b_t1"] = g_a4.sum(axis=0)
    g_h3 = g_a4 @ params.w_t1
    g_hc2, g_hm2 = g_h3[:, :64], g_h3[:, 64:]

    g_ac2 = g_hc2 * silu_grad(c["a_c2"])
    g["w_c2"] = g_ac2.T @ c["h_c1"]
    g["b_c2"] = g_ac2.sum(axis=0)
    g_ac1 = (g_ac2 @ params.w_c2) * silu_grad(c["a_c1"])
    g["w_c1"] = g_ac1.T @ c["phi"]
    g["b_c1"] = g_ac1.sum(axis=0)

    g_am2 = g_hm2 * silu_grad(c["a_m2"])
    g["w_m2"] = g_am2.T @ c["h_m1"]
    g["b_m2"] = g_am2.sum(axis=0)
    g_am1 = (g_am2 @ params.w_m2) * silu_grad(c["a_m1"])
    g["w_m1"] = g_am1.T @ c["f"]
    g["b_m1"] = g_am1.sum(axis=0)
    return loss, g


@dataclass
class AdamState:
    """First and second moment accumulators, keyed like the parameter dict."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]

    @classmethod
    def zeros(cls, shapes: dict[str, np.ndarray] | None = None) -> "AdamState":
        template = shapes if shapes is not None else PARAM_SHAPES
        return cls(
            m={k: np.zeros(np.shape(v) if not isinstance(v, tuple) else v)
               for k, v in template.items()},
            v={k: np.zeros(np.shape(v) if not isinstance(v, tuple) else v)
               for k, v in template.items()},
        )


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState, t: int, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One bias-corrected Adam update, applied in place; returns (params, state)."""
    if t < 1:
        raise ParameterError(f"step index must be >= 1, got {t}")
    for k, grad in grads.items():
        state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * grad
        state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * grad ** 2
        m_hat = state.m[k] / (1.0 - beta1 ** t)
        v_hat = state.v[k] / (1.0 - beta2 ** t)
        params[k] = params[k] - lr * m_hat / (np.sqrt(v_hat) + eps)
    return params, state


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 512
    max_epochs: int = 25
    patience: int = 5
    val_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if min(self.learning_rate, self.batch_size, self.max_epochs,
               self.patience, self.val_fraction) <= 0:
            raise ParameterError("all training hyperparameters must be positive")
        if self.patience > self.max_epochs:
            raise ParameterError("patience cannot exceed max_epochs")
        if self.val_fraction >= 1:
            raise ParameterError("val_fraction must be < 1")


@dataclass
class ModelBundle:
    """Trained parameters, feature normalization, calibrated threshold."""

    params: ModelParams
    feature_mean: np.ndarray
    feature_std: np.ndarray
    tau_star: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.feature_mean = np.asarray(self.feature_mean, dtype=float)
        self.feature_std = np.asarray(self.feature_std, dtype=float)
        if self.feature_mean.shape != (FEATURE_DIM,) or self.feature_std.shape != (FEATURE_DIM,):
            raise ParameterError("feature statistics must be 33-vectors")
        if np.any(self.feature_std <= 0):
            raise ParameterError("feature_std entries must be positive")


def _stratified_split(labels: np.ndarray, fraction: float, seed: int):
    """Validation indices holding `fraction` of each label class."""
    rng = np.random.default_rng(np.random.PCG64(seed))
    val = []
    for cls in (0, 1):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(idx.size)]
        val.append(idx[: int(round(idx.size * fraction))])
    val_idx = np.sort(np.concatenate(val))
    mask = np.ones(labels.size, dtype=bool)
    mask[val_idx] = False
    return np.flatnonzero(mask), val_idx


def train(dataset, config: TrainConfig):
    """Fit the classifier on a labeled dataset of raw features.

    Returns an uncalibrated ModelBundle (tau_star None) holding the
    best-validation-loss parameters, plus the per-epoch loss history as a
    list of (epoch, train_loss, val_loss) tuples.
    """
    if len(dataset.labels) == 0:
        raise ParameterError("dataset is empty")
    mean, std = fit_standardization(dataset.features)
    phi_all = fourier_encode(dataset.xy)
    f_all = standardize(dataset.features, mean, std)
    y_all = np.asarray(dataset.labels, dtype=float)

    train_idx, val_idx = _stratified_split(y_all, config.val_fraction,
                                           mix64(config.seed, _TAG_SPLIT))
    phi_tr, f_tr, y_tr = phi_all[train_idx], f_all[train_idx], y_all[train_idx]
    phi_va, f_va, y_va = phi_all[val_idx], f_all[val_idx], y_all[val_idx]

    params = init_params(config.seed)
    pdict = params_to_dict(params)
    state = AdamState.zeros()
    best_loss = np.inf
    best = params.copy()
    best_epoch = 0
    since_improve = 0
    history = []
    t = 0
    for epoch in range(1, config.max_epochs + 1):
        order = np.random.default_rng(
            np.random.PCG64(mix64(config.seed, _TAG_EPOCH * 1000 + epoch))
        ).permutation(y_tr.size)
        batch_losses = []
        for start in range(0, y_tr.size, config.batch_size):
            sel = order[start:start + config.batch_size]
            loss, grads = _loss_and_grads(params, phi_tr[sel], f_tr[sel], y_tr[sel])
            t += 1
            adam_step(pdict, grads, state, t, config.learning_rate)
            for k, v in pdict.items():
                setattr(params, k, v)
            batch_losses.append(loss)
        val_loss = (bce_loss(forward(params, phi_va, f_va), y_va)
                    if y_va.size else float(np.mean(batch_losses)))
        history.append((epoch, float(np.mean(batch_losses)), val_loss))
        if val_loss < best_loss:
            best_loss = val_loss
            best = params.copy()
            best_epoch = epoch
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= config.patience:
                break

    bundle = ModelBundle(
        params=best,
        feature_mean=mean,
        feature_std=std,
        meta={
            "epochs_run": len(history),
            "best_epoch": best_epoch,
            "final_val_loss": best_loss,
            "seed": config.seed,
            "param_count": param_count(),
        },
    )
    return bundle, history


def _array_block(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape), "data": arr.ravel().tolist()}


def _read_block(block, name: str, shape) -> np.ndarray:
    if not isinstance(block, dict) or "shape" not in block or "data" not in block:
        raise ModelFormatError(f"field '{name}' is not a shape-prefixed array")
    expected = int(np.prod(shape, dtype=int)) if shape else 1
    data = block["data"]
    if tuple(block["shape"]) != tuple(shape):
        raise ModelFormatError(
            f"field '{name}' has shape {block['shape']}, expected {list(shape)}"
        )
    if len(data) != expected:
        raise ModelFormatError(
            f"field '{name}' holds {len(data)} values, expected {expected}"
        )
    return np.asarray(data, dtype=float).reshape(shape)


def save_model(bundle: ModelBundle, path) -> None:
    """Write the bundle as a self-describing JSON document.

    Numbers are emitted with shortest round-trip precision, so
    save -> load -> save reproduces the file byte for byte.
    """
    doc = {
        "meta": {"format": "pseudospec-model", "version": 1, **bundle.meta},
        "feature_norm": {
            "mean": _array_block(bundle.feature_mean),
            "std": _array_block(bundle.feature_std),
        },
        "params": {name: _array_block(getattr(bundle.params, name))
                   for name in PARAM_SHAPES},
        "calibration": {"tau_star": bundle.tau_star},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path) -> ModelBundle:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"not a valid model document: {exc}") from exc
    for section in ("meta", "feature_norm", "params", "calibration"):
        if section not in doc:
            raise ModelFormatError(f"missing section '{section}'")
    if doc["meta"].get("format") != "pseudospec-model":
        raise ModelFormatError("missing or unknown format marker in 'meta'")
    norm = doc["feature_norm"]
    for key in ("mean", "std"):
        if key not in norm:
            raise ModelFormatError(f"missing field 'feature_norm.{key}'")
    mean = _read_block(norm["mean"], "feature_norm.mean", (FEATURE_DIM,))
    std = _read_block(norm["std"], "feature_norm.std", (FEATURE_DIM,))
    values = {}
    for name, shape in PARAM_SHAPES.items():
        if name not in doc["params"]:
            raise ModelFormatError(f"missing field 'params.{name}'")
        values[name] = _read_block(doc["params"][name], f"params.{name}", shape)
    if "tau_star" not in doc["calibration"]:
        raise ModelFormatError("missing field 'calibration.tau_star'")
    tau = doc["calibration"]["tau_star"]
    meta = {k: v for k, v in doc["meta"].items() if k not in ("format", "version")}
    return ModelBundle(params=ModelParams(**values), feature_mean=mean,
                       feature_std=std,
                       tau_star=None if tau is None else float(tau), meta=meta)
