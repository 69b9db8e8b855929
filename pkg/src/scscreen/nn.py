"""A small convolutional regressor/classifier over periodic-table tensors.

Everything is plain numpy: stacked 3x3 same-padding convolutions with
rectifier activations, global average pooling, an optional dense hidden
layer, and a scalar head that is either a regression value (kelvin, through
an invertible target transform) or a binary logit. Gradients are exact and
analytic - the test suite checks every parameter against central finite
differences - and the optimizer is bias-corrected Adam.

Parameters and activations default to float32 (the conventional training
precision; roughly halves wall time on BLAS); set ModelConfig.dtype to
"float64" for gradient-verification work. Losses and target transforms
always compute in float64 regardless.

Array layout: the public interface speaks (batch, 4, 7, 32) channel-first
tensors, matching the encoder; internally activations run channel-last
(batch, 7, 32, C) so the im2col matrices feed BLAS without extra transposes.
Convolution weights are (c_in, c_out, 3, 3); dense weights are
(fan_in, fan_out).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np

from .ptable import TENSOR_SHAPE, encode_ptable_batch

H_GRID, W_GRID = 7, 32
N_CELLS = H_GRID * W_GRID  # global-average-pool divisor
KERNEL = 3

CHECKPOINT_FORMAT_VERSION = 1


class Head(Enum):
    REGRESSION = "regression"
    BINARY_LOGIT = "binary_logit"


class TcTransform(Enum):
    LINEAR = "linear"
    LOG_SHIFT_0P1 = "log_shift_0p1"


class Loss(Enum):
    SMOOTH_L1 = "smooth_l1"
    BCE_LOGIT = "bce_logit"


class ShapeMismatchError(ValueError):
    pass


class LengthMismatchError(ValueError):
    pass


class LabelOutOfRangeError(ValueError):
    pass


class NegativeTcError(ValueError):
    pass


class EmptyDatasetError(ValueError):
    pass


class DivergenceDetectedError(ArithmeticError):
    """Raised when training hits a non-finite loss; carries the epoch/step."""

    def __init__(self, epoch: int, step: int, loss: float):
        super().__init__(
            f"non-finite loss {loss!r} at epoch {epoch}, step {step}; "
            "lower the learning rate or inspect the targets"
        )
        self.epoch = epoch
        self.step = step


@dataclass(frozen=True)
class ModelConfig:
    conv_layers: int = 9
    channels_per_layer: int = 32
    dense_hidden: int = 64  # 0 disables the hidden layer
    head: Head = Head.REGRESSION
    tc_transform: TcTransform = TcTransform.LOG_SHIFT_0P1
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        if self.conv_layers < 1:
            raise ValueError(f"conv_layers must be >= 1, got {self.conv_layers}")
        if self.channels_per_layer < 1:
            raise ValueError(
                f"channels_per_layer must be >= 1, got {self.channels_per_layer}"
            )
        if self.dense_hidden < 0:
            raise ValueError(f"dense_hidden must be >= 0, got {self.dense_hidden}")
        if not isinstance(self.head, Head):
            raise ValueError(f"head must be a Head, got {self.head!r}")
        if not isinstance(self.tc_transform, TcTransform):
            raise ValueError(f"tc_transform must be a TcTransform, got {self.tc_transform!r}")
        if self.dtype not in ("float32", "float64"):
            raise ValueError(f"dtype must be 'float32' or 'float64', got {self.dtype!r}")

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 32
    epochs: int = 100
    loss: Loss = Loss.SMOOTH_L1
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if not isinstance(self.loss, Loss):
            raise ValueError(f"loss must be a Loss, got {self.loss!r}")


@dataclass
class ModelParams:
    """All learnable arrays; `arrays()` fixes the flat order used by the
    optimizer, gradients, and checkpoints."""

    config: ModelConfig
    conv_w: list  # [(c_in, c_out, 3, 3)]
    conv_b: list  # [(c_out,)]
    dense_w: np.ndarray | None  # (C, dense_hidden)
    dense_b: np.ndarray | None
    head_w: np.ndarray  # (fan_in, 1)
    head_b: np.ndarray  # (1,)

    def arrays(self) -> list:
        out = []
        for w, b in zip(self.conv_w, self.conv_b):
            out.extend((w, b))
        if self.dense_w is not None:
            out.extend((self.dense_w, self.dense_b))
        out.extend((self.head_w, self.head_b))
        return out

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.config,
            [w.copy() for w in self.conv_w],
            [b.copy() for b in self.conv_b],
            None if self.dense_w is None else self.dense_w.copy(),
            None if self.dense_b is None else self.dense_b.copy(),
            self.head_w.copy(),
            self.head_b.copy(),
        )

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.arrays())


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    learning_rate: float = 1e-4  # recorded default; adam_step's lr argument wins


def init_params(cfg: ModelConfig) -> ModelParams:
    """He-style initialization: N(0, 2/fan_in) weights, zero biases."""
    rng = np.random.default_rng(cfg.seed)
    dt = cfg.np_dtype
    conv_w, conv_b = [], []
    c_in = TENSOR_SHAPE[0]
    for _ in range(cfg.conv_layers):
        c_out = cfg.channels_per_layer
        fan_in = c_in * KERNEL * KERNEL
        w = rng.normal(0.0, np.sqrt(2.0 / fan_in), (c_in, c_out, KERNEL, KERNEL))
        conv_w.append(w.astype(dt))
        conv_b.append(np.zeros(c_out, dtype=dt))
        c_in = c_out
    if cfg.dense_hidden > 0:
        dense_w = rng.normal(0.0, np.sqrt(2.0 / c_in), (c_in, cfg.dense_hidden)).astype(dt)
        dense_b = np.zeros(cfg.dense_hidden, dtype=dt)
        fan = cfg.dense_hidden
    else:
        dense_w = dense_b = None
        fan = c_in
    head_w = rng.normal(0.0, np.sqrt(2.0 / fan), (fan, 1)).astype(dt)
    head_b = np.zeros(1, dtype=dt)
    return ModelParams(cfg, conv_w, conv_b, dense_w, dense_b, head_w, head_b)


def init_adam(params: ModelParams, learning_rate: float = 1e-4) -> AdamState:
    arrays = params.arrays()
    return AdamState(
        m=[np.zeros_like(a) for a in arrays],
        v=[np.zeros_like(a) for a in arrays],
        learning_rate=learning_rate,
    )


# ---------------------------------------------------------------------------
# forward / backward


def _windows(padded: np.ndarray) -> np.ndarray:
    """(n, H+2, W+2, C) -> read-only view (n, H, W, 3, 3, C) of 3x3 patches."""
    n, hp, wp, c = padded.shape
    s0, s1, s2, s3 = padded.strides
    return np.lib.stride_tricks.as_strided(
        padded,
        shape=(n, hp - 2, wp - 2, KERNEL, KERNEL, c),
        strides=(s0, s1, s2, s1, s2, s3),
        writeable=False,
    )


def _pad_hw(x: np.ndarray) -> np.ndarray:
    n, h, w, c = x.shape
    out = np.zeros((n, h + 2, w + 2, c), dtype=x.dtype)
    out[:, 1:-1, 1:-1, :] = x
    return out


def _ws_buf(ws: dict | None, key: tuple, shape: tuple, dtype, zeroed: bool = False):
    """Scratch array reused across batches when a workspace dict is given.

    The training loop allocates tens of megabytes per batch otherwise; the
    buffers it hands out are only valid until the same key is requested
    again, which is why the public entry points never pool.
    """
    if ws is None:
        return np.zeros(shape, dtype) if zeroed else np.empty(shape, dtype)
    full = key + (shape, np.dtype(dtype).char)
    buf = ws.get(full)
    if buf is None:
        buf = np.zeros(shape, dtype) if zeroed else np.empty(shape, dtype)
        ws[full] = buf
    return buf


def _im2col(x: np.ndarray, ws: dict | None = None, tag: int = 0) -> np.ndarray:
    """(n, H, W, C) -> (n*H*W, 9*C) patch matrix, feature order (ky, kx, c)."""
    n, h, w, c = x.shape
    if ws is None:
        return _windows(_pad_hw(x)).reshape(n * h * w, KERNEL * KERNEL * c)
    # pooled path: the pad buffer keeps its zero border between uses
    pad = _ws_buf(ws, ("pad", tag), (n, h + 2, w + 2, c), x.dtype, zeroed=True)
    pad[:, 1:-1, 1:-1, :] = x
    cols = _ws_buf(ws, ("cols", tag), (n * h * w, KERNEL * KERNEL * c), x.dtype)
    np.copyto(cols.reshape(n, h, w, KERNEL, KERNEL, c), _windows(pad))
    return cols


def _check_batch(x: np.ndarray, dtype) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 4 or x.shape[1:] != TENSOR_SHAPE:
        raise ShapeMismatchError(
            f"expected a batch of shape (n, {TENSOR_SHAPE[0]}, {TENSOR_SHAPE[1]}, "
            f"{TENSOR_SHAPE[2]}), got {x.shape}"
        )
    if x.shape[0] == 0:
        raise ShapeMismatchError("batch is empty")
    return x.astype(dtype, copy=False)


def _forward_cached(params: ModelParams, x_nhwc: np.ndarray, ws: dict | None = None):
    """Run the network, keeping the per-layer patch matrices and rectifier
    masks needed for the backward pass."""
    n = x_nhwc.shape[0]
    act = x_nhwc
    conv_cache = []
    for i, (w, b) in enumerate(zip(params.conv_w, params.conv_b)):
        c_in, c_out = w.shape[0], w.shape[1]
        if act.shape[3] != c_in:
            raise ShapeMismatchError(
                f"layer expects {c_in} input channels, got {act.shape[3]}"
            )
        cols = _im2col(act, ws, i)  # (n*HW, 9*c_in)
        w_flat = w.transpose(2, 3, 0, 1).reshape(KERNEL * KERNEL * c_in, c_out)
        pre = _ws_buf(ws, ("act", i), (cols.shape[0], c_out), cols.dtype)
        np.matmul(cols, w_flat, out=pre)
        pre += b
        mask = _ws_buf(ws, ("mask", i), pre.shape, np.bool_)
        np.greater(pre, 0.0, out=mask)
        np.maximum(pre, 0.0, out=pre)
        act = pre.reshape(n, H_GRID, W_GRID, c_out)
        conv_cache.append((cols, mask))
    g = act.mean(axis=(1, 2))  # (n, C) global average pool
    if params.dense_w is not None:
        pre_d = g @ params.dense_w + params.dense_b
        mask_d = pre_d > 0.0
        h = np.where(mask_d, pre_d, np.zeros((), dtype=pre_d.dtype))
    else:
        mask_d = None
        h = g
    raw = (h @ params.head_w).ravel() + params.head_b[0]
    return raw, (n, g, mask_d, h, conv_cache)


def forward(params: ModelParams, batch: np.ndarray) -> np.ndarray:
    """Raw head outputs for a (n, 4, 7, 32) batch: regression values in the
    transformed target space, or logits."""
    x = _check_batch(batch, params.config.np_dtype)
    raw, _ = _forward_cached(params, np.ascontiguousarray(x.transpose(0, 2, 3, 1)))
    return raw


def _backward_cached(params: ModelParams, cache, dout: np.ndarray, ws: dict | None = None) -> list:
    """Gradients in arrays() order given d(loss)/d(raw output)."""
    n, g, mask_d, h, conv_cache = cache
    dt = params.head_w.dtype
    dout = dout.astype(dt, copy=False)
    d_head_w = (h.T @ dout[:, None]).astype(dt, copy=False)
    d_head_b = np.array([dout.sum()], dtype=dt)
    dh = np.outer(dout, params.head_w[:, 0])
    if params.dense_w is not None:
        dpre_d = dh
        dpre_d *= mask_d
        d_dense_w = g.T @ dpre_d
        d_dense_b = dpre_d.sum(axis=0)
        dg = dpre_d @ params.dense_w.T
        grads_tail = [d_dense_w, d_dense_b, d_head_w, d_head_b]
    else:
        dg = dh
        grads_tail = [d_head_w, d_head_b]

    # the pooled gradient spreads evenly back over the 224 grid cells
    dpre_flat = _ws_buf(ws, ("dpre",), (n * N_CELLS, dg.shape[1]), dt)
    dpre_flat.reshape(n, N_CELLS, dg.shape[1])[:] = (dg * (1.0 / N_CELLS))[:, None, :]
    conv_grads = []
    for layer in range(len(params.conv_w) - 1, -1, -1):
        w = params.conv_w[layer]
        cols, mask = conv_cache[layer]
        c_in, c_out = w.shape[0], w.shape[1]
        dpre_flat *= mask
        d_w_flat = cols.T @ dpre_flat  # (9*c_in, c_out)
        d_w = np.ascontiguousarray(
            d_w_flat.reshape(KERNEL, KERNEL, c_in, c_out).transpose(2, 3, 0, 1)
        )
        d_b = dpre_flat.sum(axis=0)
        conv_grads.append((d_w, d_b))
        if layer == 0:
            break
        # input gradient via column-to-image scatter: nine shifted adds
        w_flat = w.transpose(2, 3, 0, 1).reshape(KERNEL * KERNEL * c_in, c_out)
        dcols = _ws_buf(ws, ("dcols",), (n * N_CELLS, KERNEL * KERNEL * c_in), dt)
        np.matmul(dpre_flat, w_flat.T, out=dcols)
        dwin = dcols.reshape(n, H_GRID, W_GRID, KERNEL, KERNEL, c_in)
        dxp = _ws_buf(ws, ("dxp",), (n, H_GRID + 2, W_GRID + 2, c_in), dt)
        dxp.fill(0)
        for ky in range(KERNEL):
            for kx in range(KERNEL):
                dxp[:, ky : ky + H_GRID, kx : kx + W_GRID, :] += dwin[:, :, :, ky, kx, :]
        nxt = _ws_buf(ws, ("dpre_next",), (n * N_CELLS, c_in), dt)
        np.copyto(nxt.reshape(n, H_GRID, W_GRID, c_in), dxp[:, 1:-1, 1:-1, :])
        dpre_flat = nxt

    grads = []
    for d_w, d_b in reversed(conv_grads):
        grads.extend((d_w, d_b))
    grads.extend(grads_tail)
    return grads


def backward(
    params: ModelParams, batch: np.ndarray, targets: np.ndarray, loss: Loss
) -> list:
    """Exact gradients of the mean loss w.r.t. every parameter, in
    arrays() order. Targets live in the same space as forward's raw
    outputs (transformed kelvin for regression, {0,1} labels for logits)."""
    x = _check_batch(batch, params.config.np_dtype)
    raw, cache = _forward_cached(params, np.ascontiguousarray(x.transpose(0, 2, 3, 1)))
    if loss is Loss.SMOOTH_L1:
        _, dout = smooth_l1_loss(raw, targets)
    elif loss is Loss.BCE_LOGIT:
        _, dout = bce_logit_loss(raw, targets)
    else:
        raise ValueError(f"unknown loss {loss!r}")
    return _backward_cached(params, cache, dout)


# ---------------------------------------------------------------------------
# losses and target transforms


def smooth_l1_loss(pred, target) -> tuple[float, np.ndarray]:
    """Mean smooth-L1 (quadratic within |d| < 1, linear outside) and its
    gradient w.r.t. pred."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise LengthMismatchError(f"shapes differ: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise LengthMismatchError("need at least one element")
    d = pred - target
    a = np.abs(d)
    per = np.where(a < 1.0, 0.5 * d * d, a - 0.5)
    grad = np.clip(d, -1.0, 1.0) / d.size
    return float(per.mean()), grad


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_logit_loss(logits, labels) -> tuple[float, np.ndarray]:
    """Mean binary cross entropy on logits, in the overflow-safe form
    max(z,0) - z*y + log(1 + exp(-|z|)), with gradient (sigmoid(z) - y)/n."""
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if z.shape != y.shape:
        raise LengthMismatchError(f"shapes differ: {z.shape} vs {y.shape}")
    if z.size == 0:
        raise LengthMismatchError("need at least one element")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise LabelOutOfRangeError("labels must be exactly 0 or 1")
    per = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    grad = (_sigmoid(z) - y) / z.size
    return float(per.mean()), grad


def tc_transform(tc_kelvin, mode: TcTransform):
    """Map kelvin to the network's target space."""
    tc = np.asarray(tc_kelvin, dtype=np.float64)
    if np.any(tc < 0):
        raise NegativeTcError(f"negative Tc in {tc_kelvin!r}")
    if mode is TcTransform.LINEAR:
        return tc.copy() if tc.ndim else float(tc)
    if mode is TcTransform.LOG_SHIFT_0P1:
        out = np.log(tc + 0.1)
        return out if tc.ndim else float(out)
    raise ValueError(f"unknown transform {mode!r}")


def inverse_tc_transform(value, mode: TcTransform):
    """Map the network's target space back to kelvin."""
    v = np.asarray(value, dtype=np.float64)
    if mode is TcTransform.LINEAR:
        return v.copy() if v.ndim else float(v)
    if mode is TcTransform.LOG_SHIFT_0P1:
        out = np.maximum(np.exp(v) - 0.1, 0.0)
        return out if v.ndim else float(out)
    raise ValueError(f"unknown transform {mode!r}")


# ---------------------------------------------------------------------------
# optimizer


def adam_step(
    params: ModelParams, grads: list, state: AdamState, lr: float
) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update, in place on params and state."""
    arrays = params.arrays()
    if len(grads) != len(arrays):
        raise ShapeMismatchError(f"expected {len(arrays)} gradients, got {len(grads)}")
    for a, g in zip(arrays, grads):
        if a.shape != g.shape:
            raise ShapeMismatchError(f"gradient shape {g.shape} != parameter {a.shape}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for a, g, m, v in zip(arrays, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        a -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


# ---------------------------------------------------------------------------
# training and prediction


def _paired_loss(head: Head, loss: Loss) -> None:
    ok = (head is Head.REGRESSION and loss is Loss.SMOOTH_L1) or (
        head is Head.BINARY_LOGIT and loss is Loss.BCE_LOGIT
    )
    if not ok:
        raise ValueError(f"loss {loss.name} does not fit head {head.name}")


def train(
    samples: Sequence[tuple[Mapping[str, float], float]],
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    *,
    label_threshold: float = 0.0,
    on_epoch: Callable[[int, ModelParams, float], bool] | None = None,
) -> tuple[ModelParams, list[float]]:
    """Fit a model on (composition, tc_kelvin) pairs.

    Regression targets pass through the config's tc transform; for a
    BINARY_LOGIT head the labels are tc > label_threshold. Fully
    deterministic given the two seeds (parameter init and epoch shuffling).
    Returns the trained parameters and the per-epoch mean training loss.

    `on_epoch(epoch, params, mean_loss)` runs after every epoch; returning
    truthy stops training early (used for hold-out-target stopping).
    """
    if len(samples) == 0:
        raise EmptyDatasetError("no training samples")
    _paired_loss(model_cfg.head, train_cfg.loss)
    comps = [c for c, _ in samples]
    tc = np.asarray([t for _, t in samples], dtype=np.float64)
    if model_cfg.head is Head.REGRESSION:
        targets = tc_transform(tc, model_cfg.tc_transform)
    else:
        targets = (tc > label_threshold).astype(np.float64)
    x = encode_ptable_batch(comps).transpose(0, 2, 3, 1)
    x = np.ascontiguousarray(x, dtype=model_cfg.np_dtype)

    params = init_params(model_cfg)
    state = init_adam(params, train_cfg.learning_rate)
    shuffle_rng = np.random.default_rng(train_cfg.shuffle_seed)
    n = len(samples)
    trace: list[float] = []
    ws: dict = {}  # scratch buffers shared across steps
    for epoch in range(train_cfg.epochs):
        perm = shuffle_rng.permutation(n)
        total = 0.0
        for step, start in enumerate(range(0, n, train_cfg.batch_size)):
            idx = perm[start : start + train_cfg.batch_size]
            raw, cache = _forward_cached(params, x[idx], ws)
            if train_cfg.loss is Loss.SMOOTH_L1:
                loss, dout = smooth_l1_loss(raw.astype(np.float64), targets[idx])
            else:
                loss, dout = bce_logit_loss(raw.astype(np.float64), targets[idx])
            if not np.isfinite(loss):
                raise DivergenceDetectedError(epoch, step, loss)
            grads = _backward_cached(params, cache, dout, ws)
            adam_step(params, grads, state, train_cfg.learning_rate)
            total += loss * len(idx)
        trace.append(total / n)
        if on_epoch is not None and on_epoch(epoch, params, trace[-1]):
            break
    return params, trace


def predict(
    params: ModelParams,
    compositions: Sequence[Mapping[str, float]],
    mode: Head | None = None,
) -> np.ndarray:
    """Predicted Tc in kelvin (REGRESSION, clamped at 0) or positive-class
    probability (BINARY_LOGIT) for each composition."""
    head = params.config.head
    if mode is not None and mode is not head:
        raise ShapeMismatchError(f"params were trained for {head.name}, not {mode.name}")
    if len(compositions) == 0:
        return np.zeros(0)
    raw = forward(params, encode_ptable_batch(compositions)).astype(np.float64)
    if head is Head.REGRESSION:
        kelvin = inverse_tc_transform(raw, params.config.tc_transform)
        return np.maximum(kelvin, 0.0)
    return _sigmoid(raw)


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(params: ModelParams, path) -> None:
    """Write params as an .npz with a JSON header; loading restores bitwise
    identical predictions."""
    cfg = params.config
    meta = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "conv_layers": cfg.conv_layers,
        "channels_per_layer": cfg.channels_per_layer,
        "dense_hidden": cfg.dense_hidden,
        "head": cfg.head.name,
        "tc_transform": cfg.tc_transform.name,
        "seed": cfg.seed,
        "dtype": cfg.dtype,
    }
    arrays = {f"array_{i}": a for i, a in enumerate(params.arrays())}
    np.savez(path, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)


def load_checkpoint(path) -> ModelParams:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]))
        if meta.get("format_version") != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format {meta.get('format_version')!r}")
        cfg = ModelConfig(
            conv_layers=meta["conv_layers"],
            channels_per_layer=meta["channels_per_layer"],
            dense_hidden=meta["dense_hidden"],
            head=Head[meta["head"]],
            tc_transform=TcTransform[meta["tc_transform"]],
            seed=meta["seed"],
            dtype=meta.get("dtype", "float32"),
        )
        params = init_params(cfg)
        arrays = params.arrays()
        for i, a in enumerate(arrays):
            stored = data[f"array_{i}"]
            if stored.shape != a.shape:
                raise ValueError(f"checkpoint array {i} has shape {stored.shape}, expected {a.shape}")
            a[...] = stored
    return params
