"""Deterministic numeric core used by the frame classifiers.

Everything runs in float64. Gradients are derived by hand and checked
against central finite differences (``grad_check``). Random streams come
from a pinned generator (PCG64) so the same seed reproduces the same
bits on every platform.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

_LOG_FLOOR = 1e-15

CONTAINER_MAGIC = b"VDXM"
CONTAINER_VERSION = 1


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 stream. The algorithm is pinned: do not swap bit generators."""
    return np.random.Generator(np.random.PCG64(seed))


def glorot_uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


# --- activations -----------------------------------------------------------

def relu(x):
    return np.maximum(x, 0.0)


def relu_backward(dy, x):
    return dy * (x > 0.0)


def sigmoid(x):
    # Split by sign so exp never overflows.
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_backward(dy, y):
    """dy through sigmoid given its output y."""
    return dy * y * (1.0 - y)


def tanh(x):
    return np.tanh(x)


def tanh_backward(dy, y):
    return dy * (1.0 - y * y)


def softmax(x):
    """Stable softmax along the last axis; rows sum to 1 within 1e-12."""
    z = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def softmax_backward(dy, y):
    """dy through softmax given its output y (last-axis softmax)."""
    dot = np.sum(dy * y, axis=-1, keepdims=True)
    return y * (dy - dot)


# --- losses ----------------------------------------------------------------

def cross_entropy(pred_prob: np.ndarray, label: int) -> float:
    """-log p[label] for one probability vector."""
    if not 0 <= label < pred_prob.shape[-1]:
        raise IndexError(f"label {label} out of range for {pred_prob.shape[-1]} classes")
    return float(-np.log(max(float(pred_prob[label]), _LOG_FLOOR)))


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Fused softmax + cross-entropy over rows of logits.

    Returns (mean loss, dlogits) with the classic fused gradient
    (p - onehot) / n_rows.
    """
    logits = np.atleast_2d(logits)
    labels = np.atleast_1d(labels)
    n = logits.shape[0]
    p = softmax(logits)
    picked = np.clip(p[np.arange(n), labels], _LOG_FLOOR, None)
    loss = float(np.mean(-np.log(picked)))
    dlogits = p.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    return loss, dlogits


# --- dense layer -----------------------------------------------------------

def dense_forward(W: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Affine map W.x + b. x may be a vector (in,) or a batch (n, in)."""
    if x.shape[-1] != W.shape[1]:
        raise ValueError(f"input dim {x.shape[-1]} != weight cols {W.shape[1]}")
    return x @ W.T + b


def dense_backward(W: np.ndarray, x: np.ndarray, dy: np.ndarray):
    """Chain-rule gradients for dense_forward. Returns (dW, db, dx)."""
    x2 = np.atleast_2d(x)
    dy2 = np.atleast_2d(dy)
    dW = dy2.T @ x2
    db = dy2.sum(axis=0)
    dx = dy2 @ W
    if x.ndim == 1:
        dx = dx[0]
    return dW, db, dx


# --- Adam ------------------------------------------------------------------

@dataclass
class AdamState:
    """Per-parameter first/second moments plus the shared step counter."""

    learning_rate: float
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0

    @classmethod
    def for_params(cls, params: dict, learning_rate: float) -> "AdamState":
        state = cls(learning_rate=learning_rate)
        for name, p in params.items():
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        return state


def adam_step(params: dict, grads: dict, state: AdamState) -> dict:
    """One bias-corrected Adam update, applied in place to params."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - ADAM_BETA1 ** t
    bc2 = 1.0 - ADAM_BETA2 ** t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != param shape {p.shape} for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * (g * g)
        p -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)
    return params


# --- dropout ---------------------------------------------------------------

def dropout_mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray:
    """Inverted-dropout mask: kept entries are 1/(1-rate), dropped are 0."""
    keep = rng.random(shape) >= rate
    return keep.astype(np.float64) / (1.0 - rate)


def dropout(x: np.ndarray, rate: float, rng: np.random.Generator | None, training: bool) -> np.ndarray:
    """Inverted dropout; identity when not training or rate == 0."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate {rate} outside [0, 1)")
    if not training or rate == 0.0:
        return x
    return x * dropout_mask(rng, x.shape, rate)


# --- gradient checking -----------------------------------------------------

def grad_check(loss_fn, params: dict, analytic: dict, step: float = 1e-4) -> dict:
    """Central-difference check of analytic gradients.

    loss_fn() must evaluate the scalar loss at the current params (which
    are perturbed in place and restored). Returns per-block max relative
    error, rel = |a - n| / max(|a|, |n|, 1e-8).
    """
    report = {}
    for name, p in params.items():
        a = analytic[name]
        worst = 0.0
        flat = p.reshape(-1)
        aflat = a.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_fn()
            flat[i] = orig - step
            down = loss_fn()
            flat[i] = orig
            num = (up - down) / (2.0 * step)
            denom = max(abs(aflat[i]), abs(num), 1e-8)
            worst = max(worst, abs(aflat[i] - num) / denom)
        report[name] = worst
    return report


# --- parameter container ---------------------------------------------------

_DTYPE_CODES = {np.dtype(np.float64): 0, np.dtype(np.int32): 1}
_CODE_DTYPES = {code: dt for dt, code in _DTYPE_CODES.items()}


def write_container(path, meta: dict, blocks: dict) -> None:
    """Versioned binary container: magic, version, JSON meta, named arrays.

    Layout (little-endian):
      magic 4s | version u32 | meta_len u32 | meta JSON (sorted keys, utf-8)
      | n_blocks u32 | per block: name_len u16, name utf-8, dtype u8,
        ndim u8, dims u32..., raw data.
    Byte-identical for identical inputs, which the reproducibility tests rely on.
    """
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CONTAINER_MAGIC)
        fh.write(struct.pack("<II", CONTAINER_VERSION, len(meta_bytes)))
        fh.write(meta_bytes)
        fh.write(struct.pack("<I", len(blocks)))
        for name, arr in blocks.items():
            arr = np.ascontiguousarray(arr)
            if arr.dtype not in _DTYPE_CODES:
                raise ValueError(f"unsupported dtype {arr.dtype} for block {name}")
            nb = name.encode("utf-8")
            fh.write(struct.pack("<H", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<BB", _DTYPE_CODES[arr.dtype], arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def read_container(path):
    """Inverse of write_container. Returns (meta, blocks)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CONTAINER_MAGIC:
            raise ValueError(f"bad magic {magic!r} in {path}")
        version, meta_len = struct.unpack("<II", fh.read(8))
        if version != CONTAINER_VERSION:
            raise ValueError(f"unsupported container version {version}")
        meta = json.loads(fh.read(meta_len).decode("utf-8"))
        (n_blocks,) = struct.unpack("<I", fh.read(4))
        blocks = {}
        for _ in range(n_blocks):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            code, ndim = struct.unpack("<BB", fh.read(2))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            dtype = _CODE_DTYPES[code]
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * dtype.itemsize)
            if len(raw) != count * dtype.itemsize:
                raise ValueError(f"truncated block {name} in {path}")
            blocks[name] = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
        return meta, blocks
