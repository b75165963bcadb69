"""Deterministic float32 tensor kernels.

Every kernel here fixes its floating-point summation order explicitly and
avoids BLAS-backed routines, whose accumulation order can change with thread
count or build flags.  Reduction loops run over ascending indices; the
channel contraction inside the transposed convolution uses np.einsum with
optimize=False, which lowers to a plain nested loop with a stable order.
Identical inputs therefore produce bit-identical outputs on every run.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError

_F32 = np.float32


def _as_f32(x: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(x, dtype=_F32))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(m, k) @ (k, n) with accumulation over ascending k.

    Equivalent to the naive triple loop, element for element, bit for bit.
    """
    a = _as_f32(a)
    b = _as_f32(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-d operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} vs {b.shape}")
    m, k = a.shape
    n = b.shape[1]
    out = np.zeros((m, n), dtype=_F32)
    for i in range(k):
        out += a[:, i, None] * b[None, i, :]
    return out


def conv_transpose2d(
    x: np.ndarray,
    kernel: np.ndarray,
    stride: int = 1,
    pad: int = 0,
    output_padding: int = 0,
) -> np.ndarray:
    """Transposed 2-d convolution by scatter-accumulation.

    x: (N, Cin, H, W); kernel: (Cin, Cout, kh, kw).  Each kernel offset
    (u, v), taken in ascending row-major order, scatters one strided block
    into the output buffer, so the floating-point accumulation order is
    fixed.  Output spatial size is (H-1)*stride - 2*pad + kh + output_padding.
    """
    x = _as_f32(x)
    kernel = _as_f32(kernel)
    if x.ndim != 4:
        raise ShapeError(f"conv_transpose2d input must be (N, C, H, W), got {x.shape}")
    if kernel.ndim != 4:
        raise ShapeError(f"conv_transpose2d kernel must be (Cin, Cout, kh, kw), got {kernel.shape}")
    n, cin, h, w = x.shape
    kcin, cout, kh, kw = kernel.shape
    if cin != kcin:
        raise ShapeError(f"kernel expects {kcin} input channels, input has {cin}")
    if stride < 1 or pad < 0:
        raise ShapeError(f"invalid stride/pad: {stride}, {pad}")
    if not 0 <= output_padding < max(stride, 1):
        raise ShapeError(f"output_padding must lie in [0, stride), got {output_padding}")
    h_out = (h - 1) * stride - 2 * pad + kh + output_padding
    w_out = (w - 1) * stride - 2 * pad + kw + output_padding
    if (h - 1) * stride - 2 * pad + kh < 1 or (w - 1) * stride - 2 * pad + kw < 1:
        raise ShapeError(
            f"configuration yields non-positive output size: "
            f"input {h}x{w}, kernel {kh}x{kw}, stride {stride}, pad {pad}"
        )
    h_full = (h - 1) * stride + kh + output_padding
    w_full = (w - 1) * stride + kw + output_padding
    buf = np.zeros((n, cout, h_full, w_full), dtype=_F32)
    h_span = (h - 1) * stride + 1
    w_span = (w - 1) * stride + 1
    for u in range(kh):
        for v in range(kw):
            contrib = np.einsum("ncij,cd->ndij", x, kernel[:, :, u, v], optimize=False)
            buf[:, :, u : u + h_span : stride, v : v + w_span : stride] += contrib
    return buf[:, :, pad : pad + h_out, pad : pad + w_out].copy()


def batchnorm_infer(
    x: np.ndarray,
    mean: np.ndarray,
    var: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    eps: float = 1e-5,
) -> np.ndarray:
    """Inference-mode batch norm over the channel axis of (N, C, H, W)."""
    x = _as_f32(x)
    mean = _as_f32(mean)
    var = _as_f32(var)
    gamma = _as_f32(gamma)
    beta = _as_f32(beta)
    if x.ndim != 4:
        raise ShapeError(f"batchnorm_infer input must be (N, C, H, W), got {x.shape}")
    c = x.shape[1]
    for name, arr in (("mean", mean), ("var", var), ("gamma", gamma), ("beta", beta)):
        if arr.shape != (c,):
            raise ShapeError(f"batchnorm_infer {name} must have shape ({c},), got {arr.shape}")
    inv = (_F32(1.0) / np.sqrt(var + _F32(eps))).astype(_F32)
    shaped = lambda v: v[None, :, None, None]
    return ((x - shaped(mean)) * shaped(inv) * shaped(gamma) + shaped(beta)).astype(_F32)


_ACTIVATIONS = ("relu", "tanh", "sigmoid", "identity")


def apply_activation(x: np.ndarray, kind: str) -> np.ndarray:
    """Elementwise nonlinearity; 'identity' copies so callers never alias."""
    x = _as_f32(x)
    if kind == "relu":
        return np.maximum(x, _F32(0.0))
    if kind == "tanh":
        return np.tanh(x)
    if kind == "sigmoid":
        return (_F32(1.0) / (_F32(1.0) + np.exp(-x))).astype(_F32)
    if kind == "identity":
        return x.copy()
    raise ShapeError(f"unknown activation {kind!r}; expected one of {_ACTIVATIONS}")
