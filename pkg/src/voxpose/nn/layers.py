"""Layer kernels for the small conv nets used by the pipeline.

Each layer is a plain descriptor (dataclass) plus a pair of pure functions:
``*_forward(x, ...) -> y`` and ``*_backward(...) -> (gx, grads...)``.
Arrays are channel-first without a batch axis: (C, H, W) for 2-D layers and
(C, X, Y, Z) for 3-D layers. All functions work for float32 and float64 and
never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Conv2d:
    in_ch: int
    out_ch: int
    kernel: int = 3
    stride: int = 1
    padding: int = 0


@dataclass(frozen=True)
class Conv3d:
    in_ch: int
    out_ch: int
    kernel: int = 3
    stride: int = 1
    padding: int = 0


@dataclass(frozen=True)
class Relu:
    pass


@dataclass(frozen=True)
class Sigmoid:
    pass


@dataclass(frozen=True)
class SpatialSoftmax:
    """Softmax over all spatial positions, independently per channel.

    beta scales the logits before normalization; values > 1 sharpen the
    distribution so expectation-style decoding is less diluted by the
    background mass of large grids.
    """

    beta: float = 1.0


@dataclass(frozen=True)
class BiasAdd:
    channels: int


@dataclass(frozen=True)
class Upsample2d:
    """Nearest-neighbour spatial upsampling (integer factor)."""

    factor: int = 2


LayerSpec = Conv2d | Conv3d | Relu | Sigmoid | SpatialSoftmax | BiasAdd | Upsample2d


def conv_out_size(size: int, kernel: int, stride: int, padding: int) -> int:
    out = (size + 2 * padding - kernel) // stride + 1
    return out


def _pad_spatial(x: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return x
    pad = [(0, 0)] + [(padding, padding)] * (x.ndim - 1)
    return np.pad(x, pad)


def _offset_slices(out_shape: tuple[int, ...], offset: tuple[int, ...], stride: int) -> tuple[slice, ...]:
    return tuple(slice(o, o + stride * n, stride) for o, n in zip(offset, out_shape))


import threading

_SCRATCH = threading.local()
_BLOCK_BYTES = 196608


def _flush32(arr: np.ndarray) -> np.ndarray:
    # subnormal outputs would poison every downstream conv with trap-slow math
    if arr.dtype == np.float32:
        np.copyto(arr, 0.0, where=np.abs(arr) < np.finfo(np.float32).tiny)
    return arr


def _scratch(key: str, shape: tuple[int, ...], dtype) -> np.ndarray:
    """Reusable per-thread workspace; fresh MB-scale temporaries per kernel
    offset would spend more time in page faults than in BLAS, and thread
    locality keeps concurrent forwards on disjoint nets independent."""
    pool = getattr(_SCRATCH, "pool", None)
    if pool is None:
        pool = {}
        _SCRATCH.pool = pool
    k = (key, shape, np.dtype(dtype))
    buf = pool.get(k)
    if buf is None:
        buf = np.empty(shape, dtype=dtype)
        pool[k] = buf
    return buf


def _row_blocks(out_spatial: tuple[int, ...], in_ch: int, itemsize: int):
    """Split the leading output axis so one block's slices stay cache-resident."""
    row = int(np.prod(out_spatial[1:]))
    rows_per_block = max(1, _BLOCK_BYTES // max(1, row * in_ch * itemsize))
    for d0 in range(0, out_spatial[0], rows_per_block):
        d1 = min(d0 + rows_per_block, out_spatial[0])
        yield d0, d1, (d1 - d0) * row


def _conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, padding: int) -> np.ndarray:
    """Shared 2-D/3-D conv kernel: per cache-sized block, one skinny matmul
    per kernel offset. The blocking matters more than BLAS here: the target
    machine is memory-bound, so each block (input slab, matmul output,
    accumulator) must stay hot across all k^d offsets."""
    xp = _pad_spatial(x, padding)
    k = w.shape[2]
    nd = x.ndim - 1
    out_spatial = tuple(conv_out_size(s, k, stride, padding) for s in x.shape[1:])
    out_ch, in_ch = w.shape[0], w.shape[1]
    y = np.empty((out_ch,) + out_spatial, dtype=x.dtype)
    tail = out_spatial[1:]
    offsets = [(off, np.ascontiguousarray(w[(slice(None), slice(None)) + off]))
               for off in np.ndindex(*(k,) * nd)]
    for d0, d1, nblk in _row_blocks(out_spatial, in_ch, x.dtype.itemsize):
        flat = _scratch("conv_flat", (in_ch, nblk), x.dtype)
        flat_nd = flat.reshape((in_ch, d1 - d0) + tail)
        tmp = _scratch("conv_tmp", (out_ch, nblk), x.dtype)
        acc = _scratch("conv_acc", (out_ch, nblk), x.dtype)
        acc[...] = 0
        for off, wk in offsets:
            lead = slice(off[0] + stride * d0, off[0] + stride * d1, stride)
            sl = (slice(None), lead) + _offset_slices(tail, off[1:], stride)
            np.copyto(flat_nd, xp[sl])
            np.matmul(wk, flat, out=tmp)
            acc += tmp
        y[:, d0:d1] = acc.reshape((out_ch, d1 - d0) + tail)
    return y + b[(slice(None),) + (None,) * nd]


def _conv_backward(x: np.ndarray, w: np.ndarray, gy: np.ndarray, stride: int, padding: int,
                   want_gx: bool = True):
    xp = _pad_spatial(x, padding)
    k = w.shape[2]
    nd = x.ndim - 1
    out_spatial = gy.shape[1:]
    out_ch, in_ch = w.shape[0], w.shape[1]
    gy_c = np.ascontiguousarray(gy)
    gw = np.zeros_like(w)
    gxp = np.zeros_like(xp) if want_gx else None
    tail = out_spatial[1:]
    padded_tail = xp.shape[2:]
    offsets = [(off, np.ascontiguousarray(w[(slice(None), slice(None)) + off].T))
               for off in np.ndindex(*(k,) * nd)]
    gw_off = _scratch("conv_gw", (out_ch, in_ch), x.dtype)
    for d0, d1, nblk in _row_blocks(out_spatial, in_ch, x.dtype.itemsize):
        rows = d1 - d0
        flat = _scratch("conv_flat", (in_ch, nblk), x.dtype)
        flat_nd = flat.reshape((in_ch, rows) + tail)
        gy_blk = _scratch("conv_gy", (out_ch, nblk), x.dtype)
        np.copyto(gy_blk.reshape((out_ch, rows) + tail), gy_c[:, d0:d1])
        if want_gx:
            contrib = _scratch("conv_contrib", (in_ch, nblk), x.dtype)
            slab_rows = (rows - 1) * stride + k
            slab = _scratch("conv_slab", (in_ch, slab_rows) + padded_tail, x.dtype)
            slab[...] = 0
        for off, wkT in offsets:
            lead = slice(off[0] + stride * d0, off[0] + stride * d1, stride)
            sl = (slice(None), lead) + _offset_slices(tail, off[1:], stride)
            np.copyto(flat_nd, xp[sl])
            np.matmul(gy_blk, flat.T, out=gw_off)
            gw[(slice(None), slice(None)) + off] += gw_off
            if want_gx:
                np.matmul(wkT, gy_blk, out=contrib)
                slab_sl = (slice(None), slice(off[0], off[0] + stride * rows, stride)) \
                    + _offset_slices(tail, off[1:], stride)
                slab[slab_sl] += contrib.reshape((in_ch, rows) + tail)
        if want_gx:
            gxp[:, d0 * stride : d0 * stride + slab_rows] += slab
    gb = gy_c.reshape(out_ch, -1).sum(axis=1)
    if want_gx and padding:
        core = (slice(None),) + (slice(padding, -padding),) * nd
        gxp = gxp[core]
    return gxp, gw, gb


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, padding: int) -> np.ndarray:
    return _conv_forward(x, w, b, stride, padding)


def conv2d_backward(x: np.ndarray, w: np.ndarray, gy: np.ndarray, stride: int, padding: int,
                    want_gx: bool = True):
    return _conv_backward(x, w, gy, stride, padding, want_gx)


def conv3d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, padding: int) -> np.ndarray:
    return _conv_forward(x, w, b, stride, padding)


def conv3d_backward(x: np.ndarray, w: np.ndarray, gy: np.ndarray, stride: int, padding: int,
                    want_gx: bool = True):
    return _conv_backward(x, w, gy, stride, padding, want_gx)


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(x: np.ndarray, gy: np.ndarray) -> np.ndarray:
    return np.where(x > 0, gy, 0)


def sigmoid_forward(x: np.ndarray) -> np.ndarray:
    # split by sign for stability under large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return _flush32(out)


def sigmoid_backward(y: np.ndarray, gy: np.ndarray) -> np.ndarray:
    return gy * y * (1.0 - y)


def spatial_softmax_forward(x: np.ndarray, beta: float = 1.0) -> np.ndarray:
    c = x.shape[0]
    flat = x.reshape(c, -1) * beta if beta != 1.0 else x.reshape(c, -1)
    shifted = flat - flat.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return _flush32((e / e.sum(axis=1, keepdims=True)).reshape(x.shape))


def spatial_softmax_backward(y: np.ndarray, gy: np.ndarray, beta: float = 1.0) -> np.ndarray:
    c = y.shape[0]
    yf = y.reshape(c, -1)
    gf = gy.reshape(c, -1)
    dot = (yf * gf).sum(axis=1, keepdims=True)
    out = (yf * (gf - dot)).reshape(y.shape)
    return out * beta if beta != 1.0 else out


def bias_add_forward(x: np.ndarray, b: np.ndarray) -> np.ndarray:
    shape = (-1,) + (1,) * (x.ndim - 1)
    return x + b.reshape(shape)


def bias_add_backward(gy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gb = gy.reshape(gy.shape[0], -1).sum(axis=1)
    return gy, gb


def upsample2d_forward(x: np.ndarray, factor: int) -> np.ndarray:
    return np.repeat(np.repeat(x, factor, axis=1), factor, axis=2)


def upsample2d_backward(gy: np.ndarray, factor: int) -> np.ndarray:
    c, h, w = gy.shape[0], gy.shape[1] // factor, gy.shape[2] // factor
    return gy.reshape(c, h, factor, w, factor).sum(axis=(2, 4))
