"""Multi-index complex/real grids, the oversampled unitary DFT, circular
shifts, and the FPT1 on-disk tensor format.

Grids are plain ``numpy`` arrays in row-major (C) order; shapes and
multi-indices are tuples of ints.  All transforms use the unitary
convention with a ``1/sqrt(M)`` factor owned by this module, where ``M``
is the total number of measurement-grid samples.  Functions preserve the
floating dtype of their inputs so callers may run in extended precision.
"""
from __future__ import annotations

import struct

import numpy as np
import scipy.fft

__all__ = [
    "ShapeError",
    "TensorFormatError",
    "dft_oversampled",
    "dft_adjoint",
    "idft",
    "circular_shift",
    "crop_to_support",
    "pad_to_shape",
    "write_tensor",
    "read_tensor",
    "read_complex_tensor",
    "read_real_tensor",
]


class ShapeError(ValueError):
    """Incompatible grid shapes (e.g. undersampled target grid)."""


class TensorFormatError(ValueError):
    """Malformed FPT1 payload; ``offset`` is the failing byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def _total(shape) -> int:
    return int(np.prod(shape, dtype=np.int64))


def pad_to_shape(x: np.ndarray, m) -> np.ndarray:
    """Zero-pad ``x`` into the leading corner of a grid of shape ``m``."""
    m = tuple(int(v) for v in m)
    if len(m) != x.ndim or any(mi < ni for mi, ni in zip(m, x.shape)):
        raise ShapeError(f"target shape {m} does not contain source shape {x.shape}")
    out = np.zeros(m, dtype=x.dtype)
    out[tuple(slice(0, s) for s in x.shape)] = x
    return out


def crop_to_support(g: np.ndarray, support) -> np.ndarray:
    """Restrict a grid to the leading box of shape ``support``."""
    support = tuple(int(v) for v in support)
    if len(support) != g.ndim or any(si > gi for si, gi in zip(support, g.shape)):
        raise ShapeError(f"support {support} does not fit inside grid {g.shape}")
    return g[tuple(slice(0, s) for s in support)].copy()


def _real_dtype(arr: np.ndarray) -> np.dtype:
    if arr.dtype in (np.clongdouble, np.longdouble):
        return np.dtype(np.longdouble)
    return np.dtype(np.float64)


def dft_oversampled(x: np.ndarray, m) -> np.ndarray:
    """Unitary DFT of ``x`` zero-padded to shape ``m``.

    Computes ``X_k = M**-0.5 * sum_i x_i exp(-2 pi j k.(i/m))`` for all
    ``0 <= k < m`` via an FFT of the padded grid, so the cost is
    ``O(M log M)``.

    Args:
        x: complex source grid, shape ``n``.
        m: target grid shape, ``m >= n`` elementwise.

    Raises:
        ShapeError: if any axis of ``m`` is shorter than ``x``.
    """
    xp = pad_to_shape(np.asarray(x).astype(_complex_dtype(x), copy=False), m)
    scale = np.sqrt(np.asarray(_total(m), dtype=_real_dtype(xp)))
    return scipy.fft.fftn(xp) / scale


def idft(X: np.ndarray) -> np.ndarray:
    """Inverse unitary DFT on the full grid (same shape as ``X``)."""
    X = np.asarray(X)
    scale = np.sqrt(np.asarray(X.size, dtype=_real_dtype(X)))
    return scipy.fft.ifftn(X) * scale


def dft_adjoint(V: np.ndarray, support) -> np.ndarray:
    """Adjoint of :func:`dft_oversampled`: full inverse DFT then crop.

    Maps a measurement-grid vector back to the object support box; this
    is the exact adjoint of the pad-then-transform map under the unitary
    scaling.
    """
    return crop_to_support(idft(V), support)


def circular_shift(g: np.ndarray, w) -> np.ndarray:
    """Cyclic shift: ``out[(k + w) mod shape] = g[k]``."""
    w = tuple(int(v) for v in w)
    if len(w) != g.ndim:
        raise ShapeError(f"shift rank {len(w)} does not match grid rank {g.ndim}")
    return np.roll(g, w, axis=tuple(range(g.ndim)))


def _complex_dtype(x) -> np.dtype:
    dt = np.asarray(x).dtype
    if dt == np.clongdouble or dt == np.longdouble:
        return np.dtype(np.clongdouble)
    return np.dtype(np.complex128)


# ---------------------------------------------------------------------------
# FPT1 container:  "FPT1" | dtype tag u8 | rank u8 | dims u64-le * rank |
# payload f64-le (complex interleaved re, im), row-major, no padding.

_MAGIC = b"FPT1"
_TAG_REAL = 0x01
_TAG_COMPLEX = 0x02


def write_tensor(path, g: np.ndarray) -> None:
    """Write a real or complex grid to ``path`` in FPT1 format."""
    g = np.asarray(g)
    if np.iscomplexobj(g):
        tag = _TAG_COMPLEX
        payload = np.empty(g.shape + (2,), dtype="<f8")
        payload[..., 0] = g.real
        payload[..., 1] = g.imag
    else:
        tag = _TAG_REAL
        payload = np.ascontiguousarray(g, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<BB", tag, g.ndim))
        fh.write(struct.pack(f"<{g.ndim}Q", *g.shape))
        fh.write(payload.tobytes())


def read_tensor(path) -> np.ndarray:
    """Read an FPT1 file; returns float64 or complex128 per its tag.

    Raises:
        TensorFormatError: bad magic, tag, rank, or truncated payload,
            with the offending byte offset.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MAGIC:
        raise TensorFormatError(f"bad magic {raw[:4]!r}, expected {_MAGIC!r}", 0)
    if len(raw) < 6:
        raise TensorFormatError("truncated header", len(raw))
    tag, rank = raw[4], raw[5]
    if tag not in (_TAG_REAL, _TAG_COMPLEX):
        raise TensorFormatError(f"unknown dtype tag 0x{tag:02x}", 4)
    if rank < 1:
        raise TensorFormatError("rank must be at least 1", 5)
    header_end = 6 + 8 * rank
    if len(raw) < header_end:
        raise TensorFormatError("truncated shape table", len(raw))
    shape = struct.unpack(f"<{rank}Q", raw[6:header_end])
    count = _total(shape) * (2 if tag == _TAG_COMPLEX else 1)
    expected = header_end + 8 * count
    if len(raw) != expected:
        raise TensorFormatError(
            f"payload length {len(raw) - header_end} bytes, expected {8 * count}",
            min(len(raw), expected),
        )
    flat = np.frombuffer(raw, dtype="<f8", offset=header_end)
    if tag == _TAG_COMPLEX:
        data = flat[0::2] + 1j * flat[1::2]
        return data.reshape(shape)
    return flat.reshape(shape).copy()


def read_complex_tensor(path) -> np.ndarray:
    g = read_tensor(path)
    if not np.iscomplexobj(g):
        raise TensorFormatError("expected complex tensor, found real dtype tag", 4)
    return g


def read_real_tensor(path) -> np.ndarray:
    g = read_tensor(path)
    if np.iscomplexobj(g):
        raise TensorFormatError("expected real tensor, found complex dtype tag", 4)
    return g
