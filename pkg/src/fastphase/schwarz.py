"""Discrete index-w Schwarz transform and the cepstral initializer.

The transform recovers log-domain boundary values of the object's
spectrum from ``log y`` alone.  Because ``log y`` is real, its Fourier
coefficients ("cepstrum") mix the analytic part and its conjugate; for a
dominant-entry object the analytic coefficients decay geometrically, so
keeping the half-orthant of coefficients anchored at the winding index
(doubled, with the DC term kept once) reconstructs the analytic
logarithm up to a geometrically small aliasing error plus a
conjugate-flip correction carried by the coefficients below the anchor.
Accuracy improves geometrically with spectral resampling of ``y``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .instance import DomainError, ParameterError
from .tensor import circular_shift, crop_to_support, idft

__all__ = [
    "SchwarzConfig",
    "resample_measurement",
    "discrete_schwarz_transform",
    "schwarz_init",
    "conj_flip",
]


@dataclass(frozen=True)
class SchwarzConfig:
    """Quadrature refinement knob: per-axis resampling multiplier."""

    oversample_factor: int = 1

    def __post_init__(self):
        if self.oversample_factor < 1:
            raise ParameterError(
                f"oversample_factor must be >= 1, got {self.oversample_factor}"
            )


def resample_measurement(y: np.ndarray, factor: int) -> np.ndarray:
    """Evaluate the intensity trigonometric polynomial on a finer grid.

    The intensities are exact samples of a trigonometric polynomial with
    lag spectrum confined to the centered window, so embedding the
    (wrapped, centered) lag coefficients into a ``factor * m`` grid and
    transforming back evaluates that polynomial exactly at the finer
    roots of unity.  ``factor = 1`` returns a copy.
    """
    if factor < 1:
        raise ParameterError(f"factor must be >= 1, got {factor}")
    y = np.asarray(y, dtype=float)
    if factor == 1:
        return y.copy()
    m = y.shape
    fine = tuple(factor * s for s in m)
    coeffs = scipy.fft.ifftn(y)
    embedded = np.zeros(fine, dtype=complex)
    src = np.ix_(*[np.arange(-(s // 2), (s + 1) // 2) % s for s in m])
    dst = np.ix_(*[np.arange(-(s // 2), (s + 1) // 2) % f for s, f in zip(m, fine)])
    embedded[dst] = coeffs[src]
    return scipy.fft.fftn(embedded).real


def _half_orthant_mask(shape, w, dtype) -> np.ndarray:
    """Weight 1 at DC, 2 on the w-anchored nonnegative orthant, else 0.

    Built as the orthant box of wrapped indices ``[0, ceil(m_i/2))`` per
    axis rolled down by ``w`` (anchoring the analytic half-region at the
    winding index); even-length Nyquist bins fall outside the box and
    get weight 0, which keeps the real-part reconstruction symmetric.
    """
    mask = np.zeros(shape, dtype=dtype)
    mask[tuple(slice(0, (s + 1) // 2) for s in shape)] = 2.0
    mask = circular_shift(mask, tuple(-int(v) for v in w))
    mask[(0,) * len(shape)] = 1.0
    return mask


def discrete_schwarz_transform(
    y: np.ndarray, w, cfg: SchwarzConfig | None = None
) -> np.ndarray:
    """Log-domain boundary values reconstructed from intensities.

    Steps: optionally resample ``y`` per ``cfg``; take the cepstrum
    ``F^-1 log y``; apply the anchored half-orthant weights (1 at DC, 2
    on the kept region, 0 elsewhere); transform forward; subsample back
    to the original grid.  The exponential of the output reproduces the
    squared spectrum samples of the (anchor-shifted) object up to the
    conjugate-flip correction and an aliasing error that decays
    geometrically in the resampling factor.

    Raises:
        DomainError: if any intensity is not strictly positive.
    """
    cfg = cfg or SchwarzConfig()
    yy = np.asarray(y)
    if np.any(yy <= 0):
        raise DomainError("intensities must be strictly positive")
    factor = cfg.oversample_factor
    if factor > 1:
        yy = resample_measurement(np.asarray(yy, dtype=float), factor)
    cep = scipy.fft.ifftn(np.log(yy))
    mask = _half_orthant_mask(yy.shape, w, cep.real.dtype)
    sig = scipy.fft.fftn(mask * cep)
    if factor > 1:
        sig = sig[tuple(slice(None, None, factor) for _ in yy.shape)]
    return sig


def schwarz_init(
    y: np.ndarray, w, support, cfg: SchwarzConfig | None = None
) -> np.ndarray:
    """Direct object estimate from intensities via the Schwarz transform.

    Exponentiates half the transform (recovering spectrum samples),
    applies the inverse unitary DFT, shifts the reconstruction so its
    dominant entry sits at ``w``, crops to the support box, and fixes
    the global phase so the anchor entry is real positive.  For an
    object ``a * delta_w`` the result is exact for any ``a > 0``.
    """
    w = tuple(int(v) for v in w)
    sig = discrete_schwarz_transform(y, w, cfg)
    full = idft(np.exp(0.5 * sig))
    full = circular_shift(full, w)
    x0 = crop_to_support(full, support)
    anchor = x0[w]
    if abs(anchor) > 0:
        x0 = x0 * (abs(anchor) / anchor)
    return x0


def conj_flip(x: np.ndarray, w) -> np.ndarray:
    """Coefficients of ``x`` (anchor zeroed) reversed about ``w``, conjugated.

    ``out[(2w - k) mod shape] = conj(x[k])`` for ``k != w`` and
    ``out[w] = 0``; applying it twice restores the off-anchor entries.
    This is the correction polynomial that the Schwarz reconstruction
    superposes on the true object.
    """
    w = tuple(int(v) for v in w)
    x = np.asarray(x)
    idx = np.ix_(*[(2 * wi - np.arange(s)) % s for wi, s in zip(w, x.shape)])
    out = np.conj(x)[idx]
    out[w] = 0.0
    return out
