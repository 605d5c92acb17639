"""Winding-index estimation from intensities, and direct winding numbers
of known objects for cross-validation.

The estimator reads the support geometry of the autocorrelation
magnitudes ``c = |F^-1 y|``: for an object with a dominant entry at
``w``, the large entries of ``c`` occupy the union of the two boxes of
lags that pair the dominant entry with the rest of the support.  The
score below combines the box convolution of ``c`` (the lag mass a
candidate explains) with a correction that removes double-counted
central lags and an occupancy penalty that charges candidates for
covering lags holding only sub-dominant mass.  Intensities are invariant
under conjugate reflection, so ``w`` is only identifiable up to the
reflected index ``n - 1 - w``; exact score ties are resolved to the
lexicographically smallest index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .instance import DomainError
from .tensor import crop_to_support, dft_oversampled

__all__ = [
    "SingularPathError",
    "WindingResult",
    "winding_from_measurement",
    "winding_of_object",
    "reflected_index",
    "canonical_index",
]


class SingularPathError(ValueError):
    """Sampled spectrum vanishes on the evaluation circle."""


@dataclass(frozen=True)
class WindingResult:
    w: tuple
    score_grid: np.ndarray
    tie: bool


def reflected_index(w, support) -> tuple:
    """Conjugate-reflection twin of an index inside the support box."""
    return tuple(int(n) - 1 - int(v) for v, n in zip(w, support))


def canonical_index(w, support) -> tuple:
    """Lexicographically smaller of an index and its reflection twin."""
    w = tuple(int(v) for v in w)
    return min(w, reflected_index(w, support))


def winding_from_measurement(y: np.ndarray, support) -> WindingResult:
    """Estimate the dominant-entry index of the object behind ``y``.

    Args:
        y: strictly positive intensities, shape ``m >= 2 * support``.
        support: object box shape ``n``.

    Returns:
        WindingResult with the estimated index (argmax of the score over
        the support box, exact ties broken lexicographically smallest),
        the score grid itself, and a flag marking near-ties (within 1e-9
        relative, which includes the always-present reflection twin).
    """
    support = tuple(int(v) for v in support)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise DomainError("intensities must be strictly positive")
    if len(support) != y.ndim or any(mi < 2 * ni for mi, ni in zip(y.shape, support)):
        raise DomainError(f"need measurement shape >= 2x support, got {y.shape}")

    d = y.ndim
    n = support
    N = int(np.prod(n))
    c = np.abs(scipy.fft.ifftn(y))

    # box convolution: mass of lags in (e - box) for each candidate e
    h = np.zeros(y.shape)
    h[tuple(slice(0, s) for s in n)] = 1.0
    conv = scipy.fft.ifftn(scipy.fft.fftn(h) * scipy.fft.fftn(c)).real
    conv = crop_to_support(conv, n)

    # occupancy threshold between dominant-cross and sub-dominant lag mass
    off = c.copy()
    off[(0,) * d] = 0.0
    top = float(off.max())
    c0 = float(c[(0,) * d])
    junk = top * top / max(c0, 1e-300)
    theta = np.sqrt(max(top, 1e-300) * max(junk, 1e-300))

    # centered-overlap sums via a zero-padded prefix table on signed lags
    table = c[
        np.ix_(*[np.arange(-(s - 1), s) % mi for s, mi in zip(n, y.shape)])
    ]
    pref = table
    for ax in range(d):
        pref = np.cumsum(pref, axis=ax)
    pref = np.pad(pref, [(1, 0)] * d)

    half = [np.minimum(np.arange(s), s - 1 - np.arange(s)) for s in n]
    lo = [(s - 1) - half[ax] for ax, s in enumerate(n)]      # table coords
    hi = [(s - 1) + half[ax] for ax, s in enumerate(n)]
    overlap = np.zeros(n)
    for corner in range(2**d):
        idx, sign = [], 1.0
        for ax in range(d):
            if corner >> ax & 1:
                idx.append(hi[ax] + 1)
            else:
                idx.append(lo[ax])
                sign = -sign
        overlap += sign * pref[np.ix_(*idx)]

    union_size = 2.0 * N - _outer_prod([2 * hh + 1 for hh in half])
    score = 2.0 * conv - overlap - theta * union_size

    top_score = float(score.max())
    tol = 1e-9 * max(abs(top_score), 1e-300)
    ties = np.argwhere(score >= top_score - tol)
    w = tuple(int(v) for v in sorted(map(tuple, ties))[0])
    return WindingResult(w=w, score_grid=score, tie=len(ties) > 1)


def _outer_prod(vecs):
    out = vecs[0].astype(float)
    for v in vecs[1:]:
        out = np.multiply.outer(out, v.astype(float))
    return out


def winding_of_object(x: np.ndarray, axis: int, samples: int | None = None) -> int:
    """Winding number of the object's polynomial along one torus axis.

    Evaluates ``X(z)`` on the unit circle in the ``axis`` variable with
    all other variables fixed at 1 (i.e. the polynomial of the axis
    marginal), and accumulates the phase change over ``samples``
    equispaced points.  Defaults to 16x the critically-oversampled grid,
    ``samples = 32 * n_axis``.

    Raises:
        SingularPathError: some sample has magnitude below ``1e-10`` of
            the maximum, so the phase track is unreliable.
    """
    x = np.asarray(x)
    n_axis = x.shape[axis]
    if samples is None:
        samples = max(32 * n_axis, 64)
    other = tuple(ax for ax in range(x.ndim) if ax != axis)
    marginal = x.sum(axis=other) if other else x
    vals = scipy.fft.fft(np.concatenate([marginal, np.zeros(samples - n_axis)]))
    mags = np.abs(vals)
    if mags.min() <= 1e-10 * mags.max():
        raise SingularPathError(
            "spectrum nearly vanishes on the circle; increase samples or reject"
        )
    ratios = np.roll(vals, -1) / vals
    total = float(np.sum(np.angle(ratios)))
    # fft sampling walks the circle clockwise, so negate for the usual sign
    return int(round(-total / (2.0 * np.pi)))
