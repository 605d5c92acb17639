"""Problem-instance construction: dominant-entry ("Schwarz") object
generation, intensity measurement, noise injection, exponential decay
masks for the two-measurement scheme, and on-disk instance directories.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .tensor import (
    ShapeError,
    dft_oversampled,
    read_complex_tensor,
    read_real_tensor,
    write_tensor,
)

__all__ = [
    "ParameterError",
    "DomainError",
    "InfeasibleMaskError",
    "SchwarzSpec",
    "DecayMask",
    "Instance",
    "generate_schwarz_object",
    "check_schwarz",
    "measure",
    "add_gaussian_noise",
    "build_decay_mask",
    "save_instance",
    "load_instance",
]


class ParameterError(ValueError):
    """A parameter violates its documented range."""


class DomainError(ValueError):
    """Input data outside the mathematical domain of an operation."""


class InfeasibleMaskError(ValueError):
    """No decay base in (0, 1] can make the anchor dominant."""


@dataclass(frozen=True)
class SchwarzSpec:
    """Recipe for a random object whose ``w`` entry dominates the rest.

    ``dominance_ratio`` is enforced against the 1-norm of the off-anchor
    entries, which is sufficient for the anchor to dominate the off-anchor
    spectrum pointwise on the torus by at least the same factor.
    """

    support: tuple
    w: tuple
    dominance_ratio: float = 2.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(int(v) for v in self.support))
        object.__setattr__(self, "w", tuple(int(v) for v in self.w))
        if len(self.w) != len(self.support) or any(
            not 0 <= wi < ni for wi, ni in zip(self.w, self.support)
        ):
            raise ParameterError(f"anchor {self.w} outside support {self.support}")
        if self.dominance_ratio < 2.0:
            raise ParameterError(
                f"dominance_ratio must be >= 2, got {self.dominance_ratio}"
            )


@dataclass(frozen=True)
class DecayMask:
    """Diagonal operator ``values[k] = base ** |k - anchor|_1``."""

    base: float
    anchor: tuple
    values: np.ndarray


@dataclass
class Instance:
    """A phase-retrieval problem: intensities ``y`` plus metadata."""

    y: np.ndarray
    support: tuple
    truth: Optional[np.ndarray] = None
    noise_sigma: Optional[float] = None
    meta: dict = field(default_factory=dict)


def generate_schwarz_object(spec: SchwarzSpec) -> np.ndarray:
    """Draw a random complex object with a planted dominant entry.

    Off-anchor entries are i.i.d. standard complex normal; the anchor is
    set real positive to ``dominance_ratio`` times the off-anchor 1-norm,
    which guarantees :func:`check_schwarz` holds at ``w``.  Deterministic
    given ``spec.seed``.
    """
    seed = spec.seed
    while True:
        rng = np.random.default_rng(seed)
        x = (
            rng.standard_normal(spec.support) + 1j * rng.standard_normal(spec.support)
        ) / np.sqrt(2.0)
        x[spec.w] = 0.0
        off_norm = float(np.sum(np.abs(x)))
        if off_norm > 0.0:
            break
        seed += 1  # all-zero draw is a measure-zero degenerate case
    x[spec.w] = spec.dominance_ratio * off_norm
    return x


def check_schwarz(x: np.ndarray, w, oversample: int = 8) -> bool:
    """True iff ``|x[w]| >= 2 max_z |X_off(z)|`` on a dense torus grid.

    ``X_off`` is the polynomial of ``x`` with the ``w`` entry zeroed,
    sampled at ``oversample`` times the support size per axis (at least
    8x for a trustworthy maximum).
    """
    w = tuple(int(v) for v in w)
    x_off = np.array(x, dtype=complex)
    anchor_mag = abs(x_off[w])
    x_off[w] = 0.0
    grid = tuple(max(oversample, 8) * s for s in x.shape)
    samples = dft_oversampled(x_off, grid) * np.sqrt(np.prod(grid))
    return bool(anchor_mag >= 2.0 * np.max(np.abs(samples)))


def measure(x: np.ndarray, m) -> np.ndarray:
    """Intensity measurement ``y = |F x|**2`` on the ``m`` grid.

    Requires ``m >= 2 n`` elementwise so the intensities determine the
    full autocorrelation.
    """
    m = tuple(int(v) for v in m)
    if len(m) != x.ndim or any(mi < 2 * ni for mi, ni in zip(m, x.shape)):
        raise ShapeError(f"measurement shape {m} must be >= 2x support {x.shape}")
    X = dft_oversampled(x, m)
    return (X.real**2 + X.imag**2)


def add_gaussian_noise(
    y: np.ndarray, snr_db: float, truth_norm_sq: float, seed: int
) -> np.ndarray:
    """Add i.i.d. Gaussian noise at the given SNR, then clamp positive.

    The variance follows ``SNR = 10 log10(|x|^2 / sigma^2)``; pass
    ``snr_db = inf`` for a no-noise sentinel.  Entries are floored at
    ``1e-12 * max(y)`` so downstream logarithms stay finite.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return np.array(y, dtype=float)
    if not math.isfinite(snr_db):
        raise ParameterError(f"snr_db must be finite or +inf, got {snr_db}")
    sigma2 = truth_norm_sq / 10.0 ** (snr_db / 10.0)
    rng = np.random.default_rng(seed)
    noisy = y + rng.normal(0.0, np.sqrt(sigma2), size=y.shape)
    return np.maximum(noisy, 1e-12 * float(np.max(noisy)))


def noise_sigma_sq(snr_db: float, truth_norm_sq: float) -> float:
    """Noise variance implied by an SNR in dB."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return truth_norm_sq / 10.0 ** (snr_db / 10.0)


def build_decay_mask(magnitudes: np.ndarray, w, margin: float = 2.0) -> DecayMask:
    """Largest-base exponential decay mask making ``w`` dominant.

    Finds the largest ``r`` in (0, 1] (by bisection to ~1e-15) such that
    ``magnitudes[w] >= margin * sum_{k != w} r**|k-w|_1 magnitudes[k]``,
    i.e. the masked object satisfies the 1-norm dominance bound.

    Raises:
        InfeasibleMaskError: if ``magnitudes[w]`` is zero (no base works).
        ParameterError: negative magnitudes or ``margin < 2``.
    """
    w = tuple(int(v) for v in w)
    mag = np.asarray(magnitudes, dtype=float)
    if np.any(mag < 0):
        raise ParameterError("magnitudes must be nonnegative")
    if margin < 2.0:
        raise ParameterError(f"margin must be >= 2, got {margin}")
    if mag[w] <= 0.0:
        raise InfeasibleMaskError("anchor magnitude is zero; no decay base works")
    grids = np.meshgrid(*[np.arange(s) for s in mag.shape], indexing="ij")
    dist = sum(np.abs(g - a) for g, a in zip(grids, w))

    def feasible(r: float) -> bool:
        weighted = np.sum(r**dist * mag) - mag[w]
        return bool(mag[w] >= margin * weighted)

    if feasible(1.0):
        return DecayMask(1.0, w, np.ones(mag.shape))
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    if lo <= 1e-12:
        raise InfeasibleMaskError("no feasible decay base above 1e-12")
    return DecayMask(lo, w, lo**dist)


# ---------------------------------------------------------------------------
# Instance directories: y.fpt, optional truth.fpt, meta.json.

def save_instance(directory, inst: Instance) -> None:
    os.makedirs(directory, exist_ok=True)
    write_tensor(os.path.join(directory, "y.fpt"), np.asarray(inst.y, dtype=float))
    meta = dict(inst.meta)
    meta["support"] = list(inst.support)
    meta["m"] = list(inst.y.shape)
    if inst.noise_sigma is not None:
        meta["noise_sigma"] = inst.noise_sigma
    if inst.truth is not None:
        write_tensor(os.path.join(directory, "truth.fpt"), inst.truth)
        meta["has_truth"] = True
    with open(os.path.join(directory, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_instance(directory) -> Instance:
    with open(os.path.join(directory, "meta.json"), "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    y = read_real_tensor(os.path.join(directory, "y.fpt"))
    truth = None
    truth_path = os.path.join(directory, "truth.fpt")
    if os.path.exists(truth_path):
        truth = read_complex_tensor(truth_path)
    support = tuple(int(v) for v in meta["support"])
    return Instance(
        y=y,
        support=support,
        truth=truth,
        noise_sigma=meta.get("noise_sigma"),
        meta=meta,
    )
