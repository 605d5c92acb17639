"""Shared independent oracles for the test suite.

These deliberately avoid the library's FFT-based code paths: the
transform oracle is the direct double sum, measurement values come from
explicit polynomial evaluation, and derivative checks use central
finite differences.
"""
import numpy as np
import pytest


def dft_direct(x: np.ndarray, m) -> np.ndarray:
    """Direct O(N*M) evaluation of the unitary oversampled DFT."""
    m = tuple(int(v) for v in m)
    M = int(np.prod(m))
    out = np.zeros(m, dtype=complex)
    for k in np.ndindex(*m):
        acc = 0.0 + 0.0j
        for i in np.ndindex(*x.shape):
            phase = sum(ki * ii / mi for ki, ii, mi in zip(k, i, m))
            acc += x[i] * np.exp(-2j * np.pi * phase)
        out[k] = acc
    return out / np.sqrt(M)


def ztransform_at(x: np.ndarray, z) -> complex:
    """Direct evaluation of the object polynomial at a torus point."""
    acc = 0.0 + 0.0j
    for i in np.ndindex(*x.shape):
        term = x[i]
        for zi, ii in zip(z, i):
            term = term * zi**ii
        acc += term
    return acc


def rand_complex(shape, rng) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def directional_fd(f, x, u, h):
    """Central finite difference of a scalar function along direction u."""
    return (f(x + h * u) - f(x - h * u)) / (2.0 * h)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
