"""Estimation rate and optimal probing waveforms for channel sensing.

The channel is known only through the covariance Q_h of its columns; the
probing block X (T transmissions by M antennas) is designed so that its
columns projected on the covariance eigenvectors are orthogonal, with powers
water-filled over the eigen-directions under the block energy budget T*P_t.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .capacity import PowerAllocation, require_psd, waterfill
from .channel import NoiseSpec

_RANK_RTOL = 1e-12


@dataclass(frozen=True)
class SensingWaveform:
    """Probing block X = U_x diag(sqrt(beta)) V_h^H plus its factors."""

    block: np.ndarray
    orthobasis: np.ndarray
    eigvecs: np.ndarray
    allocation: PowerAllocation


@dataclass(frozen=True)
class EstimationRateResult:
    bits_per_transmission: float
    allocation: Optional[PowerAllocation]


def _covariance_eigs(qh: np.ndarray):
    """Descending nonzero eigenpairs of a Hermitian PSD covariance."""
    require_psd(qh, "channel covariance")
    vals, vecs = np.linalg.eigh((np.asarray(qh, dtype=complex) + np.asarray(qh).conj().T) / 2)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    if vals.size == 0 or vals[0] <= 0:
        return np.zeros(0), vecs[:, :0]
    keep = vals > vals[0] * _RANK_RTOL
    return vals[keep], vecs[:, keep]


def estimation_rate(x: np.ndarray, qh: np.ndarray, noise: NoiseSpec, rx_count: int, t: int) -> float:
    """Sensing mutual information (N/T) log2 det(I + Q_h X^H X / sigma^2), bits/transmission."""
    x = np.asarray(x, dtype=complex)
    qh = np.asarray(qh, dtype=complex)
    if x.ndim != 2 or x.shape[0] != t:
        raise ValueError("waveform must be T x M")
    if x.shape[1] != qh.shape[0]:
        raise ValueError("waveform and covariance dimensions do not conform")
    vals, vecs = _covariance_eigs(qh)
    if vals.size == 0:
        return 0.0
    root = vecs * np.sqrt(vals)
    inner = root.conj().T @ (x.conj().T @ x) @ root  # Hermitian form of Q_h^(1/2) X^H X Q_h^(1/2)
    eig = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    return float(rx_count / t * np.sum(np.log2(1.0 + np.maximum(eig, 0.0) / noise.variance)))


def optimal_sensing_waveform(qh: np.ndarray, t: int, power_per_transmission: float, noise: NoiseSpec) -> SensingWaveform:
    """Rate-maximizing probing block under trace energy budget T*P_t.

    Eigendecomposes Q_h, water-fills T*P_t over the nonzero eigenvalues and
    places the powered eigen-directions on G orthonormal columns drawn from
    the T-point unitary DFT basis, making the output deterministic.
    """
    qh = np.asarray(qh, dtype=complex)
    vals, vecs = _covariance_eigs(qh)
    g = vals.size
    if g == 0:
        raise ValueError("channel covariance is zero; nothing to probe")
    if t < g:
        raise ValueError(f"block length T={t} cannot fit {g} orthogonal probing columns")
    alloc = waterfill(vals, t * power_per_transmission, noise)
    # first G columns of the unitary T-point DFT matrix
    grid = np.arange(t)
    u_x = np.exp(-2j * np.pi * np.outer(grid, grid[:g]) / t) / np.sqrt(t)
    block = (u_x * np.sqrt(alloc.levels)) @ vecs.conj().T
    return SensingWaveform(block=block, orthobasis=u_x, eigvecs=vecs, allocation=alloc)


def sensing_capacity(qh: np.ndarray, rx_count: int, t: int, power_per_transmission: float, noise: NoiseSpec) -> EstimationRateResult:
    """Maximum estimation rate (N/T) sum log2(1 + lam_g beta_g / sigma^2)."""
    qh = np.asarray(qh, dtype=complex)
    vals, _ = _covariance_eigs(qh)
    if vals.size == 0:
        return EstimationRateResult(bits_per_transmission=0.0, allocation=None)
    if t < vals.size:
        raise ValueError(f"block length T={t} cannot fit {vals.size} orthogonal probing columns")
    alloc = waterfill(vals, t * power_per_transmission, noise)
    bits = float(rx_count / t * np.sum(np.log2(1.0 + alloc.eigenvalues * alloc.levels / noise.variance)))
    return EstimationRateResult(bits_per_transmission=bits, allocation=alloc)
