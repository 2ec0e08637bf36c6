"""Communication mutual information, water-filling and capacity-achieving covariance."""

from dataclasses import dataclass

import numpy as np

from .channel import NoiseSpec

_RANK_RTOL = 1e-12  # eigenvalues below this fraction of the largest count as zero


@dataclass(frozen=True)
class PowerAllocation:
    """Water-filling result: per-mode powers, the common water level and the budget.

    `levels[g]` is the power on the g-th mode of `eigenvalues`, which are
    stored sorted in descending order; active modes share the absolute water
    level `water_level` and the levels sum to `budget`.
    """

    levels: np.ndarray
    water_level: float
    budget: float
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class CapacityResult:
    bits_per_symbol: float
    covariance: np.ndarray
    allocation: PowerAllocation


def require_psd(q: np.ndarray, name: str = "matrix", tol: float = 1e-10) -> None:
    """Raise ValueError unless q is Hermitian positive semidefinite."""
    q = np.asarray(q)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError(f"{name} must be square")
    scale = max(1.0, float(np.max(np.abs(q))) if q.size else 1.0)
    if np.max(np.abs(q - q.conj().T)) > tol * scale:
        raise ValueError(f"{name} is not Hermitian")
    eigmin = float(np.min(np.linalg.eigvalsh((q + q.conj().T) / 2)))
    if eigmin < -tol * scale:
        raise ValueError(f"{name} is not positive semidefinite (min eigenvalue {eigmin:.3e})")


def mutual_information_comm(h: np.ndarray, q: np.ndarray, noise: NoiseSpec) -> float:
    """Per-symbol mutual information log2 det(I + H Q H^H / sigma^2) in bits."""
    h = np.asarray(h, dtype=complex)
    q = np.asarray(q, dtype=complex)
    if h.shape[1] != q.shape[0]:
        raise ValueError("channel and covariance dimensions do not conform")
    require_psd(q, "transmit covariance")
    n = h.shape[0]
    gram = np.eye(n) + (h @ q @ h.conj().T) / noise.variance
    sign, logdet = np.linalg.slogdet((gram + gram.conj().T) / 2)
    return float(logdet / np.log(2.0))


def waterfill(eigenvalues, budget: float, noise: NoiseSpec) -> PowerAllocation:
    """Allocate `budget` over channel modes by water-filling.

    Solves max sum log2(1 + lam_g * beta_g / sigma^2) subject to
    sum beta_g = budget, beta_g >= 0.  The active set is found with the exact
    sorted-eigenvalue deactivation loop: beta_g = (w - sigma^2/lam_g)^+ where
    w is the absolute water level shared by all active modes.
    """
    lam = np.sort(np.asarray(eigenvalues, dtype=float))[::-1]
    if lam.size == 0:
        raise ValueError("eigenvalue list is empty")
    if np.any(lam <= 0):
        raise ValueError("eigenvalues must be strictly positive")
    if budget <= 0:
        raise ValueError("power budget must be > 0")
    floor = noise.variance / lam  # ascending since lam is descending
    w = budget + floor[0]
    for k in range(lam.size, 0, -1):
        w = (budget + floor[:k].sum()) / k
        if w - floor[k - 1] > 0:
            break
    levels = np.maximum(w - floor, 0.0)
    return PowerAllocation(levels=levels, water_level=float(w), budget=float(budget), eigenvalues=lam)


def comm_capacity(h: np.ndarray, budget: float, noise: NoiseSpec) -> CapacityResult:
    """Channel capacity in bits/symbol with the covariance that attains it.

    Decomposes the channel by SVD, water-fills the transmit power over the
    nonzero eigen-modes of H^H H and returns Q = V diag(beta) V^H together
    with the allocation.
    """
    h = np.asarray(h, dtype=complex)
    if not np.any(h):
        raise ValueError("channel matrix is zero")
    _, s, vh = np.linalg.svd(h, full_matrices=False)
    lam = s**2
    keep = lam > lam[0] * _RANK_RTOL
    lam = lam[keep]
    v = vh.conj().T[:, keep]
    alloc = waterfill(lam, budget, noise)
    cov = (v * alloc.levels) @ v.conj().T
    cov = (cov + cov.conj().T) / 2
    bits = float(np.sum(np.log2(1.0 + lam * alloc.levels / noise.variance)))
    return CapacityResult(bits_per_symbol=bits, covariance=cov, allocation=alloc)
