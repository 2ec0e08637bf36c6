"""Joint communication/sensing transmit waveform design.

Contains the weighted mutual-information covariance optimizer and three
constrained least-squares block designs: exact radar-covariance matching,
the Pareto trade-off under a total-energy constraint, and its per-antenna
and constant-modulus variants.
"""

from dataclasses import dataclass

import numpy as np

from .capacity import comm_capacity, require_psd
from .channel import NoiseSpec
from .sensing import sensing_capacity

_LN2 = np.log(2.0)
_RANK_RTOL = 1e-12


class ConvergenceError(RuntimeError):
    """Iterative solver hit its iteration cap; `best` holds the last iterate."""

    def __init__(self, message, best=None, iterations=None, last_change=None):
        super().__init__(message)
        self.best = best
        self.iterations = iterations
        self.last_change = last_change


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not 0.0 <= rho <= 1.0:
        raise ValueError("trade-off weight must lie in [0, 1]")
    return rho


def interference_power(xc: np.ndarray, hc: np.ndarray, c: np.ndarray) -> float:
    """Residual power ||Hc Xc - C||_F^2 seen by the communication receiver."""
    xc, hc, c = (np.asarray(a, dtype=complex) for a in (xc, hc, c))
    if hc.shape[1] != xc.shape[0] or hc.shape[0] != c.shape[0] or xc.shape[1] != c.shape[1]:
        raise ValueError("channel, waveform and symbol block dimensions do not conform")
    return float(np.linalg.norm(hc @ xc - c, "fro") ** 2)


def _cov_root(qh: np.ndarray) -> np.ndarray:
    require_psd(qh, "channel covariance")
    vals, vecs = np.linalg.eigh((np.asarray(qh, dtype=complex) + np.asarray(qh).conj().T) / 2)
    return (vecs * np.sqrt(np.maximum(vals, 0.0))) @ vecs.conj().T


def _logdet_bits(m: np.ndarray) -> float:
    _, logdet = np.linalg.slogdet((m + m.conj().T) / 2)
    return float(logdet / _LN2)


def comm_mi_bits(q: np.ndarray, hc: np.ndarray, noise: NoiseSpec) -> float:
    n = hc.shape[0]
    return _logdet_bits(np.eye(n) + hc @ q @ hc.conj().T / noise.variance)


def sensing_mi_bits(q: np.ndarray, qh_root: np.ndarray, noise: NoiseSpec, t: int, n_s: int) -> float:
    m = qh_root.shape[0]
    inner = np.eye(m) + t * (qh_root @ q @ qh_root) / noise.variance
    return n_s / t * _logdet_bits(inner)


def weighted_mi_objective(
    q: np.ndarray,
    hc: np.ndarray,
    qh: np.ndarray,
    rho: float,
    noise: NoiseSpec,
    t: int,
    n_s: int,
    comm_norm: float,
    sens_norm: float,
) -> float:
    """Normalized weighted sum of communication and sensing mutual information.

    The single optimization variable is the transmit covariance Q; the sensing
    term identifies the probing Gram matrix as X^H X = T*Q so both terms are
    functions of Q.  `comm_norm` and `sens_norm` are the single-objective
    capacities used as normalizers, supplied explicitly by the caller.
    """
    rho = _check_rho(rho)
    q = np.asarray(q, dtype=complex)
    require_psd(q, "transmit covariance")
    value = 0.0
    if rho > 0:
        if comm_norm <= 0:
            raise ValueError("communication normalizer must be > 0")
        value += rho / comm_norm * comm_mi_bits(q, np.asarray(hc, dtype=complex), noise)
    if rho < 1:
        if sens_norm <= 0:
            raise ValueError("sensing normalizer must be > 0")
        value += (1.0 - rho) / sens_norm * sensing_mi_bits(q, _cov_root(qh), noise, t, n_s)
    return float(value)


def _project_psd_trace(q: np.ndarray, budget: float) -> np.ndarray:
    """Euclidean projection onto {Q Hermitian PSD, trace(Q) <= budget}."""
    vals, vecs = np.linalg.eigh((q + q.conj().T) / 2)
    clipped = np.maximum(vals, 0.0)
    if clipped.sum() > budget:
        srt = np.sort(vals)[::-1]
        css = np.cumsum(srt)
        ks = np.arange(1, srt.size + 1)
        shift = (css - budget) / ks
        k = np.max(np.nonzero(srt - shift > 0)[0]) + 1
        clipped = np.maximum(vals - shift[k - 1], 0.0)
    out = (vecs * clipped) @ vecs.conj().T
    return (out + out.conj().T) / 2


def optimize_weighted_mi(
    hc: np.ndarray,
    qh: np.ndarray,
    rho: float,
    budget: float,
    noise: NoiseSpec,
    t: int,
    n_s: int,
    max_iter: int = 10_000,
    grad_tol: float = 1e-6,
):
    """Maximize the weighted mutual-information objective over the covariance.

    Projected gradient ascent on the PSD trace-ball with backtracking line
    search.  Terminates when the projected-gradient mapping (unit probe step)
    has Frobenius norm below `grad_tol`; hitting the iteration cap first
    raises ConvergenceError with the last iterate attached.

    Returns (covariance, objective_value, normalizers) where normalizers is
    the (comm, sensing) capacity pair used for scaling.
    """
    rho = _check_rho(rho)
    hc = np.asarray(hc, dtype=complex)
    qh = np.asarray(qh, dtype=complex)
    if budget <= 0:
        raise ValueError("power budget must be > 0")
    m = hc.shape[1]
    comm_norm = comm_capacity(hc, budget, noise).bits_per_symbol if rho > 0 else 1.0
    sens_norm = (
        sensing_capacity(qh, n_s, t, budget, noise).bits_per_transmission if rho < 1 else 1.0
    )
    root = _cov_root(qh) if rho < 1 else None

    def objective(q):
        value = 0.0
        if rho > 0:
            value += rho / comm_norm * comm_mi_bits(q, hc, noise)
        if rho < 1:
            value += (1.0 - rho) / sens_norm * sensing_mi_bits(q, root, noise, t, n_s)
        return value

    def gradient(q):
        g = np.zeros((m, m), dtype=complex)
        if rho > 0:
            mid = np.linalg.inv(np.eye(hc.shape[0]) + hc @ q @ hc.conj().T / noise.variance)
            g += rho / (comm_norm * _LN2 * noise.variance) * (hc.conj().T @ mid @ hc)
        if rho < 1:
            mid = np.linalg.inv(np.eye(m) + t * (root @ q @ root) / noise.variance)
            g += (1.0 - rho) * n_s / (sens_norm * _LN2 * noise.variance) * (root @ mid @ root)
        return (g + g.conj().T) / 2

    q = budget / m * np.eye(m, dtype=complex)
    obj = objective(q)
    step = 1.0
    gap = np.inf
    for _ in range(max_iter):
        g = gradient(q)
        gap = float(np.linalg.norm(_project_psd_trace(q + g, budget) - q, "fro"))
        if gap < grad_tol:
            return q, obj, (comm_norm, sens_norm)
        s = step
        while True:
            cand = _project_psd_trace(q + s * g, budget)
            advance = float(np.real(np.vdot(g, cand - q)))
            cand_obj = objective(cand)
            if cand_obj >= obj + 1e-4 * advance and cand_obj > obj:
                break
            s *= 0.5
            if s < 1e-18:
                cand, cand_obj = q, obj
                break
        q, obj = cand, cand_obj
        step = min(s * 2.0, 1e6)
    raise ConvergenceError(
        f"projected gradient ascent did not reach mapping norm {grad_tol:.1e} "
        f"within {max_iter} iterations (last gap {gap:.3e})",
        best=q,
        iterations=max_iter,
        last_change=gap,
    )


def _psd_factor(matrix: np.ndarray, name: str) -> np.ndarray:
    """Factor F with F F^H = matrix, reduced to the numerically nonzero rank."""
    require_psd(matrix, name)
    vals, vecs = np.linalg.eigh((matrix + matrix.conj().T) / 2)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    if vals.size == 0 or vals[0] <= 0:
        raise ValueError(f"{name} is zero")
    keep = vals > vals[0] * _RANK_RTOL
    return vecs[:, keep] * np.sqrt(vals[keep])


def solve_covariance_constrained(hc: np.ndarray, c: np.ndarray, rs: np.ndarray, t: int) -> np.ndarray:
    """Minimize ||Hc X - C||_F^2 subject to X X^H = T * Rs, exactly.

    Factor T*Rs = F F^H; every feasible X is F P with P row-orthonormal, and
    the best P is the orthogonal-Procrustes alignment obtained from the SVD of
    F^H Hc^H C.  The constraint therefore holds by construction.
    """
    hc, c = np.asarray(hc, dtype=complex), np.asarray(c, dtype=complex)
    rs = np.asarray(rs, dtype=complex)
    if hc.shape[1] != rs.shape[0] or c.shape[0] != hc.shape[0] or c.shape[1] != t:
        raise ValueError("channel, symbols and radar covariance dimensions do not conform")
    if c.shape[0] > hc.shape[1]:
        raise ValueError("cannot serve more symbol streams than transmit antennas")
    f = _psd_factor(t * rs, "radar covariance")
    g = f.shape[1]
    if t < g:
        raise ValueError(f"block length T={t} cannot carry a rank-{g} covariance")
    u, _, vh = np.linalg.svd(f.conj().T @ hc.conj().T @ c, full_matrices=False)
    return f @ u @ vh


def _pareto_closed_form(hc, c, xs, rho):
    """Eigen-data of the regularized normal equations behind the Pareto design."""
    a = rho * (hc.conj().T @ hc) + (1.0 - rho) * np.eye(hc.shape[1])
    b = rho * (hc.conj().T @ c) + (1.0 - rho) * xs
    vals, vecs = np.linalg.eigh((a + a.conj().T) / 2)
    return vals, vecs, vecs.conj().T @ b


def solve_pareto_tradeoff(hc: np.ndarray, c: np.ndarray, xs: np.ndarray, rho: float, total_energy: float) -> np.ndarray:
    """Trade-off design: min rho*||Hc X - C||^2 + (1-rho)*||X - Xs||^2, ||X||_F^2 = E.

    The stationary point is X(lam) = (A + lam I)^{-1} B with
    A = rho Hc^H Hc + (1-rho) I and B = rho Hc^H C + (1-rho) Xs; the multiplier
    is located by bisection on the monotone energy curve over
    lam in (-lam_min(A), inf), with the degenerate branch filled along the
    bottom eigenvector when B has no component there.
    """
    rho = _check_rho(rho)
    hc, c, xs = (np.asarray(a, dtype=complex) for a in (hc, c, xs))
    if total_energy <= 0:
        raise ValueError("total energy must be > 0")
    if hc.shape[1] != xs.shape[0] or c.shape != (hc.shape[0], xs.shape[1]):
        raise ValueError("channel, symbols and reference waveform dimensions do not conform")
    if c.shape[0] > hc.shape[1]:
        raise ValueError("cannot serve more symbol streams than transmit antennas")
    vals, vecs, bt = _pareto_closed_form(hc, c, xs, rho)
    energies = np.sum(np.abs(bt) ** 2, axis=1)

    def block_energy(lam):
        return float(np.sum(energies / (vals + lam) ** 2))

    scale = max(1.0, float(np.max(np.abs(vals))))
    lo = -vals[0] + 1e-13 * scale
    if block_energy(lo) < total_energy:
        # bottom eigen-directions carry no load; fill the deficit along the first one
        open_modes = vals - vals[0] > 1e-12 * scale
        coef = np.zeros_like(bt)
        coef[open_modes] = bt[open_modes] / (vals[open_modes] - vals[0])[:, None]
        x = vecs @ coef
        deficit = total_energy - float(np.linalg.norm(x, "fro") ** 2)
        fill = np.zeros(xs.shape, dtype=complex)
        fill[:, 0] = np.sqrt(max(deficit, 0.0)) * vecs[:, 0]
        x = x + fill
    else:
        hi = max(1.0, -vals[0] + scale)
        while block_energy(hi) > total_energy:
            hi = 2.0 * hi + scale
        for _ in range(300):
            mid = 0.5 * (lo + hi)
            if block_energy(mid) > total_energy:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-16 * max(1.0, abs(hi)):
                break
        lam = 0.5 * (lo + hi)
        x = vecs @ (bt / (vals + lam)[:, None])
    # polish the energy equality to machine precision
    norm = float(np.linalg.norm(x, "fro"))
    if norm == 0.0:
        raise ValueError("energy target unreachable from a zero stationary solution")
    return x * (np.sqrt(total_energy) / norm)


def _pareto_objective(hc, c, xs, rho, x):
    return float(
        rho * np.linalg.norm(hc @ x - c, "fro") ** 2
        + (1.0 - rho) * np.linalg.norm(x - xs, "fro") ** 2
    )


def solve_per_antenna(
    hc: np.ndarray,
    c: np.ndarray,
    xs: np.ndarray,
    rho: float,
    per_antenna_energy: float,
    max_sweeps: int = 1000,
    tol: float = 1e-12,
) -> np.ndarray:
    """Trade-off design with every antenna row locked to the same energy.

    Starts from the row-rescaled total-energy Pareto solution and runs cyclic
    row updates; each row's conditional minimizer on its energy sphere is
    closed-form, so the objective is non-increasing at every step.
    """
    rho = _check_rho(rho)
    hc, c, xs = (np.asarray(a, dtype=complex) for a in (hc, c, xs))
    if per_antenna_energy <= 0:
        raise ValueError("per-antenna energy must be > 0")
    m, t = xs.shape
    x = solve_pareto_tradeoff(hc, c, xs, rho, m * per_antenna_energy)
    root = np.sqrt(per_antenna_energy)
    for i in range(m):
        norm = np.linalg.norm(x[i])
        if norm > 1e-300:
            x[i] *= root / norm
        elif np.linalg.norm(xs[i]) > 0:
            x[i] = root * xs[i] / np.linalg.norm(xs[i])
        else:
            x[i] = np.full(t, root / np.sqrt(t), dtype=complex)
    obj = _pareto_objective(hc, c, xs, rho, x)
    resid = c - hc @ x
    previous = np.inf
    for _ in range(max_sweeps):
        previous = obj
        for i in range(m):
            col = hc[:, i]
            partial = resid + np.outer(col, x[i])
            direction = rho * (col.conj() @ partial) + (1.0 - rho) * xs[i]
            norm = np.linalg.norm(direction)
            if norm > 1e-300:
                new_row = root * direction / norm
                resid -= np.outer(col, new_row - x[i])
                x[i] = new_row
        obj = _pareto_objective(hc, c, xs, rho, x)
        if previous - obj < tol * max(1.0, abs(previous)):
            return x
    raise ConvergenceError(
        f"per-antenna row sweeps did not settle within {max_sweeps} sweeps",
        best=x,
        iterations=max_sweeps,
        last_change=previous - obj,
    )


def _phase_descent(hc, c, xs, rho, x0, modulus, max_sweeps, tol):
    """Cyclic closed-form phase updates; the objective never increases."""
    m, t = xs.shape
    x = x0.copy()
    resid = c - hc @ x
    obj = _pareto_objective(hc, c, xs, rho, x)
    change = np.inf
    for _ in range(max_sweeps):
        previous = obj
        for i in range(m):
            col = hc[:, i]
            for j in range(t):
                partial = resid[:, j] + col * x[i, j]
                direction = rho * (col.conj() @ partial) + (1.0 - rho) * xs[i, j]
                if abs(direction) > 1e-300:
                    new_entry = modulus * direction / abs(direction)
                    resid[:, j] -= col * (new_entry - x[i, j])
                    x[i, j] = new_entry
        obj = _pareto_objective(hc, c, xs, rho, x)
        change = previous - obj
        if change < tol:
            return x, obj, True, change
    return x, obj, False, change


def solve_constant_modulus(
    hc: np.ndarray,
    c: np.ndarray,
    xs: np.ndarray,
    rho: float,
    modulus: float,
    max_sweeps: int = 10_000,
    tol: float = 1e-10,
) -> np.ndarray:
    """Trade-off design with every entry held at the given modulus.

    Cyclic coordinate descent on the entry phases: with all other entries
    fixed, the objective is linear in each unit phasor and minimized by the
    phase of a closed-form inner product, so sweeps never increase the
    objective.  The problem is non-convex, so the descent runs from a few
    deterministic starts (the reference phases, the relaxed total-energy
    solution, and the regularized normal-equations target) and keeps the
    best.  Converged when a full sweep improves by less than `tol`.
    """
    rho = _check_rho(rho)
    hc, c, xs = (np.asarray(a, dtype=complex) for a in (hc, c, xs))
    if modulus <= 0:
        raise ValueError("modulus must be > 0")
    starts = [xs]
    if rho > 0:
        starts.append(solve_pareto_tradeoff(hc, c, xs, rho, modulus**2 * xs.size))
        starts.append(rho * (hc.conj().T @ c) + (1.0 - rho) * xs)
    best = None
    for start in starts:
        outcome = _phase_descent(
            hc, c, xs, rho, modulus * np.exp(1j * np.angle(start)), modulus, max_sweeps, tol
        )
        if best is None or outcome[1] < best[1]:
            best = outcome
    x, obj, converged, change = best
    if not converged:
        raise ConvergenceError(
            f"constant-modulus phase sweeps did not settle within {max_sweeps} sweeps",
            best=x,
            iterations=max_sweeps,
            last_change=change,
        )
    return x
