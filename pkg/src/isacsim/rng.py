"""Counter-based random streams for reproducible simulations.

Every stream is identified by an integer (seed, stream) pair and is generated
by a Philox counter-based bit generator, so results never depend on call
order or on how trials are scheduled across threads.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def philox_stream(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for the (seed, stream) pair; same pair, same draws, always."""
    key = np.array([int(seed) & _MASK64, int(stream) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def complex_normal(gen: np.random.Generator, shape) -> np.ndarray:
    """Draw circularly-symmetric complex Gaussian samples, unit total variance.

    Box-Muller on uniform draws: the cosine branch feeds the real component and
    the sine branch the imaginary one, each with variance 1/2.
    """
    shape = tuple(np.atleast_1d(shape).astype(int)) if not np.isscalar(shape) else (int(shape),)
    n = int(np.prod(shape)) if shape else 1
    u = gen.random((2, n))
    radius = np.sqrt(-np.log1p(-u[0]))  # 1-u in (0,1] keeps the log finite
    angle = 2.0 * np.pi * u[1]
    z = radius * np.cos(angle) + 1j * radius * np.sin(angle)
    return z.reshape(shape)


def complex_normal_seeded(shape, seed: int, stream: int = 0) -> np.ndarray:
    """One-shot complex Gaussian array on a fresh (seed, stream) stream."""
    return complex_normal(philox_stream(seed, stream), shape)
