"""Seeded random instances: spectra, synthesis configs, states, tridiagonal matrices.

Every stream is a Philox generator keyed by ``(seed, *labels)``, so trial ``k``
of a sweep draws the same numbers no matter how trials are scheduled.
"""

from __future__ import annotations

import numpy as np

from .core import DensityMatrix, validate_density
from .synthesis import SynthesisConfig
from .tridiag import TridiagonalReal


def rng(seed: int, *labels: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, labels)])))


def random_spectrum(gen: np.random.Generator, n: int) -> np.ndarray:
    """Sorted normalized exponentials, strictly descending with probability one."""
    x = gen.exponential(size=n)
    return np.sort(x / x.sum())[::-1]


def random_config(gen: np.random.Generator, n: int, a_range: float = 2.0) -> SynthesisConfig:
    p = random_spectrum(gen, n)
    a = gen.uniform(-a_range, a_range, size=n)
    return SynthesisConfig(p, a_diag=a, auto_m=True)


def random_state(gen: np.random.Generator, n: int, rank: int | None = None) -> DensityMatrix:
    """``G G^dag / tr`` for a complex Ginibre ``G`` of shape ``n x rank``."""
    k = n if rank is None else rank
    g = gen.normal(size=(n, k)) + 1j * gen.normal(size=(n, k))
    rho = g @ g.conj().T
    return validate_density(rho / np.trace(rho).real)


def random_tridiagonal(gen: np.random.Generator, n: int) -> TridiagonalReal:
    """Diagonal ~ N(0, 1), off-diagonals ~ U(0.1, 2): positive products as required."""
    return TridiagonalReal(
        gen.normal(size=n),
        gen.uniform(0.1, 2.0, size=n - 1),
        gen.uniform(0.1, 2.0, size=n - 1),
    )
