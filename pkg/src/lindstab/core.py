"""Operator types, density-matrix validation and block decompositions.

Operators are plain complex ``numpy`` arrays. The few structured values
(:class:`DensityMatrix`, :class:`BlockSplit`, :class:`LindbladPair`) are frozen
dataclasses holding read-only arrays, so they can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotHermitian, NotPositive, TraceNotOne

DENSITY_TOL = 1e-10


def _frozen(x: np.ndarray) -> np.ndarray:
    x = np.array(x, copy=True)
    x.setflags(write=False)
    return x


def as_operator(x) -> np.ndarray:
    """Return ``x`` as a square, finite, complex matrix (read-only copy)."""
    m = np.asarray(x, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("operator has non-finite entries")
    return _frozen(m)


def hermitian(x) -> np.ndarray:
    """Exactly Hermitian matrix built from the lower triangle of ``x``.

    The diagonal keeps only its real part and the strict upper triangle is
    overwritten by the conjugate mirror of the lower one.
    """
    m = np.array(as_operator(x))
    lower = np.tril(m, -1)
    out = lower + lower.conj().T + np.diag(m.diagonal().real)
    return _frozen(out)


def is_hermitian(x, tol: float = 0.0) -> bool:
    x = np.asarray(x)
    return bool(np.max(np.abs(x - x.conj().T), initial=0.0) <= tol)


def commutator(a, b) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    _check_same_shape(a, b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    _check_same_shape(a, b)
    return a @ b + b @ a


def _check_same_shape(*mats):
    shapes = {np.shape(m) for m in mats}
    if len(shapes) != 1:
        raise DimensionMismatch(f"incompatible shapes {sorted(shapes)}")


@dataclass(frozen=True)
class DensityMatrix:
    """A validated quantum state with its eigenvalues sorted descending."""

    matrix: np.ndarray
    spectrum: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def validate_density(m, tol: float = DENSITY_TOL) -> DensityMatrix:
    """Check Hermiticity, unit trace and positivity of ``m`` within ``tol``.

    Raises :class:`NotHermitian`, :class:`TraceNotOne` or :class:`NotPositive`
    carrying the measured deviation. Small negative eigenvalues accepted under
    ``tol`` are reported as zero in the spectrum.
    """
    if isinstance(m, DensityMatrix):
        m = m.matrix
    x = np.array(as_operator(m))
    herm_dev = float(np.max(np.abs(x - x.conj().T)))
    if herm_dev > tol:
        raise NotHermitian(herm_dev)
    x = 0.5 * (x + x.conj().T)
    trace_dev = abs(np.trace(x).real - 1.0)
    if trace_dev > tol:
        raise TraceNotOne(trace_dev)
    evals = np.linalg.eigvalsh(x)
    if evals[0] < -tol:
        raise NotPositive(-evals[0])
    evals = np.where(evals < 0.0, 0.0, evals)
    return DensityMatrix(_frozen(x), _frozen(evals[::-1]))


def diag_state(p) -> DensityMatrix:
    return validate_density(np.diag(np.asarray(p, dtype=float)))


def trace_distance(a, b) -> float:
    """Half the trace norm of ``a - b`` (both Hermitian)."""
    d = np.asarray(a) - np.asarray(b)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


def fidelity(a, b) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(a) b sqrt(a)))**2``."""
    a = np.asarray(a)
    b = np.asarray(b)
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    inner = root @ b @ root
    mu = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(mu, 0.0, None))) ** 2)


@dataclass(frozen=True)
class BlockSplit:
    """Orthogonal split H = H_S (+) H_R given by a unitary basis, S columns first."""

    dim_s: int
    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = as_operator(self.basis)
        n = b.shape[0]
        if not 0 < self.dim_s <= n:
            raise DimensionMismatch(f"dim_s={self.dim_s} out of range for N={n}")
        err = np.max(np.abs(b.conj().T @ b - np.eye(n)))
        if err > 1e-12:
            raise ValueError(f"split basis is not unitary (deviation {err:.2e})")
        object.__setattr__(self, "basis", b)

    @classmethod
    def standard(cls, dim_s: int, dim: int) -> "BlockSplit":
        return cls(dim_s, np.eye(dim))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim_r(self) -> int:
        return self.dim - self.dim_s

    @property
    def proj_s(self) -> np.ndarray:
        bs = self.basis[:, : self.dim_s]
        return bs @ bs.conj().T

    @property
    def proj_r(self) -> np.ndarray:
        br = self.basis[:, self.dim_s :]
        return br @ br.conj().T

    def to_split(self, x) -> np.ndarray:
        """Matrix of ``x`` in the split basis, ``B^dag X B``."""
        return self.basis.conj().T @ np.asarray(x) @ self.basis

    def from_split(self, y) -> np.ndarray:
        return self.basis @ np.asarray(y) @ self.basis.conj().T


def block_view(x, split: BlockSplit):
    """The four blocks ``(X_S, X_P, X_Q, X_R)`` of ``B^dag X B``."""
    x = np.asarray(x)
    if x.shape != (split.dim, split.dim):
        raise DimensionMismatch(f"matrix shape {x.shape} does not match split dim {split.dim}")
    y = split.to_split(x)
    k = split.dim_s
    return y[:k, :k], y[:k, k:], y[k:, :k], y[k:, k:]


def assemble_blocks(xs, xp, xq, xr) -> np.ndarray:
    return np.block([[xs, xp], [xq, xr]])


@dataclass(frozen=True)
class LindbladPair:
    """Hamiltonian and Lindblad operator of a GKSL generator.

    ``extra`` holds further Lindblad operators; it is empty for every pair the
    synthesis builds and only used for closed-loop feedback generators.
    """

    hamiltonian: np.ndarray
    lindblad: np.ndarray
    extra: tuple = ()

    def __post_init__(self):
        h = as_operator(self.hamiltonian)
        if not is_hermitian(h, 1e-10):
            raise ValueError("Hamiltonian is not Hermitian")
        h = hermitian(h)
        ops = [as_operator(x) for x in (self.lindblad, *self.extra)]
        for op in ops:
            if op.shape != h.shape:
                raise DimensionMismatch(f"H is {h.shape} but a Lindblad operator is {op.shape}")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "lindblad", ops[0])
        object.__setattr__(self, "extra", tuple(ops[1:]))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def channels(self) -> tuple:
        return (self.lindblad, *self.extra)

    @classmethod
    def zero(cls, dim: int) -> "LindbladPair":
        return cls(np.zeros((dim, dim)), np.zeros((dim, dim)))
