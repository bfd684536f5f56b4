"""GKSL generator, its Liouvillian matrix, stationary states and time evolution.

Vectorization is column stacking throughout: ``vec(A X B) = (B^T kron A) vec(X)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from .core import DensityMatrix, LindbladPair, trace_distance, validate_density
from .errors import DimensionMismatch, IllConditionedKernel, InvalidDensity, StepRejected

KERNEL_TOL = 1e-9
ZERO_REAL_PART = 1e-10


def vec(x) -> np.ndarray:
    return np.asarray(x).reshape(-1, order="F")


def unvec(v, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    n = dim or math.isqrt(v.size)
    return v.reshape((n, n), order="F")


def dissipator(l, rho) -> np.ndarray:
    l = np.asarray(l)
    rho = np.asarray(rho)
    ldl = l.conj().T @ l
    return l @ rho @ l.conj().T - 0.5 * (ldl @ rho + rho @ ldl)


def apply_generator(pair: LindbladPair, rho) -> np.ndarray:
    """``-i[H, rho] + L rho L^dag - {L^dag L, rho}/2``, made exactly Hermitian."""
    rho = np.asarray(rho.matrix if isinstance(rho, DensityMatrix) else rho)
    if rho.shape != (pair.dim, pair.dim):
        raise DimensionMismatch(f"state is {rho.shape}, generator acts on dim {pair.dim}")
    h = pair.hamiltonian
    out = -1j * (h @ rho - rho @ h)
    for l in pair.channels:
        out = out + dissipator(l, rho)
    return 0.5 * (out + out.conj().T)


def liouvillian_matrix(hamiltonian, lindblads) -> np.ndarray:
    """Superoperator of ``-i[H, .] + sum_k D(L_k, .)`` in column-stacking form."""
    h = np.asarray(hamiltonian, dtype=complex)
    n = h.shape[0]
    eye = np.eye(n)
    mat = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for l in lindblads:
        l = np.asarray(l, dtype=complex)
        ldl = l.conj().T @ l
        mat = mat + np.kron(l.conj(), l) - 0.5 * (np.kron(eye, ldl) + np.kron(ldl.T, eye))
    return mat


@dataclass(frozen=True)
class Liouvillian:
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        """Hilbert-space dimension N (the matrix is N^2 x N^2)."""
        return math.isqrt(self.matrix.shape[0])

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.matrix)

    @cached_property
    def singular_values(self) -> np.ndarray:
        """Ascending singular values."""
        return np.linalg.svd(self.matrix, compute_uv=False)[::-1]

    @cached_property
    def norm(self) -> float:
        return float(self.singular_values[-1])

    @property
    def kernel_basis(self) -> list:
        return stationary_states(self).kernel_basis

    def __matmul__(self, other):
        return self.matrix @ other


def build_liouvillian(pair: LindbladPair) -> Liouvillian:
    mat = liouvillian_matrix(pair.hamiltonian, pair.channels)
    mat.setflags(write=False)
    return Liouvillian(mat)


@dataclass(frozen=True)
class StationaryStates:
    kernel_basis: list
    unique: bool
    steady_state: DensityMatrix | None
    singular_values: np.ndarray

    @property
    def kernel_dim(self) -> int:
        return len(self.kernel_basis)


def _equilibrated(mat: np.ndarray) -> np.ndarray:
    # unit row norms; left scaling by an invertible diagonal keeps the kernel
    norms = np.linalg.norm(mat, axis=1)
    norms[norms == 0.0] = 1.0
    return mat / norms[:, None]


def stationary_states(liou: Liouvillian, tol: float = KERNEL_TOL) -> StationaryStates:
    """Kernel of the Liouvillian from a singular value decomposition.

    The matrix is row-equilibrated first: a large Hamiltonian entry otherwise
    inflates ``sigma_max`` and drags genuine dissipative singular values under
    the relative threshold. Singular values below ``tol * sigma_max`` span the
    kernel. Raises :class:`IllConditionedKernel` when the next singular value is
    less than ten times the largest kernel one, or when nothing falls below
    the threshold.
    """
    n = liou.dim
    _, sig, vh = np.linalg.svd(_equilibrated(np.array(liou.matrix)))
    sig_asc = sig[::-1]
    sig_max = sig[0]
    if sig_max == 0.0:
        k = sig.size
    else:
        k = int(np.sum(sig < tol * sig_max))
    if k == 0:
        raise IllConditionedKernel(
            f"no singular value below {tol:.1e} * sigma_max (smallest ratio {sig_asc[0] / sig_max:.2e})"
        )
    if k < sig.size and sig_asc[k - 1] > 0 and sig_asc[k] / sig_asc[k - 1] < 10:
        raise IllConditionedKernel(
            f"kernel gap ratio {sig_asc[k] / sig_asc[k - 1]:.2f} < 10 at dimension {k}"
        )
    vecs = vh[sig.size - k :].conj()
    basis = [unvec(v, n) for v in vecs[::-1]]
    steady = None
    if k == 1:
        x = basis[0] / np.trace(basis[0])
        steady = validate_density(0.5 * (x + x.conj().T), tol=1e-8)
    return StationaryStates(basis, k == 1, steady, sig_asc)


def spectral_gap(liou: Liouvillian, kernel_dim: int | None = None) -> float:
    """``-max Re(lam)`` over the eigenvalues outside the kernel and periphery.

    The ``kernel_dim`` eigenvalues of smallest modulus are the kernel (taken
    from :func:`stationary_states` when not given); of the rest, those with
    ``|Re lam| < 1e-10`` are peripheral and skipped as well.
    """
    lam = liou.eigenvalues
    if kernel_dim is None:
        try:
            kernel_dim = stationary_states(liou).kernel_dim
        except IllConditionedKernel:
            kernel_dim = int(np.sum(np.abs(lam) < ZERO_REAL_PART * max(1.0, liou.norm)))
    rest = lam[np.argsort(np.abs(lam))[kernel_dim:]]
    decaying = rest.real[np.abs(rest.real) >= ZERO_REAL_PART]
    if decaying.size == 0:
        return 0.0
    return float(-np.max(decaying))


@dataclass(frozen=True)
class SimulationTrace:
    times: np.ndarray
    states: list
    distances: np.ndarray

    @property
    def final(self) -> DensityMatrix:
        return self.states[-1]


def rk4_propagator(mat, h: float) -> np.ndarray:
    """One classical Runge-Kutta step for the linear system ``v' = mat v``."""
    a = h * np.asarray(mat)
    out = np.eye(a.shape[0], dtype=complex)
    term = out
    for k in range(1, 5):
        term = term @ a / k
        out = out + term
    return out


def default_dt(liou: Liouvillian) -> float:
    return 0.01 / max(liou.norm, 1e-300)


def integrate(
    pair: LindbladPair,
    rho0,
    horizon: float,
    dt: float | None = None,
    target=None,
    n_records: int | None = 200,
) -> SimulationTrace:
    """Fixed-step RK4 integration of the master equation.

    The generator is linear and time independent, so one RK4 step is a fixed
    matrix ``P`` and ``r`` consecutive steps are ``P**r``. States are recorded
    at ``n_records`` evenly spaced times (every step when ``n_records`` is
    ``None``); at each record the state is projected back to Hermitian, unit
    trace form and checked for positivity. ``distances`` are trace distances to
    ``target`` (NaN when no target is given).
    """
    if dt is not None and dt <= 0:
        raise ValueError("dt must be positive")
    if horizon <= 0 or (dt is not None and horizon < dt):
        raise ValueError("horizon must be positive and at least dt")
    liou = build_liouvillian(pair)
    rho0 = validate_density(rho0, tol=1e-8)
    if rho0.dim != pair.dim:
        raise DimensionMismatch(f"initial state is {rho0.dim}-dimensional, pair is {pair.dim}")
    dt = default_dt(liou) if dt is None else dt
    n_steps = max(1, math.ceil(horizon / dt - 1e-9))
    if n_records is None or n_records >= n_steps:
        n_records, per_record = n_steps, 1
    else:
        per_record = math.ceil(n_steps / n_records)
        n_steps = per_record * n_records
    h = horizon / n_steps
    step = np.linalg.matrix_power(rk4_propagator(liou.matrix, h), per_record)
    target_m = None if target is None else np.asarray(target)
    n = pair.dim
    v = vec(rho0.matrix).astype(complex)
    states = [rho0]
    times = [0.0]
    for i in range(1, n_records + 1):
        v = step @ v
        x = unvec(v, n)
        x = 0.5 * (x + x.conj().T)
        x = x / np.trace(x).real
        try:
            state = validate_density(x, tol=1e-6)
        except InvalidDensity as exc:
            raise StepRejected(f"state left the density-matrix set at t={i * per_record * h:.4g}: {exc}")
        states.append(state)
        times.append(i * per_record * h)
        v = vec(state.matrix)
    if target_m is None:
        dist = np.full(len(states), np.nan)
    else:
        dist = np.array([trace_distance(s.matrix, target_m) for s in states])
    return SimulationTrace(np.array(times), states, dist)


def propagate_exact(pair: LindbladPair, rho0, times) -> list:
    """States ``expm(t L) rho0`` at each time, via the Liouvillian exponential."""
    liou = build_liouvillian(pair)
    rho0 = np.asarray(rho0.matrix if isinstance(rho0, DensityMatrix) else rho0)
    v0 = vec(rho0)
    return [unvec(expm(t * liou.matrix) @ v0, pair.dim) for t in times]
