"""Construction of a Lindblad pair (H, L) that stabilizes a diagonal target state.

For ``rho = diag(p_1, ..., p_N)`` with ``p_1 >= ... >= p_N > 0`` the Lindblad
operator is tridiagonal,

    L[n, n] = a_n,   L[n, n+1] = sqrt(p_n),   L[n+1, n] = sqrt(p_{n+1}),

and the Hamiltonian is Hermitian with bandwidth two,

    H[n, n]   = h_n
    H[n, n+1] = -(i/2) (s_n - s_{n+1}) / (s_n + s_{n+1}) * (a_n s_n + a_{n+1} s_{n+1})
    H[n, n+2] = -(i/2) p_{n+1} (s_n - s_{n+2}) / (s_n + s_{n+2})

where ``s_n = sqrt(p_n)``. The same pair is also built one dimension at a
time (:func:`synth_stepwise`) by solving the off-diagonal block condition for
``H_P`` at every step; the two routes cross-check each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BlockSplit, LindbladPair, hermitian
from .errors import DimensionMismatch, InvalidSpectrum, SingularSystem, ZeroLadderCoefficient
from .tridiag import EigenSystem, TridiagonalReal, eigensolve


@dataclass(frozen=True)
class SynthesisConfig:
    """Target spectrum plus the free diagonals of L and H.

    ``h_diag`` is ignored when ``auto_m`` is set; then ``h = (M, 0, ..., 0)``
    with ``M = 2 max(M0, 1)``.
    """

    spectrum: np.ndarray
    a_diag: np.ndarray | None = None
    h_diag: np.ndarray | None = None
    auto_m: bool = False

    def __post_init__(self):
        p = np.array(self.spectrum, dtype=float).ravel()
        check_spectrum(p)
        a = np.zeros_like(p) if self.a_diag is None else np.array(self.a_diag, dtype=float).ravel()
        if a.shape != p.shape:
            raise InvalidSpectrum(f"a_diag has {a.size} entries, spectrum has {p.size}")
        h = None
        if self.h_diag is not None:
            h = np.array(self.h_diag, dtype=float).ravel()
            if h.shape != p.shape:
                raise InvalidSpectrum(f"h_diag has {h.size} entries, spectrum has {p.size}")
        for arr in (p, a, h):
            if arr is not None:
                arr.setflags(write=False)
        object.__setattr__(self, "spectrum", p)
        object.__setattr__(self, "a_diag", a)
        object.__setattr__(self, "h_diag", h)

    @property
    def dim(self) -> int:
        return self.spectrum.size


def check_spectrum(p) -> None:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise InvalidSpectrum("spectrum must be a non-empty vector")
    if not np.all(np.isfinite(p)) or np.any(p <= 0):
        raise InvalidSpectrum(f"spectrum entries must be positive, got {p.tolist()}")
    if np.any(np.diff(p) > 0):
        raise InvalidSpectrum("spectrum must be sorted in descending order")
    if p.sum() > 1 + 1e-12:
        raise InvalidSpectrum(f"spectrum sums to {p.sum():.15g} > 1")


def synth_L(cfg: SynthesisConfig) -> np.ndarray:
    s = np.sqrt(cfg.spectrum)
    return np.diag(cfg.a_diag).astype(complex) + np.diag(s[:-1], 1) + np.diag(s[1:], -1)


def hamiltonian_bands(cfg: SynthesisConfig) -> np.ndarray:
    """Closed-form Hamiltonian with zero diagonal (``H_0``)."""
    p, a = cfg.spectrum, cfg.a_diag
    s = np.sqrt(p)
    n = p.size
    h = np.zeros((n, n), dtype=complex)
    for k in range(n - 1):
        ratio = (s[k] - s[k + 1]) / (s[k] + s[k + 1])
        h[k + 1, k] = 0.5j * ratio * (a[k] * s[k] + a[k + 1] * s[k + 1])
    for k in range(n - 2):
        ratio = (s[k] - s[k + 2]) / (s[k] + s[k + 2])
        h[k + 2, k] = 0.5j * p[k + 1] * ratio
    return hermitian(h)


def l_eigensystem(l) -> EigenSystem:
    return eigensolve(TridiagonalReal.from_matrix(l, tol=1e-14))


def compute_M0(l, h0) -> float:
    """``max_{j,k} |v_j^dag H0 v_k|`` over the eigenvectors of the tridiagonal ``l``
    scaled to first component one."""
    h0 = np.asarray(h0)
    if not np.any(h0):
        return 0.0
    v = l_eigensystem(l).eigenvectors
    return float(np.max(np.abs(v.conj().T @ h0 @ v)))


def auto_m_value(m0: float) -> float:
    return 2.0 * max(m0, 1.0)


def resolve_h(cfg: SynthesisConfig):
    """Return ``(h, M0, M)``; M0 and M are ``None`` for an explicit diagonal."""
    if not cfg.auto_m:
        h = np.zeros(cfg.dim) if cfg.h_diag is None else np.array(cfg.h_diag)
        return h, None, None
    m0 = compute_M0(synth_L(cfg), hamiltonian_bands(cfg))
    m = auto_m_value(m0)
    h = np.zeros(cfg.dim)
    h[0] = m
    return h, m0, m


def synth_H(cfg: SynthesisConfig) -> np.ndarray:
    h, _, _ = resolve_h(cfg)
    return hermitian(hamiltonian_bands(cfg) + np.diag(h))


@dataclass(frozen=True)
class SynthesisResult:
    config: SynthesisConfig
    pair: LindbladPair
    h_diag: np.ndarray
    m0: float | None = None
    m: float | None = None


def synthesize(cfg: SynthesisConfig) -> SynthesisResult:
    h, m0, m = resolve_h(cfg)
    ham = hermitian(hamiltonian_bands(cfg) + np.diag(h))
    return SynthesisResult(cfg, LindbladPair(ham, synth_L(cfg)), h, m0, m)


def hp_residual(rho_s, rho_r, l_s, l_r, l_p, l_q, h_p) -> np.ndarray:
    """Left side of the P-block invariance condition for a scalar ``rho_r``."""
    rho_s = np.asarray(rho_s)
    return -1j * (h_p * rho_r - rho_s @ h_p) + _k_term(rho_s, rho_r, l_s, l_r, l_p, l_q)


def _k_term(rho_s, rho_r, l_s, l_r, l_p, l_q):
    l_s, l_r, l_p, l_q = (np.atleast_2d(np.asarray(x)) for x in (l_s, l_r, l_p, l_q))
    x = l_s.conj().T @ l_p + l_q.conj().T @ l_r
    return (
        l_s @ rho_s @ l_q.conj().T
        + rho_r * (l_p @ l_r.conj().T)
        - 0.5 * rho_s @ x
        - 0.5 * rho_r * x
    )


def solve_HP(rho_s, rho_r, l_s, l_r, l_p, l_q, tol: float = 1e-12) -> np.ndarray:
    """Solve ``-i (H_P rho_r - rho_s H_P) + K = 0`` for the off-diagonal block.

    The system matrix ``rho_s - rho_r I`` is singular exactly when ``rho_r`` is
    an eigenvalue of ``rho_s``; the free components are then set to zero,
    provided ``K`` has no weight along them (otherwise :class:`SingularSystem`).
    """
    rho_s = np.atleast_2d(np.asarray(rho_s, dtype=complex))
    rho_r = float(np.real(np.asarray(rho_r).ravel()[0]))
    blocks = [np.atleast_2d(np.asarray(x, dtype=complex)) for x in (l_s, l_r, l_p, l_q)]
    if _is_real_diagonal(rho_s) and not any(np.any(b.imag) for b in blocks):
        return _solve_hp_real_diagonal(rho_s, rho_r, *blocks, tol=tol)
    k = _k_term(rho_s, rho_r, l_s, l_r, l_p, l_q)
    if k.shape[0] != rho_s.shape[0]:
        raise DimensionMismatch(f"K has {k.shape[0]} rows, rho_s is {rho_s.shape}")
    r, u = np.linalg.eigh(0.5 * (rho_s + rho_s.conj().T))
    rhs = u.conj().T @ (1j * k)
    diff = r - rho_r
    scale = max(np.max(np.abs(r)), abs(rho_r), 1e-300)
    free = np.abs(diff) <= tol * scale
    if np.any(np.abs(rhs[free]) > 1e-10 * max(1.0, np.max(np.abs(rhs)))):
        raise SingularSystem("rho_r is an eigenvalue of rho_s and K is not orthogonal to it")
    coef = np.zeros_like(rhs)
    coef[~free] = rhs[~free] / diff[~free, None]
    return u @ coef


def _is_real_diagonal(x) -> bool:
    return not np.any(x.imag) and not np.any(x - np.diag(np.diag(x)))


def _solve_hp_real_diagonal(rho_s, rho_r, l_s, l_r, l_p, l_q, tol):
    # K nearly cancels when rho_r is close to an entry of rho_s and the solve
    # divides by that gap, so K and the quotient are formed in extended precision
    ld = np.longdouble
    r = np.diag(rho_s).real.astype(ld)
    rr = ld(rho_r)
    k = _k_term(np.diag(r), rr, *(b.real.astype(ld) for b in (l_s, l_r, l_p, l_q)))
    diff = r - rr
    scale = max(float(np.max(np.abs(r))), rho_r, 1e-300)
    free = np.abs(diff) <= tol * scale
    kmax = float(np.max(np.abs(k), initial=0.0))
    if np.any(np.abs(k[free]) > 1e-10 * max(1.0, kmax)):
        raise SingularSystem("rho_r is an eigenvalue of rho_s and K is not orthogonal to it")
    coef = np.zeros_like(k)
    coef[~free] = k[~free] / diff[~free, None]
    return 1j * coef.astype(float)


@dataclass(frozen=True)
class SynthesisStep:
    """Data of the m -> m+1 step: ``K``, ``ell_Q`` and the rank-one projectors."""

    m: int
    K: np.ndarray
    ell_q: float
    pi_p: np.ndarray
    pi_q: np.ndarray
    h_p: np.ndarray = field(repr=False)


def synth_stepwise(cfg: SynthesisConfig, return_steps: bool = False):
    """Grow (H, L) one level at a time from the 1x1 blocks ``(h_1, a_1)``."""
    p, a = cfg.spectrum, cfg.a_diag
    h, _, _ = resolve_h(cfg)
    l_cur = np.array([[a[0]]], dtype=complex)
    h_cur = np.array([[h[0]]], dtype=complex)
    steps = []
    for m in range(1, cfg.dim):
        rho_s = np.diag(p[:m])
        rho_r = p[m]
        # projector onto the smallest-eigenvalue eigenvector of rho_s
        idx = m - 1 - int(np.argmin(p[:m][::-1]))
        e = np.zeros((m, 1))
        e[idx, 0] = 1.0
        l_p = np.sqrt(p[idx]) * e
        ell_q = float(np.sqrt(rho_r))
        l_q = ell_q * e.T
        l_r = np.array([[a[m]]], dtype=complex)
        h_p = solve_HP(rho_s, rho_r, l_cur, l_r, l_p, l_q)
        steps.append(
            SynthesisStep(m, _k_term(rho_s, rho_r, l_cur, l_r, l_p, l_q), ell_q, e @ e.T, e @ e.T, h_p)
        )
        l_cur = np.block([[l_cur, l_p], [l_q, l_r]])
        h_cur = np.block([[h_cur, h_p], [h_p.conj().T, np.array([[h[m]]])]])
    pair = LindbladPair(hermitian(h_cur), l_cur)
    return (pair, steps) if return_steps else pair


def closed_form_mismatch(cfg: SynthesisConfig) -> dict:
    """Largest entrywise gap between the closed-form and stepwise pairs, by band."""
    pair = synth_stepwise(cfg)
    dh = np.abs(synth_H(cfg) - pair.hamiltonian)
    n = cfg.dim
    band = lambda k: float(np.max(np.abs(np.diag(dh, k)), initial=0.0))  # noqa: E731
    return {
        "L": float(np.max(np.abs(synth_L(cfg) - pair.lindblad))),
        "H_diag": band(0),
        "H_band1": band(1),
        "H_band2": band(2),
        "H_outside": float(np.max(np.abs(np.triu(dh, 3)), initial=0.0)) if n > 3 else 0.0,
    }


def extend_to_support(pair: LindbladPair, dim: int, split: BlockSplit, ells, h_r=None) -> LindbladPair:
    """Embed a pair acting on the support of a rank-deficient state into ``dim``.

    In the split basis (support first) the extended Lindblad operator is block
    upper triangular: ``ells[0]`` moves the first complement state into the
    last support state and ``ells[1:]`` form a superdiagonal ladder inside the
    complement. The off-diagonal Hamiltonian block is ``-(i/2) L_S^dag L_P``,
    which keeps the off-diagonal block of the generator at zero. The result is
    returned in the original basis.
    """
    r = pair.dim
    if split.dim != dim or split.dim_s != r:
        raise DimensionMismatch(f"split is {split.dim_s}+{split.dim_r}, need {r}+{dim - r}")
    if r == dim:
        return pair
    ells = np.asarray(ells, dtype=complex).ravel()
    if ells.size != dim - r:
        raise ZeroLadderCoefficient(f"need {dim - r} ladder coefficients, got {ells.size}")
    if np.any(ells == 0):
        raise ZeroLadderCoefficient("ladder coefficients must be nonzero")
    l_full = np.zeros((dim, dim), dtype=complex)
    l_full[:r, :r] = pair.lindblad
    l_full[r - 1, r] = ells[0]
    for i in range(1, dim - r):
        l_full[r + i - 1, r + i] = ells[i]
    l_s, l_p = l_full[:r, :r], l_full[:r, r:]
    h_full = np.zeros((dim, dim), dtype=complex)
    h_full[:r, :r] = pair.hamiltonian
    h_p = -0.5j * l_s.conj().T @ l_p
    h_full[:r, r:] = h_p
    h_full[r:, :r] = h_p.conj().T
    if h_r is not None:
        h_full[r:, r:] = h_r
    return LindbladPair(hermitian(split.from_split(h_full)), split.from_split(l_full))
