"""Eigen-decomposition of real tridiagonal matrices with positive off-diagonals.

A real tridiagonal ``T`` with ``T[n, n+1] = beta_n > 0`` and
``T[n+1, n] = gamma_n > 0`` is diagonally similar to the symmetric Jacobi
matrix ``S = D^-1 T D`` with off-diagonals ``sqrt(beta_n * gamma_n)``. The
leading principal minors ``f_n(lam) = det(lam - S_n)`` obey the three-term
recurrence

    f_{n+1} = (lam - alpha_{n+1}) f_n - beta_n gamma_n f_{n-1},   f_0 = 1,

so the eigenvalues are the (real, simple) zeros of ``f_N``. They are isolated
by Sturm-count bisection and polished by Newton steps on ``f_N``. Eigenvector
entries come straight from the recurrence values,
``v_jk = f_{j-1}(lam_k) / (sigma_1 ... sigma_{j-1})``, and ``w_k = D v_k``, so
every eigenvector of ``T`` has first component exactly one. Vectors whose
recurrence residual exceeds ``REFINE_TOL`` get one shifted inverse-iteration
step (strongly decaying eigenvectors amplify rounding in the forward pass).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConvergenceFailure, DimensionMismatch, NonPositiveProduct

_EPS = np.finfo(float).eps
REFINE_TOL = 1e-12


@dataclass(frozen=True)
class TridiagonalReal:
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float).ravel()
        b = np.array(self.beta, dtype=float).ravel()
        g = np.array(self.gamma, dtype=float).ravel()
        if a.size == 0 or b.size != a.size - 1 or g.size != a.size - 1:
            raise DimensionMismatch(
                f"need N diagonal and N-1 off-diagonal entries, got {a.size}, {b.size}, {g.size}"
            )
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(g))):
            raise ValueError("tridiagonal entries must be finite")
        for arr in (a, b, g):
            arr.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "gamma", g)

    @property
    def dim(self) -> int:
        return self.alpha.size

    @classmethod
    def symmetric(cls, alpha, offdiag) -> "TridiagonalReal":
        return cls(alpha, offdiag, offdiag)

    @classmethod
    def from_matrix(cls, m, tol: float = 0.0) -> "TridiagonalReal":
        """Read a tridiagonal matrix; raises ``ValueError`` if it has other bands
        or imaginary parts above ``tol``."""
        m = np.asarray(m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"expected square matrix, got {m.shape}")
        if np.max(np.abs(np.imag(m)), initial=0.0) > tol:
            raise ValueError("matrix is not real")
        m = np.real(m)
        band = np.triu(np.tril(m, 1), -1)
        if np.max(np.abs(m - band), initial=0.0) > tol:
            raise ValueError("matrix is not tridiagonal")
        return cls(np.diag(m).copy(), np.diag(m, 1).copy(), np.diag(m, -1).copy())

    def dense(self) -> np.ndarray:
        return np.diag(self.alpha) + np.diag(self.beta, 1) + np.diag(self.gamma, -1)

    @property
    def products(self) -> np.ndarray:
        return self.beta * self.gamma


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues ascending; ``eigenvectors[:, k]`` has first entry 1.

    ``charpoly_values[n, k]`` holds ``f_n(eigenvalues[k])`` for n = 0..N and
    ``residuals[k]`` the relative residual ``|T w_k - lam_k w_k| / |w_k|``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    symmetrizer: np.ndarray
    charpoly_values: np.ndarray
    residuals: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class OrthogonalityReport:
    gram: np.ndarray
    min_offdiag_abs: float
    orthogonal_pairs: list


def charpoly_sequence(t: TridiagonalReal, lam: float) -> np.ndarray:
    """Values ``f_0(lam), ..., f_N(lam)`` of the leading-minor recurrence."""
    c = t.products
    f = np.empty(t.dim + 1)
    f[0] = 1.0
    f[1] = lam - t.alpha[0]
    for n in range(1, t.dim):
        f[n + 1] = (lam - t.alpha[n]) * f[n] - c[n - 1] * f[n - 1]
    return f


def _charpoly_batch(t: TridiagonalReal, lam: np.ndarray) -> np.ndarray:
    """Rows n = 0..N of ``f_n`` at every entry of ``lam``."""
    c = t.products
    f = np.empty((t.dim + 1, lam.size))
    f[0] = 1.0
    f[1] = lam - t.alpha[0]
    for n in range(1, t.dim):
        f[n + 1] = (lam - t.alpha[n]) * f[n] - c[n - 1] * f[n - 1]
    return f


def _charpoly_and_derivative(t: TridiagonalReal, lam: np.ndarray):
    c = t.products
    f_prev, f = np.ones_like(lam), lam - t.alpha[0]
    g_prev, g = np.zeros_like(lam), np.ones_like(lam)
    for n in range(1, t.dim):
        f_next = (lam - t.alpha[n]) * f - c[n - 1] * f_prev
        g_next = f + (lam - t.alpha[n]) * g - c[n - 1] * g_prev
        f_prev, f = f, f_next
        g_prev, g = g, g_next
    return f, g


def sturm_count(t: TridiagonalReal, lam) -> np.ndarray:
    """Number of eigenvalues strictly below each ``lam`` (LDL^T pivot signs)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    c = t.products
    scale = max(np.max(np.abs(t.alpha)), np.max(np.sqrt(np.abs(c)), initial=0.0), 1e-300)
    tiny = _EPS * scale
    # a zero pivot is read as -tiny, i.e. the count is taken at lam + tiny
    q = t.alpha[0] - lam
    q = np.where(q == 0.0, -tiny, q)
    count = (q < 0).astype(int)
    for n in range(1, t.dim):
        q = t.alpha[n] - lam - c[n - 1] / q
        q = np.where(q == 0.0, -tiny, q)
        count += q < 0
    return count


def symmetrize(t: TridiagonalReal):
    """Return ``(d, S)`` with ``S = D^-1 T D`` symmetric and ``d_1 = 1``."""
    c = t.products
    if np.any(c <= 0):
        bad = np.flatnonzero(c <= 0).tolist()
        raise NonPositiveProduct(f"beta_n * gamma_n <= 0 at n = {bad}")
    log_ratio = 0.5 * (np.log(np.abs(t.gamma)) - np.log(np.abs(t.beta)))
    d = np.exp(np.concatenate(([0.0], np.cumsum(log_ratio))))
    # both-negative pairs keep their sign so that S = D^-1 T D holds exactly
    s = TridiagonalReal.symmetric(t.alpha, np.sign(t.beta) * np.sqrt(c))
    return d, s


def _gershgorin(s: TridiagonalReal):
    b = np.abs(s.beta)
    off = np.concatenate(([0.0], b)) + np.concatenate((b, [0.0]))
    return float(np.min(s.alpha - off)), float(np.max(s.alpha + off))


def _bisect_all(s: TridiagonalReal, max_iter: int = 400):
    n = s.dim
    lo_g, hi_g = _gershgorin(s)
    scale = max(abs(lo_g), abs(hi_g), 1e-300)
    width = max(hi_g - lo_g, scale * _EPS)
    lo = np.full(n, lo_g - 2 * _EPS * width)
    hi = np.full(n, hi_g + 2 * _EPS * width)
    k = np.arange(n)
    for _ in range(max_iter):
        if np.all(hi - lo <= 2 * _EPS * np.maximum(np.abs(lo), np.abs(hi)) + _EPS * scale):
            return lo, hi
        mid = 0.5 * (lo + hi)
        above = sturm_count(s, mid) > k
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    raise ConvergenceFailure(f"bisection did not converge in {max_iter} iterations")


def _newton_polish(s: TridiagonalReal, lam, lo, hi, steps: int = 4):
    lam = lam.copy()
    for _ in range(steps):
        f, g = _charpoly_and_derivative(s, lam)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(g != 0, f / g, 0.0)
        cand = lam - step
        ok = np.isfinite(cand) & (cand >= lo) & (cand <= hi)
        lam = np.where(ok, cand, lam)
    return lam


def eigenvalues(t: TridiagonalReal) -> np.ndarray:
    """Ascending eigenvalues of ``t`` (requires positive off-diagonal products)."""
    _, s = symmetrize(t)
    if t.dim == 1:
        return t.alpha.copy()
    lo, hi = _bisect_all(s)
    lam = _newton_polish(s, 0.5 * (lo + hi), lo, hi)
    return lam


def eigensolve(t: TridiagonalReal) -> EigenSystem:
    """Eigenvalues and first-entry-normalized eigenvectors of ``t``."""
    if np.any(t.beta <= 0) or np.any(t.gamma <= 0):
        raise NonPositiveProduct("eigensolve needs beta_n > 0 and gamma_n > 0")
    d, s = symmetrize(t)
    lam = eigenvalues(t)
    if np.any(np.diff(lam) <= 0):
        raise ConvergenceFailure("eigenvalues not strictly increasing")
    f = _charpoly_batch(s, lam)
    log_den = np.concatenate(([0.0], np.cumsum(np.log(s.beta))))
    v = f[:-1] * np.exp(-log_den)[:, None]
    w = d[:, None] * v
    w[0] = 1.0
    dense = t.dense()
    res = np.linalg.norm(dense @ w - w * lam, axis=0) / np.linalg.norm(w, axis=0)
    for k in np.flatnonzero(res > REFINE_TOL):
        w[:, k], res[k] = _refine(t, dense, lam[k], w[:, k], res[k])
    out = EigenSystem(lam, w, d, f, res)
    for arr in (lam, w, d, f, res):
        arr.setflags(write=False)
    return out


def _refine(t: TridiagonalReal, dense, lam, w, res):
    # the forward recurrence loses accuracy along strongly decaying
    # eigenvectors; one shifted inverse-iteration step restores it
    n = t.dim
    shift = lam + 4 * _EPS * max(abs(lam), np.max(np.abs(dense)))
    ab = np.zeros((3, n))
    ab[0, 1:] = t.beta
    ab[1] = t.alpha - shift
    ab[2, :-1] = t.gamma
    try:
        x = solve_banded((1, 1), ab, w)
    except (np.linalg.LinAlgError, ValueError):
        return w, res
    if not np.all(np.isfinite(x)) or x[0] == 0:
        return w, res
    x = x / x[0]
    x[0] = 1.0
    r = np.linalg.norm(dense @ x - lam * x) / np.linalg.norm(x)
    return (x, r) if r < res else (w, res)


def orthogonality_report(es: EigenSystem, tol: float = 1e-8) -> OrthogonalityReport:
    """Gram matrix of the eigenvectors and the pairs that are orthogonal to ``tol``
    relative to the product of their norms."""
    w = es.eigenvectors
    gram = w.conj().T @ w
    norms = np.sqrt(np.real(np.diag(gram)))
    pairs = []
    offdiag = []
    for j in range(es.dim):
        for k in range(j + 1, es.dim):
            g = abs(gram[j, k])
            offdiag.append(g)
            if g < tol * norms[j] * norms[k]:
                pairs.append((j, k))
    return OrthogonalityReport(gram, min(offdiag) if offdiag else float("inf"), pairs)
