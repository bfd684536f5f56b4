"""Certification that a Lindblad pair renders a target state globally attractive.

A stationary state of a GKSL generator is globally asymptotically stable
exactly when it is the only stationary state, so the certificate rests on the
dimension of the Liouvillian kernel. Block-wise invariance residuals and the
eigenvector-based uniqueness conditions are reported alongside as diagnostics.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .core import BlockSplit, DensityMatrix, LindbladPair, anticommutator, block_view, validate_density
from .dynamics import apply_generator, build_liouvillian, spectral_gap, stationary_states
from .errors import IllConditionedKernel, LindstabError, NotBlockDiagonal
from .tridiag import TridiagonalReal, eigensolve

STATIONARITY_TOL = 1e-9
OVERLAP_TOL = 1e-8


def _invariance_blocks(pair: LindbladPair, rho_s, rho_r, split: BlockSplit):
    hs, hp, _, hr = block_view(pair.hamiltonian, split)
    cond_s = -1j * (hs @ rho_s - rho_s @ hs)
    cond_p = -1j * (hp @ rho_r - rho_s @ hp)
    cond_r = -1j * (hr @ rho_r - rho_r @ hr)
    dag = lambda x: x.conj().T  # noqa: E731
    for l in pair.channels:
        ls, lp, lq, lr = block_view(l, split)
        x = dag(ls) @ lp + dag(lq) @ lr
        cond_s = cond_s + (
            ls @ rho_s @ dag(ls)
            - 0.5 * anticommutator(dag(ls) @ ls, rho_s)
            + lp @ rho_r @ dag(lp)
            - 0.5 * anticommutator(dag(lq) @ lq, rho_s)
        )
        cond_p = cond_p + (
            ls @ rho_s @ dag(lq)
            - 0.5 * rho_s @ x
            + lp @ rho_r @ dag(lr)
            - 0.5 * x @ rho_r
        )
        cond_r = cond_r + (
            lr @ rho_r @ dag(lr)
            - 0.5 * anticommutator(dag(lr) @ lr, rho_r)
            + lq @ rho_s @ dag(lq)
            - 0.5 * anticommutator(dag(lp) @ lp, rho_r)
        )
    return cond_s, cond_p, cond_r


def block_invariance_residuals(pair: LindbladPair, rho, split: BlockSplit, tol: float = 1e-12):
    """Frobenius norms of the S, P and R blocks of the invariance conditions.

    ``rho`` must be block diagonal with respect to ``split`` (off-diagonal
    blocks below ``tol``), otherwise :class:`NotBlockDiagonal` is raised.
    """
    rho = np.asarray(rho.matrix if isinstance(rho, DensityMatrix) else rho)
    rho_s, rho_p, rho_q, rho_r = block_view(rho, split)
    off = max(np.max(np.abs(rho_p), initial=0.0), np.max(np.abs(rho_q), initial=0.0))
    if off > tol:
        raise NotBlockDiagonal(f"off-diagonal block of rho has entries up to {off:.2e}")
    blocks = _invariance_blocks(pair, rho_s, rho_r, split)
    return tuple(float(np.linalg.norm(b)) for b in blocks)


@dataclass(frozen=True)
class UniquenessDiagnostics:
    """Eigenvector tests on a tridiagonal Lindblad operator.

    Overlaps and couplings are relative, i.e. divided by the eigenvector norms
    (and by ``|H|`` for the Hamiltonian coupling). ``min_h_coupling`` is taken
    over orthogonal pairs only and is ``None`` when there are none.
    """

    min_pair_overlap: float | None
    min_h_coupling: float | None
    violated: bool
    orthogonal_pairs: list = field(default_factory=list)


def uniqueness_conditions(pair: LindbladPair, tol: float = OVERLAP_TOL) -> UniquenessDiagnostics | None:
    """Check whether every pair of L-eigenvectors breaks one of the equalities
    ``v_j^dag L v_k = v_j^dag H v_k = v_j^dag v_k = 0``.

    If so (``violated``), no second stationary state can exist. Returns
    ``None`` when L is not real tridiagonal with positive off-diagonals.
    """
    if pair.extra:
        return None
    try:
        es = eigensolve(TridiagonalReal.from_matrix(pair.lindblad, tol=1e-14))
    except (ValueError, LindstabError):
        return None
    v = es.eigenvectors.astype(complex)
    norms = np.linalg.norm(v, axis=0)
    outer = np.outer(norms, norms)
    h = pair.hamiltonian
    h_scale = max(np.linalg.norm(h, 2), np.finfo(float).tiny)
    l_scale = max(np.linalg.norm(pair.lindblad, 2), np.finfo(float).tiny)
    overlap = np.abs(v.conj().T @ v) / outer
    h_coupling = np.abs(v.conj().T @ h @ v) / outer / h_scale
    l_coupling = np.abs(v.conj().T @ pair.lindblad @ v) / outer / l_scale
    n = es.dim
    pairs_ok = True
    orth = []
    min_overlap = None
    min_h = None
    for j in range(n):
        for k in range(n):
            if j == k:
                continue
            ov = overlap[j, k]
            min_overlap = ov if min_overlap is None else min(min_overlap, ov)
            if ov < tol:
                if j < k:
                    orth.append((j, k))
                hc = h_coupling[j, k]
                min_h = hc if min_h is None else min(min_h, hc)
                if hc <= tol and l_coupling[j, k] <= tol:
                    pairs_ok = False
    return UniquenessDiagnostics(
        None if min_overlap is None else float(min_overlap),
        None if min_h is None else float(min_h),
        pairs_ok,
        orth,
    )


@dataclass
class Certificate:
    stationarity_residual: float
    block_residuals: tuple
    kernel_dim: int | None
    gas: bool | None
    min_pair_overlap: float | None
    min_H_coupling: float | None
    gap: float | None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["block_residuals"] = list(self.block_residuals)
        return d


def target_basis(target: DensityMatrix) -> np.ndarray:
    """Eigenbasis of ``target`` ordered by descending eigenvalue.

    A diagonal target keeps the standard basis (stably permuted), so that a
    degenerate spectrum does not scramble the basis the pair was built in.
    """
    m = target.matrix
    if not np.any(m - np.diag(np.diag(m))):
        order = np.argsort(-np.diag(m).real, kind="stable")
        return np.eye(m.shape[0])[:, order]
    w, u = np.linalg.eigh(m)
    return u[:, np.argsort(-w, kind="stable")]


def _phase_gauge(basis: np.ndarray, l) -> np.ndarray:
    # eigenvectors carry arbitrary phases; rephase so that the superdiagonal of
    # L in the new basis is real and nonnegative wherever it is nonzero
    y = basis.conj().T @ np.asarray(l) @ basis
    phases = np.ones(basis.shape[0], dtype=complex)
    for k in range(basis.shape[0] - 1):
        z = y[k, k + 1]
        phases[k + 1] = phases[k] * (np.conj(z) / abs(z) if abs(z) > 0 else 1.0)
    return basis * phases[None, :]


def certify(target, pair: LindbladPair, config=None) -> Certificate:
    """Assemble the GAS certificate of ``target`` under ``pair``.

    ``gas`` is true iff the stationarity residual is below 1e-9 and the
    Liouvillian kernel is one-dimensional; it is ``None`` (indeterminate) when
    the kernel is numerically ambiguous. Passing the
    :class:`~lindstab.synthesis.SynthesisConfig` the pair came from adds the
    closed-form versus stepwise comparison to the notes.
    """
    target = validate_density(target)
    notes = []
    residual = float(np.linalg.norm(apply_generator(pair, target)))

    basis = target_basis(target)
    n = target.dim
    if n > 1:
        split = BlockSplit(n - 1, basis)
        blocks = block_invariance_residuals(pair, target, split, tol=1e-10)
    else:
        blocks = (residual, 0.0, 0.0)

    liou = build_liouvillian(pair)
    kernel_dim = None
    gas = None
    gap = None
    try:
        st = stationary_states(liou)
        kernel_dim = st.kernel_dim
        gas = bool(residual < STATIONARITY_TOL and kernel_dim == 1)
        gap = spectral_gap(liou, kernel_dim)
    except IllConditionedKernel as exc:
        notes.append(f"kernel indeterminate: {exc}")

    basis = _phase_gauge(basis, pair.lindblad)
    rotated = LindbladPair(
        basis.conj().T @ pair.hamiltonian @ basis,
        basis.conj().T @ pair.lindblad @ basis,
        tuple(basis.conj().T @ l @ basis for l in pair.extra),
    )
    diag = uniqueness_conditions(rotated)
    if diag is None:
        notes.append("algebraic uniqueness test not applicable (L not single-channel tridiagonal with positive off-diagonals in the target eigenbasis); kernel-only certificate")
        min_overlap = min_h = None
    else:
        min_overlap, min_h = diag.min_pair_overlap, diag.min_h_coupling
        if diag.orthogonal_pairs:
            notes.append(f"orthogonal L-eigenvector pairs: {diag.orthogonal_pairs}")
        notes.append(f"eigenvector uniqueness conditions violated: {diag.violated}")
        if diag.violated and kernel_dim is not None and kernel_dim != 1:
            notes.append("inconsistent: algebraic route certifies uniqueness but kernel_dim != 1")
    if residual >= STATIONARITY_TOL:
        notes.append(f"target is not stationary (residual {residual:.3e})")
    if config is not None:
        from .synthesis import closed_form_mismatch

        mm = closed_form_mismatch(config)
        worst = max(mm.values())
        notes.append(
            "closed-form vs stepwise max entry gap: "
            + ", ".join(f"{k}={v:.2e}" for k, v in mm.items())
            + (" (mismatch)" if worst > 1e-12 else "")
        )
    return Certificate(residual, blocks, kernel_dim, gas, min_overlap, min_h, gap, notes)
