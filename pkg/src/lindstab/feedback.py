"""Markovian feedback that stabilizes an encoded qubit inside a noiseless subspace.

The closed loop follows the Wiseman-Milburn feedback master equation

    rho' = -i[H + H_C + (F M + M^dag F)/2, rho] + D(M - iF, rho) + D(L0, rho)

with drift ``H``, noise ``L0`` and measurement ``M`` given, and the control
Hamiltonian ``H_C`` and feedback Hamiltonian ``F`` designed. The
two-dimensional subspace ``H_S`` is an eigenspace of ``L0``. The design makes
the effective jump operator ``M - iF`` block upper triangular (no leakage out
of ``H_S``), shapes its ``H_S`` block into the tridiagonal stabilizing form
for ``diag(p1, p2)``, and adds a coupling Hamiltonian on the complement so
that nothing can stay trapped there.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import BlockSplit, DensityMatrix, LindbladPair, block_view, hermitian, trace_distance, validate_density
from .dynamics import apply_generator
from .errors import DegenerateMeasurement, DimensionMismatch, InvalidSpectrum, MeasurementDecoupled
from .synthesis import SynthesisConfig, auto_m_value, compute_M0, hamiltonian_bands, solve_HP, synth_L
from .verify import Certificate, certify

ATTRACTIVITY_TOL = 1e-10
DFS_TOL = 1e-12


@dataclass(frozen=True)
class FeedbackSetup:
    """Operators of the feedback master equation and the split ``H_S (+) H_R``.

    ``feedback`` and ``control`` default to zero, describing a partial setup
    that :func:`synth_feedback` completes.
    """

    drift: np.ndarray
    noise: np.ndarray
    measurement: np.ndarray
    split: BlockSplit
    feedback: np.ndarray | None = None
    control: np.ndarray | None = None
    k_m: float | None = None

    def __post_init__(self):
        n = self.split.dim
        zeros = np.zeros((n, n))
        drift = np.asarray(self.drift, dtype=complex)
        m = np.asarray(self.measurement, dtype=complex)
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("measurement operator must be Hermitian")
        if np.max(np.abs(drift - drift.conj().T)) > 1e-12:
            raise ValueError("drift Hamiltonian must be Hermitian")
        mats = {
            "drift": hermitian(drift),
            "noise": np.asarray(self.noise, dtype=complex),
            "measurement": hermitian(m),
            "feedback": hermitian(zeros if self.feedback is None else self.feedback),
            "control": hermitian(zeros if self.control is None else self.control),
        }
        for name, x in mats.items():
            if x.shape != (n, n):
                raise DimensionMismatch(f"{name} is {x.shape}, split is {n}-dimensional")
            object.__setattr__(self, name, x)
        if self.split.dim_s != 2:
            raise DimensionMismatch("the encoded subspace must be two-dimensional")
        ls, _, lq, _ = block_view(self.noise, self.split)
        lam = np.trace(ls) / 2
        dev = max(np.max(np.abs(ls - lam * np.eye(2))), np.max(np.abs(lq), initial=0.0))
        if dev > DFS_TOL:
            raise ValueError(f"H_S is not an eigenspace of the noise operator (deviation {dev:.2e})")

    @property
    def dim(self) -> int:
        return self.split.dim

    @property
    def lambda_s(self) -> complex:
        return complex(np.trace(block_view(self.noise, self.split)[0]) / 2)

    def effective_hamiltonian(self) -> np.ndarray:
        f, m = self.feedback, self.measurement
        return self.drift + self.control + 0.5 * (f @ m + m.conj().T @ f)

    def effective_jump(self) -> np.ndarray:
        return self.measurement - 1j * self.feedback

    def closed_loop(self) -> LindbladPair:
        """The feedback master equation as a two-channel GKSL generator."""
        return LindbladPair(hermitian(self.effective_hamiltonian()), self.effective_jump(), (self.noise,))


def check_feedback_attractivity(split: BlockSplit, m) -> bool:
    """True iff the projector onto ``H_S`` fails to commute with ``M + M^dag``."""
    m = np.asarray(m)
    c = split.proj_s @ (m + m.conj().T) - (m + m.conj().T) @ split.proj_s
    return bool(np.linalg.norm(c) > ATTRACTIVITY_TOL)


def fme_generator(setup: FeedbackSetup, rho) -> np.ndarray:
    """Right-hand side of the feedback master equation at ``rho``."""
    return apply_generator(setup.closed_loop(), rho)


def _qubit_populations(target_qubit) -> np.ndarray:
    if isinstance(target_qubit, DensityMatrix):
        m = target_qubit.matrix
        if m.shape != (2, 2) or abs(m[0, 1]) > 1e-12:
            raise InvalidSpectrum("encoded target must be a diagonal 2x2 state")
        p = np.diag(m).real
    else:
        p = np.asarray(target_qubit, dtype=float).ravel()
    if p.size != 2 or np.any(p <= 0) or abs(p.sum() - 1) > 1e-10:
        raise InvalidSpectrum(f"need two positive populations summing to one, got {p.tolist()}")
    return p


def embedded_target(p, split: BlockSplit) -> DensityMatrix:
    """``diag(p1, p2)`` on ``H_S`` and zero on ``H_R``, in the original basis."""
    d = np.zeros(split.dim)
    d[:2] = p
    return validate_density(split.from_split(np.diag(d)))


def complement_hamiltonian(dim_r: int, scale: float) -> np.ndarray:
    """``scale`` times the tridiagonal matrix with diagonal 1..dim_r and unit couplings."""
    return scale * (np.diag(np.arange(1.0, dim_r + 1)) + np.diag(np.ones(dim_r - 1), 1) + np.diag(np.ones(dim_r - 1), -1))


@dataclass
class FeedbackResult:
    setup: FeedbackSetup
    target: DensityMatrix
    certificate: Certificate
    k_m: float
    f3: complex
    h_r_scale: float
    attempts: int
    notes: list = field(default_factory=list)


def synth_feedback(
    target_qubit,
    setup: FeedbackSetup,
    f_diag=(0.0, 0.0),
    h_r_scale: float = 1.0,
    max_retries: int = 5,
) -> FeedbackResult:
    """Design ``F`` and ``H_C`` so that ``diag(p1, p2)`` on ``H_S`` is GAS.

    With ``M3 = |M3| e^{i phi}`` the in-subspace feedback entry is
    ``F3 = -(i k_M / 2)(sqrt(p2) - sqrt(p1)) e^{i phi}`` with
    ``k_M = 2 |M3| / (sqrt(p1) + sqrt(p2))``, which makes ``M_S - i F_S`` equal
    to ``k_M`` times the tridiagonal stabilizing operator (up to the diagonal
    phase ``phi``, invisible to a diagonal target). The cross block is
    ``F_P = i M_P`` so the effective jump operator cannot move population out
    of ``H_S``. The Hamiltonian gets the in-subspace solution of the block
    condition with diagonal ``(M, 0)`` as in the auto-M synthesis, the block-P
    compensation and a coupling Hamiltonian on ``H_R``; if the certificate fails the latter is
    rescaled by 3, at most ``max_retries`` times.
    """
    p = _qubit_populations(target_qubit)
    split = setup.split
    ms, mp, _, mr = block_view(setup.measurement, split)
    l0s, l0p, _, l0r = block_view(setup.noise, split)
    m3 = ms[0, 1]
    has_cross = check_feedback_attractivity(split, setup.measurement)
    if not has_cross and not np.any(np.abs(l0p) > DFS_TOL):
        raise MeasurementDecoupled("M does not couple H_S to H_R and the noise has no H_R -> H_S part")
    if abs(m3) <= DFS_TOL:
        raise MeasurementDecoupled("M3 = 0: no handle inside H_S; see practical_stabilize")

    s1, s2 = np.sqrt(p)
    k_m = 2 * abs(m3) / (s1 + s2)
    phase = m3 / abs(m3)
    f3 = -0.5j * k_m * (s2 - s1) * phase
    f_s = np.array([[f_diag[0], f3], [np.conj(f3), f_diag[1]]], dtype=complex)
    f_p = 1j * mp
    d_r = split.dim_r
    f_split = np.block([[f_s, f_p], [f_p.conj().T, np.zeros((d_r, d_r))]])

    jump_s = ms - 1j * f_s
    jump_p = mp - 1j * f_p
    # in-subspace Hamiltonian from the one-step block condition on diag(p1, p2)
    h12 = solve_HP([[p[0]]], p[1], jump_s[:1, :1], jump_s[1:, 1:], jump_s[:1, 1:], jump_s[1:, :1])
    # free diagonal of H_S: the auto-M choice (M, 0), rescaled by k_M^2 since
    # the in-subspace problem is k_M times the standard one up to phases
    std = SynthesisConfig(p, a_diag=np.diag(jump_s).real / k_m)
    m_s = k_m**2 * auto_m_value(compute_M0(synth_L(std), hamiltonian_bands(std)))
    h_s = np.array([[m_s, h12[0, 0]], [np.conj(h12[0, 0]), 0.0]])
    # cross block cancels the P-block of both dissipators on a state supported in H_S
    h_p = -0.5j * (jump_s.conj().T @ jump_p + l0s.conj().T @ l0p)

    drift_split = split.to_split(setup.drift)
    m_split = split.to_split(setup.measurement)
    target = embedded_target(p, split)
    scale = h_r_scale
    notes = []
    for attempt in range(1, max_retries + 2):
        h_eff = np.block([[h_s, h_p], [h_p.conj().T, complement_hamiltonian(d_r, scale)]])
        h_c_prime = h_eff - drift_split
        h_c = h_c_prime - 0.5 * (f_split @ m_split + m_split.conj().T @ f_split)
        done = replace(
            setup,
            feedback=split.from_split(f_split),
            control=split.from_split(0.5 * (h_c + h_c.conj().T)),
            k_m=float(k_m),
        )
        cert = certify(target, done.closed_loop())
        if cert.gas:
            break
        notes.append(f"attempt {attempt}: H_R scale {scale:g} not certified (kernel_dim={cert.kernel_dim})")
        scale *= 3.0
    return FeedbackResult(done, target, cert, float(k_m), complex(f3), scale, attempt, notes)


@dataclass
class PracticalResult:
    target: DensityMatrix
    angle: float
    distance: float
    result: FeedbackResult


def practical_stabilize(target_qubit, setup: FeedbackSetup, epsilon: float, coupling: float = 0.1) -> PracticalResult:
    """Stabilize a state within trace distance ``epsilon`` of the encoded target.

    When ``M3 = 0`` the encoded basis is rotated by the smallest angle giving
    ``|M3'| >= coupling * |M_S|``, capped so the rotated target stays within
    ``epsilon``. Returns the target unchanged when ``M3`` is already nonzero.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    p = _qubit_populations(target_qubit)
    split = setup.split
    ms = block_view(setup.measurement, split)[0]
    if abs(ms[0, 1]) > DFS_TOL:
        res = synth_feedback(p, setup)
        return PracticalResult(res.target, 0.0, 0.0, res)
    m1, m2 = ms[0, 0].real, ms[1, 1].real
    norm = max(abs(m1), abs(m2))
    if abs(m1 - m2) <= DFS_TOL * max(norm, 1.0):
        raise DegenerateMeasurement("M_S has a degenerate spectrum; rotations cannot create coupling")
    # |M3'(theta)| = |sin(2 theta)| |m2 - m1| / 2 and the distance is |p1 - p2| sin(theta)
    theta = 0.5 * np.arcsin(min(1.0, 2 * coupling * norm / abs(m2 - m1)))
    gap = abs(p[0] - p[1])
    if gap > 0:
        theta = min(theta, np.arcsin(min(1.0, epsilon / gap)) * (1 - 1e-9))
    c, s = np.cos(theta), np.sin(theta)
    rot = np.eye(split.dim, dtype=complex)
    rot[:2, :2] = [[c, -s], [s, c]]
    rotated = replace(setup, split=BlockSplit(2, split.basis @ rot))
    res = synth_feedback(p, rotated)
    original = embedded_target(p, split)
    return PracticalResult(res.target, float(theta), trace_distance(res.target.matrix, original.matrix), res)


def demo_setup(m_in=(0.3, -0.3, 0.5), m_cross: float = 1.0) -> FeedbackSetup:
    """Four-level example: noise ``diag(0, 0, 1, 2)`` leaves states 1-2 noiseless,
    the measurement couples state 2 to state 3 and has in-subspace entries
    ``M1, M2, M3 = m_in``; the drift is zero."""
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0], m[1, 1] = m_in[0], m_in[1]
    m[0, 1] = m[1, 0] = m_in[2]
    m[1, 2] = m[2, 1] = m_cross
    return FeedbackSetup(
        drift=np.zeros((4, 4)),
        noise=np.diag([0.0, 0.0, 1.0, 2.0]),
        measurement=m,
        split=BlockSplit.standard(2, 4),
    )
