import numpy as np
import pytest

from lindstab.core import BlockSplit, LindbladPair, trace_distance
from lindstab.dynamics import apply_generator, integrate
from lindstab.errors import DegenerateMeasurement, MeasurementDecoupled
from lindstab.feedback import (
    FeedbackSetup,
    check_feedback_attractivity,
    demo_setup,
    fme_generator,
    practical_stabilize,
    synth_feedback,
)
from lindstab.synthesis import SynthesisConfig, synth_L

from oracles import gksl, kernel_dim, random_density, random_hermitian

SPLIT = BlockSplit.standard(2, 4)
NOISE = np.diag([0.0, 0.0, 1.0, 2.0])


def fme_oracle(h, hc, f, m, l0, rho):
    h_eff = h + hc + 0.5 * (f @ m + m.conj().T @ f)
    return gksl(h_eff, [m - 1j * f, l0], rho)


def test_attractivity_check():
    blockdiag = np.diag([1.0, 2.0, 3.0, 4.0])
    blockdiag[0, 1] = blockdiag[1, 0] = 0.5
    assert not check_feedback_attractivity(SPLIT, blockdiag)
    assert not check_feedback_attractivity(SPLIT, 3 * np.eye(4))
    m = np.zeros((4, 4))
    m[1, 2] = m[2, 1] = 1.0
    assert check_feedback_attractivity(SPLIT, m)


def test_setup_requires_noise_eigenspace():
    with pytest.raises(ValueError):
        FeedbackSetup(np.zeros((4, 4)), np.diag([0.0, 0.1, 1, 2]), np.zeros((4, 4)), SPLIT)
    l0 = NOISE.copy()
    l0[2, 0] = 0.3
    with pytest.raises(ValueError):
        FeedbackSetup(np.zeros((4, 4)), l0, np.zeros((4, 4)), SPLIT)
    with pytest.raises(ValueError):
        FeedbackSetup(np.zeros((4, 4)), NOISE, np.triu(np.ones((4, 4))), SPLIT)


def test_fme_switch_off_reduces_to_free_equation(gen):
    h = random_hermitian(gen, 4)
    setup = FeedbackSetup(h, NOISE, np.zeros((4, 4)), SPLIT)
    rho = random_density(gen, 4)
    assert np.allclose(fme_generator(setup, rho), apply_generator(LindbladPair(h, NOISE), rho), atol=1e-13)


def test_fme_matches_oracle(gen):
    h, m, f, hc = (random_hermitian(gen, 4) for _ in range(4))
    setup = FeedbackSetup(h, NOISE, m, SPLIT, feedback=f, control=hc)
    rho = random_density(gen, 4)
    out = fme_generator(setup, rho)
    assert np.allclose(out, fme_oracle(h, hc, f, m, NOISE, rho), atol=1e-12)
    assert abs(np.trace(out)) < 1e-12


def test_feedback_entry_example():
    # M3 chosen so that k_M = 1
    p = (0.75, 0.25)
    m3 = 0.5 * (np.sqrt(0.75) + 0.5)
    assert m3 == pytest.approx(0.6830, abs=1e-4)
    res = synth_feedback(p, demo_setup(m_in=(0.3, -0.3, m3)))
    assert res.k_m == pytest.approx(1.0, abs=1e-14)
    assert res.f3 == pytest.approx(-0.5j * (0.5 - np.sqrt(0.75)), abs=1e-14)
    assert res.f3.imag == pytest.approx(0.18301, abs=1e-5)


def test_symmetric_target_needs_no_in_subspace_feedback():
    res = synth_feedback((0.5, 0.5), demo_setup())
    assert res.f3 == 0
    assert res.certificate.gas


def test_demo_certified_and_stationary():
    res = synth_feedback((0.75, 0.25), demo_setup())
    assert res.certificate.gas is True
    assert np.max(np.abs(fme_generator(res.setup, res.target))) < 1e-10
    s = res.setup
    assert kernel_dim(s.effective_hamiltonian(), [s.effective_jump(), s.noise]) == 1


def test_effective_jump_has_stabilizing_form():
    p = (0.75, 0.25)
    res = synth_feedback(p, demo_setup())
    j = res.setup.effective_jump()
    js = j[:2, :2]
    a = np.diag(js).real / res.k_m
    expected = res.k_m * synth_L(SynthesisConfig(p, a_diag=a))
    assert np.max(np.abs(js - expected)) <= 1e-12
    # nothing flows out of the subspace
    assert np.max(np.abs(j[2:, :2])) <= 1e-12


def test_closed_loop_matches_independent_formula():
    res = synth_feedback((0.7, 0.3), demo_setup())
    s = res.setup
    rho = np.diag([0.1, 0.2, 0.3, 0.4]).astype(complex)
    ref = fme_oracle(s.drift, s.control, s.feedback, s.measurement, s.noise, rho)
    assert np.allclose(fme_generator(s, rho), ref, atol=1e-12)


def test_complement_population_flows_into_subspace():
    res = synth_feedback((0.75, 0.25), demo_setup())
    gen_ = lambda r: fme_generator(res.setup, r)  # noqa: E731
    rate = lambda r: np.trace(SPLIT.proj_s @ r).real  # noqa: E731
    for rho in (np.diag([0, 0, 1.0, 0]), np.diag([0, 0, 0.5, 0.5]), np.diag([0, 0, 0.2, 0.8])):
        assert rate(gen_(rho)) > 0
    # state 4 first feeds state 3 through the complement Hamiltonian, so the
    # leading nonzero derivative of the subspace population is the third
    rho = np.diag([0, 0, 0, 1.0]).astype(complex)
    d1 = gen_(rho)
    d2 = gen_(d1)
    assert rate(d1) == pytest.approx(0.0, abs=1e-14)
    assert rate(d2) == pytest.approx(0.0, abs=1e-14)
    assert rate(gen_(d2)) > 0


def test_dfs_invariance_without_feedback():
    setup = FeedbackSetup(np.zeros((4, 4)), NOISE, np.zeros((4, 4)), SPLIT)
    psi = np.array([0.6, 0.8j, 0, 0])
    tr = integrate(setup.closed_loop(), np.outer(psi, psi.conj()), 10.0)
    assert max(np.trace(SPLIT.proj_r @ s.matrix).real for s in tr.states) < 1e-10


def test_complex_measurement_coupling():
    m = np.array(demo_setup().measurement)
    m[0, 1], m[1, 0] = 0.4 * np.exp(0.7j), 0.4 * np.exp(-0.7j)
    setup = FeedbackSetup(np.zeros((4, 4)), NOISE, m, SPLIT)
    assert synth_feedback((0.8, 0.2), setup).certificate.gas


def test_decoupled_measurement_raises():
    m = np.diag([0.3, -0.3, 1.0, 1.0])
    with pytest.raises(MeasurementDecoupled):
        synth_feedback((0.75, 0.25), FeedbackSetup(np.zeros((4, 4)), NOISE, m, SPLIT))
    with pytest.raises(MeasurementDecoupled):
        synth_feedback((0.75, 0.25), demo_setup(m_in=(0.3, -0.3, 0.0)))


def test_practical_stabilize_unchanged_when_coupled():
    res = practical_stabilize((0.75, 0.25), demo_setup(), 0.01)
    assert res.angle == 0.0 and res.distance == 0.0


def test_practical_stabilize_rotation():
    setup = demo_setup(m_in=(1.0, -1.0, 0.0))
    res = practical_stabilize((0.75, 0.25), setup, 0.01)
    assert res.distance <= 0.01
    # rotated basis: M3' = sin(theta) cos(theta) (m2 - m1)
    m3 = np.sin(res.angle) * np.cos(res.angle) * (-2.0)
    assert abs(m3) > 0
    assert res.distance == pytest.approx(0.5 * np.sin(res.angle), rel=1e-12)
    assert res.result.certificate.gas is True
    assert trace_distance(res.target.matrix, np.diag([0.75, 0.25, 0, 0])) <= 0.01


def test_practical_stabilize_degenerate():
    with pytest.raises(DegenerateMeasurement):
        practical_stabilize((0.75, 0.25), demo_setup(m_in=(0.4, 0.4, 0.0)), 0.01)
    with pytest.raises(ValueError):
        practical_stabilize((0.75, 0.25), demo_setup(m_in=(1.0, -1.0, 0.0)), 0.0)
