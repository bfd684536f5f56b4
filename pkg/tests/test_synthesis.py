import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lindstab.core import BlockSplit, LindbladPair, diag_state
from lindstab.errors import InvalidSpectrum, ZeroLadderCoefficient
from lindstab.sampling import random_config, rng
from lindstab.synthesis import (
    SynthesisConfig,
    closed_form_mismatch,
    compute_M0,
    extend_to_support,
    hamiltonian_bands,
    hp_residual,
    l_eigensystem,
    solve_HP,
    synth_H,
    synth_L,
    synth_stepwise,
    synthesize,
)

from oracles import gksl, kernel_dim


def test_synth_L_examples():
    l = synth_L(SynthesisConfig([0.75, 0.25]))
    assert np.allclose(l, [[0, np.sqrt(0.75)], [0.5, 0]])
    l = synth_L(SynthesisConfig([0.5, 0.3, 0.2], a_diag=[1, 1, 1]))
    assert np.allclose(np.diag(l), 1)
    assert np.allclose(np.diag(l, 1), np.sqrt([0.5, 0.3]))
    assert np.allclose(np.diag(l, -1), np.sqrt([0.3, 0.2]))
    l = synth_L(SynthesisConfig([0.25] * 4))
    assert np.allclose(np.diag(l, 1), 0.5) and np.allclose(np.diag(l, -1), 0.5)
    assert np.count_nonzero(np.triu(l, 2)) == 0


@pytest.mark.parametrize(
    "p",
    [[0.25, 0.75], [0.5, 0.0, 0.5], [0.7, 0.7], [], [0.5, np.nan]],
)
def test_invalid_spectra(p):
    with pytest.raises(InvalidSpectrum):
        SynthesisConfig(p)


def test_config_length_checks():
    with pytest.raises(InvalidSpectrum):
        SynthesisConfig([0.6, 0.4], a_diag=[1.0])
    with pytest.raises(InvalidSpectrum):
        SynthesisConfig([0.6, 0.4], h_diag=[1.0, 2.0, 3.0])


def test_synth_H_zero_a_only_second_band():
    h = synth_H(SynthesisConfig([0.5, 0.3, 0.15, 0.05]))
    assert np.allclose(np.diag(h, 1), 0)
    assert np.all(np.abs(np.diag(h, 2)) > 0)


def test_synth_H_uniform_is_diagonal():
    h = synth_H(SynthesisConfig([0.2] * 5, a_diag=[1, -1, 2, 0.5, 0], h_diag=[1, 2, 3, 4, 5]))
    assert np.allclose(h, np.diag([1, 2, 3, 4, 5]))


def test_synth_H_two_level_value():
    # -(i/2)(s1 - s2)/(s1 + s2) (s1 + s2) for a = (1, 1); the opposite sign
    # leaves a nonzero stationarity residual (see next test)
    h = synth_H(SynthesisConfig([0.75, 0.25], a_diag=[1, 1], h_diag=[0, 0]))
    expected = -0.5j * (np.sqrt(0.75) - 0.5)
    assert h[0, 1] == pytest.approx(expected, abs=1e-15)
    assert abs(h[0, 1]) == pytest.approx(0.18301, abs=1e-5)


def test_first_band_sign_is_forced_by_stationarity():
    p = np.array([0.75, 0.25])
    cfg = SynthesisConfig(p, a_diag=[1, 1])
    h, l = synth_H(cfg), synth_L(cfg)
    rho = np.diag(p)
    assert np.linalg.norm(gksl(h, [l], rho)) < 1e-15
    assert np.linalg.norm(gksl(h.conj(), [l], rho)) > 0.1


def test_hamiltonian_cancels_dissipator():
    for k in range(20):
        cfg = random_config(rng(31, k), 5)
        rho = np.diag(cfg.spectrum)
        h = synth_H(cfg)
        l = synth_L(cfg)
        a = 1j * (h @ rho - rho @ h)
        b = l @ rho @ l.conj().T - 0.5 * (l.conj().T @ l @ rho + rho @ l.conj().T @ l)
        assert np.max(np.abs(a - b)) <= 1e-12


def test_solve_HP_no_coupling_gives_zero():
    z = np.zeros((2, 1))
    hp = solve_HP(np.diag([0.5, 0.3]), 0.2, np.eye(2), [[1.0]], z, z.T)
    assert np.array_equal(hp, np.zeros((2, 1)))


def test_solve_HP_two_level_step_matches_closed_form():
    cfg = SynthesisConfig([0.75, 0.25])
    hp = solve_HP([[0.75]], 0.25, [[0.0]], [[0.0]], [[np.sqrt(0.75)]], [[0.5]])
    assert hp[0, 0] == pytest.approx(synth_H(cfg)[0, 1], abs=1e-15)
    assert hp[0, 0] == 0


def test_solve_HP_three_level_step_matches_closed_form():
    cfg = SynthesisConfig([0.5, 0.3, 0.2], a_diag=[1, 1, 1])
    h = synth_H(cfg)
    l = synth_L(cfg)
    rho_s = np.diag([0.5, 0.3])
    hp = solve_HP(rho_s, 0.2, l[:2, :2], l[2:, 2:], l[:2, 2:], l[2:, :2])
    assert np.allclose(hp[:, 0], h[:2, 2], atol=1e-12, rtol=0)
    res = hp_residual(rho_s, 0.2, l[:2, :2], l[2:, 2:], l[:2, 2:], l[2:, :2], hp)
    assert np.max(np.abs(res)) <= 1e-12


def test_solve_HP_complex_blocks_residual(gen):
    for _ in range(20):
        w = gen.uniform(0.1, 1, size=3)
        q, _ = np.linalg.qr(gen.normal(size=(3, 3)) + 1j * gen.normal(size=(3, 3)))
        rho_s = q @ np.diag(w) @ q.conj().T
        blocks = [gen.normal(size=s) + 1j * gen.normal(size=s) for s in ((3, 3), (1, 1), (3, 1), (1, 3))]
        hp = solve_HP(rho_s, 0.05, *blocks)
        assert np.max(np.abs(hp_residual(rho_s, 0.05, *blocks, hp))) <= 1e-12 * max(1, np.max(np.abs(hp)))


def test_stepwise_two_level_is_the_two_level_form():
    pair = synth_stepwise(SynthesisConfig([0.75, 0.25], a_diag=[0.3, -0.2]))
    assert np.allclose(pair.lindblad, [[0.3, np.sqrt(0.75)], [0.5, -0.2]])


def test_stepwise_uniform_has_diagonal_H():
    pair = synth_stepwise(SynthesisConfig([1 / 3] * 3, a_diag=[1, 2, 3]))
    assert np.allclose(pair.hamiltonian, np.zeros((3, 3)))


def test_stepwise_matches_closed_form_random():
    for k in range(50):
        cfg = random_config(rng(37, k), 4)
        mm = closed_form_mismatch(cfg)
        assert max(mm.values()) <= 1e-12, mm


def test_stepwise_steps_invariants():
    cfg = random_config(rng(41), 5)
    _, steps = synth_stepwise(cfg, return_steps=True)
    p = cfg.spectrum
    for st_ in steps:
        assert np.array_equal(st_.pi_p, st_.pi_q)
        assert st_.ell_q**2 == pytest.approx(p[st_.m])
        assert np.trace(st_.pi_p) == 1


def test_M0_properties():
    cfg = SynthesisConfig([0.75, 0.25])
    l, h0 = synth_L(cfg), hamiltonian_bands(cfg)
    assert compute_M0(l, h0) == 0.0
    cfg = SynthesisConfig([0.5, 0.3, 0.2], a_diag=[0.4, -1.0, 0.7])
    l, h0 = synth_L(cfg), hamiltonian_bands(cfg)
    m0 = compute_M0(l, h0)
    v = l_eigensystem(l).eigenvectors
    assert m0 == pytest.approx(max(abs(v[:, j] @ h0 @ v[:, k]) for j in range(3) for k in range(3)), rel=1e-14)
    assert compute_M0(l, 3.5 * h0) == pytest.approx(3.5 * m0, rel=1e-13)


def test_auto_M_separates_eigenvector_couplings():
    for k in range(20):
        cfg = random_config(rng(43, k), 4)
        res = synthesize(cfg)
        assert res.m == 2 * max(res.m0, 1)
        v = l_eigensystem(res.pair.lindblad).eigenvectors
        c = np.abs(v.T @ res.pair.hamiltonian @ v)
        assert np.min(c) >= res.m - res.m0 - 1e-9


def test_extend_identity_and_errors():
    pair = synthesize(SynthesisConfig([0.6, 0.4], auto_m=True)).pair
    split = BlockSplit.standard(2, 2)
    assert extend_to_support(pair, 2, split, []) is pair
    with pytest.raises(ZeroLadderCoefficient):
        extend_to_support(pair, 3, BlockSplit.standard(2, 3), [0.0])


def test_extend_rank_two_in_three():
    pair = synthesize(SynthesisConfig([0.6, 0.4], a_diag=[0.2, 0.1], auto_m=True)).pair
    full = extend_to_support(pair, 3, BlockSplit.standard(2, 3), [1.0])
    assert np.array_equal(full.lindblad[:2, 2], [0, 1])
    assert np.array_equal(full.lindblad[2], [0, 0, 0])
    rho = np.diag([0.6, 0.4, 0.0])
    assert np.linalg.norm(gksl(full.hamiltonian, [full.lindblad], rho)) <= 1e-12
    assert kernel_dim(full.hamiltonian, [full.lindblad]) == 1


def test_extend_pure_state_is_upper_ladder():
    pair = LindbladPair([[0.0]], [[0.0]])
    full = extend_to_support(pair, 3, BlockSplit.standard(1, 3), [1.0, 0.7], h_r=np.diag([1.0, 2.0]))
    assert np.count_nonzero(np.tril(full.lindblad)) == 0
    assert kernel_dim(full.hamiltonian, [full.lindblad]) == 1


@settings(max_examples=40, deadline=None)
@given(
    st.integers(2, 7).flatmap(
        lambda n: st.tuples(
            st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n, unique=True),
            st.lists(st.floats(-2, 2), min_size=n, max_size=n),
        )
    )
)
def test_stationarity_property(pa):
    w, a = pa
    p = np.sort(np.array(w) / sum(w))[::-1]
    cfg = SynthesisConfig(p, a_diag=a, auto_m=True)
    pair = synthesize(cfg).pair
    assert np.linalg.norm(gksl(pair.hamiltonian, [pair.lindblad], np.diag(p))) <= 1e-11
    st_pair = synth_stepwise(cfg)
    assert np.linalg.norm(gksl(st_pair.hamiltonian, [st_pair.lindblad], np.diag(p))) <= 1e-11
    assert diag_state(p).dim == len(p)
