import numpy as np
import pytest

from decaylab import (
    PotentialSpec,
    assemble_dilation,
    assemble_hamiltonian,
    band_projection_matrix,
    build_conjugate,
    choose_truncation_time,
    hermitian,
    integrate_drift,
    make_grid,
    spectral_decompose,
    split_commutator,
    verify_drift_commutator_bound,
    verify_generator_identity,
    verify_group_commutator,
)
from decaylab.conjugate import oscillatory_filter


@pytest.fixture(scope="module")
def critical_128():
    g = make_grid("line1d", 128, 12.0)
    pot = PotentialSpec("critical", 1.0, 1)
    hop = assemble_hamiltonian(g, pot)
    aop = assemble_dilation(g)
    sd = spectral_decompose(hop)
    dec = split_commutator(hop, aop, 2.0, 0.5, spectral=sd)
    proj = band_projection_matrix(sd, 0.05, 40.0, grid=g)
    return g, hop, aop, sd, dec, proj


def test_two_level_closed_form_entries():
    sd = spectral_decompose(hermitian(np.diag([0.0, np.pi])))
    k = np.array([[0.0, 1.0], [1.0, 0.0]])
    trace = integrate_drift(sd, k, np.eye(2), 0.0, 1.0)
    w = trace.raw_integral.mat
    assert w[0, 1] == pytest.approx(2j / np.pi, abs=1e-14)
    assert w[1, 0] == pytest.approx(-2j / np.pi, abs=1e-14)


def test_filter_diagonal_equals_truncation_time():
    lam = np.array([0.3, 1.7, 2.2])
    phi = oscillatory_filter(lam, 3.5)
    np.testing.assert_allclose(np.diag(phi), 3.5)


def test_eigenbasis_diagonal_of_drift_is_t_times_m():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(6, 6))
    m = (m + m.T) / 2
    lam = np.sort(rng.normal(size=6))
    sd_mat = hermitian(np.diag(lam))
    sd = spectral_decompose(sd_mat)
    trace = integrate_drift(sd, m, np.eye(6), 0.0, 2.5)
    w_eig = sd.to_eigenbasis(trace.raw_integral.mat)
    m_eig = sd.to_eigenbasis(m)
    np.testing.assert_allclose(np.diag(w_eig), 2.5 * np.diag(m_eig), atol=1e-12)


def test_zero_remainder_gives_zero_drift(critical_128):
    g, hop, aop, sd, dec, proj = critical_128
    zero = np.zeros((hop.dim, hop.dim))
    trace = integrate_drift(sd, zero, proj, 0.5, 8.0)
    assert np.abs(trace.raw_integral.mat).max() == 0.0
    conj = build_conjugate(aop, trace, sd, 0.5, proj=proj, remainder=zero)
    np.testing.assert_allclose(conj.modified.mat, conj.weighted_base.mat, atol=1e-15)


def test_s_zero_weighted_base_is_a(critical_128):
    g, hop, aop, sd, dec, proj = critical_128
    trace = integrate_drift(sd, dec.remainder, proj, 0.0, 4.0)
    conj = build_conjugate(aop, trace, sd, 0.0, proj=proj, remainder=dec.remainder)
    assert np.abs(conj.weighted_base.mat - aop.mat).max() <= 1e-11 * np.abs(aop.mat).max()


def test_modified_operator_hermitian(critical_128):
    g, hop, aop, sd, dec, proj = critical_128
    trace = integrate_drift(sd, dec.remainder, proj, 0.5, 16.0)
    conj = build_conjugate(aop, trace, sd, 0.5, proj=proj, remainder=dec.remainder)
    m = conj.modified.mat
    scale = np.abs(m).max()
    assert np.abs(m - m.conj().T).max() <= 1e-12 * scale


def test_quadrature_oracle_matches_closed_form():
    g = make_grid("line1d", 24, 6.0)
    pot = PotentialSpec("critical", 1.0, 1)
    hop = assemble_hamiltonian(g, pot)
    aop = assemble_dilation(g)
    sd = spectral_decompose(hop)
    dec = split_commutator(hop, aop, 2.0, 0.5, spectral=sd)
    proj = band_projection_matrix(sd, 0.05, 20.0, grid=g)
    t_final = 2.0
    exact = integrate_drift(sd, dec.remainder, proj, 0.5, t_final, method="eigenbasis")
    quad = integrate_drift(sd, dec.remainder, proj, 0.5, t_final, method="quadrature",
                           quadrature_nodes=256)
    scale = np.abs(exact.raw_integral.mat).max()
    assert np.abs(exact.raw_integral.mat - quad.raw_integral.mat).max() <= 1e-10 * scale


def test_generator_identity_machine_exact(critical_128):
    g, hop, aop, sd, dec, proj = critical_128
    trace = integrate_drift(sd, dec.remainder, proj, 0.5, 16.0)
    conj = build_conjugate(aop, trace, sd, 0.5, proj=proj, remainder=dec.remainder)
    rep = verify_generator_identity(sd, conj, 2.0, proj)
    assert rep["passed"]
    assert rep["drift_identity_residual"] <= 1e-10 * rep["weighted_remainder_norm"]
    assert rep["exact_residual"] <= 1e-10 * rep["scale"]
    # the tail norm equals the weighted remainder norm: unitary invariance
    assert rep["tail_norm"] == pytest.approx(rep["weighted_remainder_norm"], rel=1e-12)


def test_generator_identity_zero_remainder_reduces(critical_128):
    g, hop, aop, sd, dec, proj = critical_128
    zero = np.zeros((hop.dim, hop.dim))
    trace = integrate_drift(sd, zero, proj, 0.5, 16.0)
    conj = build_conjugate(aop, trace, sd, 0.5, proj=proj, remainder=zero)
    rep = verify_generator_identity(sd, conj, 2.0, proj)
    # with K = 0 both the drift and the tail vanish identically, and
    # P[H, i A_h]P = c H_h P exactly (there is no remainder to cancel)
    assert rep["tail_norm"] == 0.0
    assert rep["drift_identity_residual"] == 0.0
    h_h_norm = rep["scale"]
    # the full residual now measures P K_h^true P with the true K of the grid
    assert rep["exact_residual"] > 0


def test_degenerate_truncation_time_zero(critical_128):
    g, hop, aop, sd, dec, proj = critical_128
    trace = integrate_drift(sd, dec.remainder, proj, 0.5, 0.0)
    assert np.abs(trace.raw_integral.mat).max() == 0.0


def test_group_commutator_exact_and_t_zero(critical_128):
    g, hop, aop, sd, dec, proj = critical_128
    trace = integrate_drift(sd, dec.remainder, proj, 0.5, 16.0)
    conj = build_conjugate(aop, trace, sd, 0.5, proj=proj, remainder=dec.remainder)
    r0 = verify_group_commutator(sd, conj, 2.0, proj, 0.0)
    assert r0["bare_deviation"] == pytest.approx(0.0, abs=1e-14)
    assert r0["exact_residual"] == pytest.approx(0.0, abs=1e-14)
    for t in (0.5, 1.0, 2.0):
        rep = verify_group_commutator(sd, conj, 2.0, proj, t)
        assert rep["passed"]
        assert rep["exact_residual"] <= 1e-9 * rep["scale"]
        # deviation equals the predicted correction to machine precision
        assert rep["bare_deviation"] == pytest.approx(rep["predicted_correction"], rel=1e-9)


def test_group_commutator_linearity_for_zero_remainder():
    # with K = 0 forced, P[e^{itH}, A_h]P differs from t c H_h P e^{itH}
    # only by the true-grid correction; the predicted correction scales
    # linearly in t as the identity demands
    g = make_grid("line1d", 96, 10.0)
    hop = assemble_hamiltonian(g, PotentialSpec("zero"))
    aop = assemble_dilation(g)
    sd = spectral_decompose(hop)
    proj = band_projection_matrix(sd, 0.05, 20.0, grid=g)
    zero = np.zeros((96, 96))
    trace = integrate_drift(sd, zero, proj, 0.5, 16.0)
    conj = build_conjugate(aop, trace, sd, 0.5, proj=proj, remainder=zero)
    reps = [verify_group_commutator(sd, conj, 2.0, proj, t) for t in (0.5, 1.0, 2.0)]
    assert all(r["passed"] for r in reps)


def test_drift_commutator_antisymmetry(critical_128):
    g, hop, aop, sd, dec, proj = critical_128
    trace = integrate_drift(sd, dec.remainder, proj, 0.5, 8.0)
    conj = build_conjugate(aop, trace, sd, 0.5, proj=proj, remainder=dec.remainder)
    rep = verify_drift_commutator_bound(conj)
    assert rep["antisymmetry_defect"] == 0.0
    assert rep["norm"] > 0


def test_drift_commutator_zero_for_zero_remainder(critical_128):
    g, hop, aop, sd, dec, proj = critical_128
    zero = np.zeros((hop.dim, hop.dim))
    trace = integrate_drift(sd, zero, proj, 0.5, 8.0)
    conj = build_conjugate(aop, trace, sd, 0.5, proj=proj, remainder=zero)
    assert verify_drift_commutator_bound(conj)["norm"] == 0.0


def test_cauchy_monitor_recorded(critical_128):
    g, hop, aop, sd, dec, proj = critical_128
    trace = integrate_drift(sd, dec.remainder, proj, 0.5, 16.0)
    checkpoints = [c[1] for c in trace.cauchy]
    assert checkpoints == [2.0, 4.0, 8.0, 16.0]
    assert all(c[2] >= 0 for c in trace.cauchy)


def test_truncation_policy_reports_constancy(critical_128):
    g, hop, aop, sd, dec, proj = critical_128
    policy = choose_truncation_time(sd, dec.remainder, proj, 0.5, cap=32.0)
    assert policy["tail_norm_is_time_constant"]
    assert policy["truncation_time"] <= 32.0
    assert policy["fraction"] == pytest.approx(policy["tail_norm"] / policy["weighted_norm"])


def test_build_parameter_mismatch_rejected(critical_128):
    g, hop, aop, sd, dec, proj = critical_128
    trace = integrate_drift(sd, dec.remainder, proj, 0.5, 4.0)
    with pytest.raises(ValueError, match="weight mismatch"):
        build_conjugate(aop, trace, sd, 0.0, proj=proj, remainder=dec.remainder)


def test_reports_are_deterministic(critical_128):
    g, hop, aop, sd, dec, proj = critical_128
    trace = integrate_drift(sd, dec.remainder, proj, 0.5, 8.0)
    conj = build_conjugate(aop, trace, sd, 0.5, proj=proj, remainder=dec.remainder)
    a = verify_group_commutator(sd, conj, 2.0, proj, 1.0)
    b = verify_group_commutator(sd, conj, 2.0, proj, 1.0)
    assert a == b
