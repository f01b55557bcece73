import numpy as np
import pytest

from decaylab import (
    PotentialSpec,
    assemble_dilation,
    assemble_hamiltonian,
    audit_assumptions,
    band_projection_matrix,
    commutator,
    continuum_remainder,
    hermitian,
    kato_factors,
    make_grid,
    remainder_fidelity,
    spectral_decompose,
    split_commutator,
)
from decaylab.commutators import potential_remainder_action


def random_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (m + m.conj().T) / 2


def test_diagonal_matrices_commute():
    x = np.diag([1.0, 2.0, 3.0])
    y = np.diag([5.0, -1.0, 0.5])
    assert np.abs(commutator(x, y)).max() == 0.0


def test_two_by_two_hand_value():
    x = np.diag([1.0, 2.0])
    y = np.array([[0.0, 1.0], [1.0, 0.0]])
    expect = np.array([[0.0, -1.0j], [1.0j, 0.0]])
    np.testing.assert_allclose(commutator(x, y), expect, atol=1e-15)


def test_antisymmetry_on_random_pairs():
    for seed in range(5):
        x = random_hermitian(12, seed)
        y = random_hermitian(12, seed + 100)
        total = commutator(x, y) + commutator(y, x)
        assert np.abs(total).max() <= 1e-12 * max(np.abs(x).max(), np.abs(y).max())


def test_commutator_of_hermitians_is_hermitian():
    x = random_hermitian(9, 1)
    y = random_hermitian(9, 2)
    c = commutator(x, y)
    assert np.abs(c - c.conj().T).max() <= 1e-13 * np.abs(c).max()


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        commutator(np.eye(3), np.eye(4))


def test_jacobi_identity_three_random():
    x, y, z = (random_hermitian(10, s) for s in (3, 4, 5))
    total = (
        commutator(commutator(x, y), z)
        + commutator(commutator(y, z), x)
        + commutator(commutator(z, x), y)
    )
    scale = max(np.abs(m).max() for m in (x, y, z)) ** 3
    assert np.abs(total).max() <= 1e-12 * scale


def _setup(n=48, length=8.0, family="critical", coupling=1.0, s=0.5):
    g = make_grid("line1d", n, length)
    pot = PotentialSpec(family, coupling, 1)
    hop = assemble_hamiltonian(g, pot)
    aop = assemble_dilation(g)
    sd = spectral_decompose(hop)
    return g, pot, hop, aop, sd


def test_split_reassembles_exactly():
    _, _, hop, aop, sd = _setup()
    dec = split_commutator(hop, aop, 2.0, 0.5, spectral=sd)
    scale = max(np.abs(dec.bracket.mat).max(), 1e-300)
    assert dec.split_residual <= 1e-14 * scale
    assert dec.relative_bound == (2.0, 0.0)


def test_split_c_zero_gives_full_bracket():
    _, _, hop, aop, sd = _setup()
    dec = split_commutator(hop, aop, 0.0, 0.0, spectral=sd)
    np.testing.assert_allclose(dec.remainder.mat, dec.bracket.mat, atol=1e-14)


def test_split_zero_conjugate_gives_minus_ch():
    g, _, hop, _, sd = _setup()
    zero = hermitian(np.zeros((hop.dim, hop.dim)), role="conjugate", grid=g)
    dec = split_commutator(hop, zero, 2.0, 0.0, spectral=sd)
    np.testing.assert_allclose(dec.remainder.mat, -2.0 * hop.mat, atol=1e-13)


def test_weighted_norm_at_s_zero_is_plain_norm():
    _, _, hop, aop, sd = _setup(s=0.0)
    dec = split_commutator(hop, aop, 2.0, 0.0, spectral=sd)
    assert dec.weighted_norm == pytest.approx(np.linalg.norm(dec.remainder.mat, 2), rel=1e-12)


def test_remainder_action_second_order_for_free_h():
    # for V = 0 the remainder action on interior-localized packets decays
    # at O(h^2); norms that see the walls do not (the dilation generator
    # has a genuine O(1) boundary defect on a Dirichlet box, and grid-scale
    # modes carry an O(1/h^2) kinetic artifact)
    L = 10.0
    vals = []
    for n in (127, 255, 511):
        g = make_grid("line1d", n, L)
        hop = assemble_hamiltonian(g, PotentialSpec("zero"))
        aop = assemble_dilation(g)
        sd = spectral_decompose(hop)
        dec = split_commutator(hop, aop, 2.0, 0.0, spectral=sd)
        probe = np.exp(1j * g.points) * np.exp(-(g.points**2) / (2 * (L / 8) ** 2))
        vals.append(np.abs(dec.remainder.mat @ probe).max())
    ratios = [vals[i] / vals[i + 1] for i in range(2)]
    assert all(3.5 <= r <= 4.5 for r in ratios)


def test_continuum_remainder_closed_form():
    g = make_grid("line1d", 32, 6.0)
    pot = PotentialSpec("critical", 1.0, 1)
    x = g.points
    np.testing.assert_allclose(continuum_remainder(pot, g), 2.0 / (1 + x**2) ** 2, atol=1e-13)


def test_continuum_remainder_zero_potential():
    g = make_grid("line1d", 16, 6.0)
    assert np.abs(continuum_remainder(PotentialSpec("zero"), g)).max() == 0.0


def test_continuum_remainder_value_at_origin():
    # 2 V + x V' at x = 0 equals 2c for the critical family
    g = make_grid("line1d", 31, 8.0)  # odd count puts a node exactly at 0
    pot = PotentialSpec("critical", 1.0, 1)
    vals = continuum_remainder(pot, g)
    mid = np.argmin(np.abs(g.points))
    assert vals[mid] == pytest.approx(2.0, abs=1e-12)


def test_potential_remainder_action_matches_dense():
    g, pot, hop, aop, _ = _setup(n=24, length=5.0)
    h0 = assemble_hamiltonian(g, PotentialSpec("zero"))
    dense = (commutator(hop, aop) - 2.0 * hop.mat) - (commutator(h0, aop) - 2.0 * h0.mat)
    rng = np.random.default_rng(0)
    probe = rng.normal(size=g.n)
    np.testing.assert_allclose(
        potential_remainder_action(pot, g, probe), dense @ probe, atol=1e-12
    )


def test_fidelity_ladder_second_order():
    pot = PotentialSpec("critical", 1.0, 1)
    vals = []
    for n in (255, 511, 1023):
        g = make_grid("line1d", n, 12.0)
        vals.append(remainder_fidelity(pot, g)["max_action_difference"])
    ratios = [vals[i] / vals[i + 1] for i in range(2)]
    assert all(3.5 <= r <= 4.5 for r in ratios)


def test_kato_factors_reconstruct():
    _, _, hop, aop, sd = _setup()
    dec = split_commutator(hop, aop, 2.0, 0.5, spectral=sd)
    e, f, resid, _ = kato_factors(dec.remainder)
    assert resid <= 1e-10
    k_norm = np.linalg.norm(dec.remainder.mat, 2)
    assert np.linalg.norm(e, 2) == pytest.approx(np.sqrt(k_norm), rel=1e-10)
    assert np.linalg.norm(f, 2) == pytest.approx(np.sqrt(k_norm), rel=1e-10)


def test_audit_assumptions_flags():
    g, _, hop, aop, sd = _setup()
    dec = split_commutator(hop, aop, 2.0, 0.5, spectral=sd)
    p = band_projection_matrix(sd, 0.05, 10.0, grid=g)
    audit = audit_assumptions(dec, aop, p, spectral=sd)
    assert audit.symmetric
    assert audit.symmetry_defect <= 1e-12 * np.abs(dec.remainder.mat).max()
    assert audit.weighted_norm_finite
    assert audit.factor_ok
    assert np.isfinite(audit.derived_weighted_norm)


def test_audit_runs_resolvent_probe():
    g, _, hop, aop, sd = _setup(n=32)
    from decaylab import make_plan

    dec = split_commutator(hop, aop, 2.0, 0.0, spectral=sd)
    p = band_projection_matrix(sd, 0.05, 10.0, grid=g)
    plan = make_plan(hop, "eigenbasis", spectral=sd)
    audit = audit_assumptions(
        dec, aop, p, spectral=sd,
        hb_probe={"spectral": sd, "hamiltonian": hop, "t_max": 4.0, "plan": plan, "seed": 3},
    )
    assert audit.hb_finite
    assert audit.hb_window_norm > 0
