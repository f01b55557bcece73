import numpy as np
import pytest

from decaylab import (
    PotentialSpec,
    assemble_hamiltonian,
    band_limited_samples,
    energy_membership,
    kato_constant,
    make_grid,
    make_plan,
    morawetz_check,
    propagate,
    smoothing_integral,
    spectral_decompose,
)


@pytest.fixture(scope="module")
def free_1d():
    g = make_grid("line1d", 1024, 80.0)
    hop = assemble_hamiltonian(g, PotentialSpec("zero"))
    sd = spectral_decompose(hop)
    plan = make_plan(hop, "eigenbasis", spectral=sd)
    return g, hop, sd, plan


@pytest.fixture(scope="module")
def radial_3d():
    g = make_grid("radial3d", 1023, 200.0)
    hop = assemble_hamiltonian(g, PotentialSpec("critical", 1.0, 3))
    sd = spectral_decompose(hop)
    plan = make_plan(hop, "eigenbasis", spectral=sd)
    return g, hop, sd, plan


def gaussian(g, center=0.0, width=2.0, boost=0.0):
    u = np.exp(-((g.points - center) ** 2) / (2 * width**2)).astype(complex)
    if boost:
        u *= np.exp(1j * boost * g.points)
    return u / np.linalg.norm(u)


def test_zero_weight_gives_zero_integral(free_1d):
    g, hop, sd, plan = free_1d
    rep = smoothing_integral(np.zeros(g.n), hop, None, gaussian(g), np.asarray([4.0]),
                             plan, dt=0.05)
    assert rep.sup_constant == 0.0
    assert rep.ratios[0] == 1.0


def test_identity_weight_integrates_linearly(free_1d):
    # unitarity: ||e^{-itH} psi||^2 = 1, so I(T) = T exactly under trapezoid
    g, hop, sd, plan = free_1d
    rep = smoothing_integral(None, hop, None, gaussian(g), np.asarray([2.0, 4.0]),
                             plan, dt=0.1)
    np.testing.assert_allclose(rep.cumulative[0], [2.0, 4.0], rtol=1e-10)
    assert rep.ratios[0] == pytest.approx(2.0, rel=1e-9)
    assert not rep.stabilizing[0]


def test_cumulative_monotone(free_1d):
    g, hop, sd, plan = free_1d
    w = 1.0 / np.sqrt(1.0 + g.points**2)
    rep = smoothing_integral(w, hop, None, gaussian(g, boost=1.5), np.linspace(1.0, 12.0, 12),
                             plan, dt=0.05)
    assert np.all(np.diff(rep.cumulative[0]) >= 0)


def test_localized_packet_weighted_integral_stabilizes(free_1d):
    # a moving packet crosses the weight region once inside the window;
    # the cumulative integral saturates to a 5% ratio
    g, hop, sd, plan = free_1d
    u = gaussian(g, center=-8.0, width=2.0, boost=2.0)
    w = 1.0 / np.sqrt(1.0 + g.points**2)
    rep = smoothing_integral(w, hop, None, u, np.asarray([16.0]), plan, dt=0.04,
                             phase_scale=9.0)
    assert rep.ratios[0] <= 1.05
    assert np.isfinite(rep.sup_constant)


def test_t_grid_beyond_window_truncated(free_1d):
    g, hop, sd, plan = free_1d
    with pytest.warns(UserWarning, match="truncat"):
        rep = smoothing_integral(None, hop, None, gaussian(g), np.asarray([5.0, 50.0]),
                                 plan, dt=0.1, t_max=10.0)
    assert rep.t_max == pytest.approx(10.0)


def test_quadrature_refinement_half_percent(free_1d):
    g, hop, sd, plan = free_1d
    u = gaussian(g, center=-8.0, width=2.0, boost=2.0)
    w = 1.0 / np.sqrt(1.0 + g.points**2)
    coarse = smoothing_integral(w, hop, None, u, np.asarray([12.0]), plan, dt=0.08)
    fine = smoothing_integral(w, hop, None, u, np.asarray([12.0]), plan, dt=0.04)
    a, b = coarse.cumulative[0][-1], fine.cumulative[0][-1]
    assert abs(a - b) / b <= 0.005


def test_kato_constant_requires_eight_samples(free_1d):
    g, hop, sd, plan = free_1d
    with pytest.raises(ValueError, match="at least 8"):
        kato_constant(None, hop, None, [gaussian(g)] * 7, 0.0, 4.0, plan)


def test_kato_constant_scale_invariant(free_1d):
    # doubling a sample leaves its normalized constant unchanged
    g, hop, sd, plan = free_1d
    base = [gaussian(g, center=-6.0, width=2.0, boost=1.5 + 0.1 * k) for k in range(8)]
    w = 1.0 / np.sqrt(1.0 + g.points**2)
    r1 = kato_constant(w, hop, None, base, 0.0, 10.0, plan, dt=0.05)
    r2 = kato_constant(w, hop, None, [2.0 * s for s in base], 0.0, 10.0, plan, dt=0.05)
    np.testing.assert_allclose(r1.constants, r2.constants, rtol=1e-12)


def test_kato_constant_sobolev_normalization(free_1d):
    g, hop, sd, plan = free_1d
    samples = [gaussian(g, center=-6.0, width=2.0, boost=1.5 + 0.1 * k) for k in range(8)]
    w = 1.0 / np.sqrt(1.0 + g.points**2)
    r0 = kato_constant(w, hop, None, samples, 0.0, 8.0, plan, dt=0.05, spectral=sd)
    rh = kato_constant(w, hop, None, samples, 0.5, 8.0, plan, dt=0.05, spectral=sd)
    assert all(np.isfinite(c) for c in r0.constants + rh.constants)
    assert r0.constants != rh.constants


def test_kato_excludes_tiny_reference(free_1d):
    g, hop, sd, plan = free_1d
    samples = [gaussian(g, boost=1.0 + 0.1 * k) for k in range(8)]
    samples[3] = np.zeros(g.n, dtype=complex)
    w = 1.0 / np.sqrt(1.0 + g.points**2)
    rep = kato_constant(w, hop, None, samples, 0.0, 6.0, plan, dt=0.05)
    assert rep.excluded == [3]
    assert len(rep.constants) == 7


def test_morawetz_refuses_line_grid(free_1d):
    g, hop, sd, plan = free_1d
    with pytest.raises(ValueError, match="radial3d"):
        morawetz_check(hop, [gaussian(g)] * 8, 8.0, plan)


def test_morawetz_radial_constant_and_homogeneity(radial_3d):
    g, hop, sd, plan = radial_3d
    base = []
    env = np.exp(-((g.points - 6.0) ** 2) / (2 * 2.5**2))
    base = band_limited_samples(sd, 0.01, 25.0, 8, seed=9,
                                profile=lambda lam: lam * np.exp(-lam / 1.5), envelope=env)
    t_max = 18.0
    r1 = morawetz_check(hop, base, t_max, plan, dt=0.05)
    r10 = morawetz_check(hop, [10.0 * s for s in base], t_max, plan, dt=0.05)
    np.testing.assert_allclose(r1.constants, r10.constants, rtol=1e-10)
    assert np.isfinite(r1.sup_constant)


def test_band_limited_samples_deterministic(radial_3d):
    g, hop, sd, plan = radial_3d
    a = band_limited_samples(sd, 0.1, 10.0, 3, seed=5)
    b = band_limited_samples(sd, 0.1, 10.0, 3, seed=5)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
    with pytest.raises(ValueError, match="no eigenvalues"):
        band_limited_samples(sd, 1e9, 2e9, 2, seed=0)


def test_energy_membership_zero_state(free_1d):
    g, hop, sd, plan = free_1d
    em = energy_membership(np.zeros(g.n), hop, 4.0, plan=plan, phase_scale=8.0)
    assert em.window_l2 == 0.0
    assert em.position_bound is None


def test_energy_membership_log_growth_free_gaussian(free_1d):
    # |psi|^2 = (1 + t^2/4)^(-1/2) ~ 2/t: the window integral grows like
    # 4 log T, so increments per doubling are asymptotically equal
    g, hop, sd, plan = free_1d
    u = gaussian(g, width=np.sqrt(2.0))
    vals = {}
    for t in (8.0, 16.0, 32.0):
        vals[t] = energy_membership(u, hop, t, plan=plan, phase_scale=6.0).window_l2 ** 2
    inc1 = vals[16.0] - vals[8.0]
    inc2 = vals[32.0] - vals[16.0]
    assert inc2 == pytest.approx(inc1, rel=0.15)


def test_energy_membership_radial_bound(radial_3d):
    g, hop, sd, plan = radial_3d
    r = g.points
    u = (r * np.exp(-((r - 5.0) ** 2) / 4.0)).astype(complex)
    u /= np.linalg.norm(u)
    em = energy_membership(u, hop, 20.0, plan=plan, phase_scale=10.0)
    assert em.position_bound is not None
    assert em.within_bound
    assert em.window_l2 <= 1.05 * em.position_bound
    assert em.seminorm == pytest.approx(np.sqrt(em.window_l2))


def test_conjugate_symmetry_spot_checks(free_1d):
    # psi(-t) = conj(psi(t)) against direct negative-time propagation
    g, hop, sd, plan = free_1d
    u = gaussian(g, boost=1.0)
    for t in (0.7, 2.3, 5.1):
        fwd = np.vdot(u, propagate(hop, u, t, plan))
        bwd = np.vdot(u, propagate(hop, u, -t, plan))
        assert abs(bwd - np.conj(fwd)) <= 1e-9
