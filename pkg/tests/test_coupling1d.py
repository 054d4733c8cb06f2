"""The density coupling: construction, identities, samplers, transport."""

import numpy as np
import pytest
from scipy.integrate import quad

from gsum import (
    AdmissionError,
    DiscreteDistribution1D,
    DomainError,
    RandomSource,
    bobkov_transport,
    build_density_coupling,
    component_densities,
    conditional_atom_given_sum,
    density_ratio_audit,
    empirical_tv_to_dist,
    g_marginal_density,
    ks_distance,
    ks_distance_two_sample,
    quantize_quantiles,
    sample_coupled_pair,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
    sum_density,
    sum_density_cdf,
    subgaussian_norm,
)
from gsum.coupling1d import sample_atoms_given_sums, sum_density_sf

DELTA0 = DiscreteDistribution1D([(0.0, 1.0)])
SYM = DiscreteDistribution1D([(-0.05, 0.5), (0.05, 0.5)])
SKEW = DiscreteDistribution1D([(-0.02, 0.6), (0.03, 0.4)])


def quad_beta(c, j):
    """Independent quadrature recomputation of (alpha, beta-, beta+).

    The integrands have a kink at the anchor, so the quadrature is told
    about that breakpoint.
    """
    xj = c.xs[j]
    opts = dict(limit=400, epsabs=1e-12, points=[c.y0])
    alpha, _ = quad(lambda x: component_densities(c, j, x)[0], -14, 14, **opts)
    bm, _ = quad(lambda x: component_densities(c, j, x)[1], -14, xj,
                 limit=400, epsabs=1e-12, points=[c.y0] if -14 < c.y0 < xj else None)
    bp, _ = quad(lambda x: component_densities(c, j, x)[1], xj, 14,
                 limit=400, epsabs=1e-12, points=[c.y0] if xj < c.y0 < 14 else None)
    return alpha, bm, bp


def test_delta0_coupling_is_gaussian():
    c = build_density_coupling(DELTA0)
    assert c.y0 == 0.0
    assert c.case_b_split is not None
    grid = np.linspace(-7, 7, 1401)
    assert np.max(np.abs(sum_density(c, grid) - std_normal_pdf(grid))) <= 1e-12


def test_symmetric_source_balances_at_zero():
    c = build_density_coupling(SYM)
    assert abs(c.y0) <= 1e-12
    assert abs(c.balance_residual()) <= 1e-9
    grid = np.linspace(-6, 6, 601)
    f = sum_density(c, grid)
    assert np.max(np.abs(f - sum_density(c, -grid))) <= 1e-10


def test_balance_residual_by_independent_quadrature():
    c = build_density_coupling(SYM, nu=0.1)
    lhs = rhs = 0.0
    for j in range(c.xs.size):
        alpha, bm, bp = quad_beta(c, j)
        assert alpha == pytest.approx(c.alpha[j], abs=1e-9)
        assert bm == pytest.approx(c.beta_minus[j], abs=1e-9)
        assert bp == pytest.approx(c.beta_plus[j], abs=1e-9)
        lhs += c.ps[j] * bp
        if j < c.i_y0:
            rhs += c.ps[j] * (1 - alpha)
    assert abs(lhs - rhs) <= 1e-9


def test_per_atom_identities():
    c = build_density_coupling(SKEW)
    # alpha + beta- + beta+ = 1 per atom
    total = c.alpha + c.beta_minus + c.beta_plus
    assert np.max(np.abs(total - 1.0)) <= 1e-10
    assert np.all(c.beta_minus > 0) and np.all(c.beta_plus > 0)
    # gammas match their defining sums
    assert c.gamma_minus == pytest.approx(float(np.dot(c.ps, c.beta_minus)), abs=1e-10)
    assert c.gamma_plus == pytest.approx(float(np.dot(c.ps, c.beta_plus)), abs=1e-10)


def test_component_density_identity():
    c = build_density_coupling(SYM)
    xs = np.linspace(-5, 5, 401)
    for j in range(c.xs.size):
        g0, g1 = component_densities(c, j, xs)
        # defining identity, holds to machine precision
        assert np.max(np.abs(g0 + g1 - std_normal_pdf(xs - c.xs[j]))) <= 1e-16
        assert np.all(g1 > 0)
        # shaved piece vanishes on the wrong side of the anchor
        if c.xs[j] <= c.y0:
            assert np.all(g0[xs > c.y0] == 0.0)
        else:
            assert np.all(g0[xs < c.y0] == 0.0)


def test_out_of_window_atom_has_no_shaved_piece():
    # kappa_max is a knob: admit a wide distribution to reach the branch
    wide = DiscreteDistribution1D([(-1.5, 0.5), (1.5, 0.5)])
    c = build_density_coupling(wide, kappa_max=2.0)
    j = int(np.argmax(c.xs))
    g0, g1 = component_densities(c, j, 0.3)
    assert g0 == 0.0
    assert g1 == pytest.approx(std_normal_pdf(0.3 - c.xs[j]), abs=1e-15)
    assert c.alpha[j] == 0.0 and c.beta_minus[j] == 0.5 and c.beta_plus[j] == 0.5


def test_g_marginal_is_standard_normal():
    for S in (DELTA0, SYM, SKEW):
        c = build_density_coupling(S)
        grid = np.linspace(-8, 8, 1601)
        dev = np.max(np.abs(g_marginal_density(c, grid) - std_normal_pdf(grid)))
        assert dev <= 1e-8


def test_sum_density_integrates_to_one():
    for S in (SYM, SKEW):
        c = build_density_coupling(S)
        val, _ = quad(lambda t: sum_density(c, t), c.y0 - 12, c.y0 + 12, limit=400)
        assert val == pytest.approx(1.0, abs=1e-6)
        grid = np.linspace(c.y0 - 8, c.y0 + 8, 1601)
        assert np.all(sum_density(c, grid) > 0)


def test_sum_cdf_matches_quadrature():
    c = build_density_coupling(SKEW)
    for t in (-3.0, -0.5, 0.0, 0.02, 1.7):
        oracle, _ = quad(lambda u: sum_density(c, u), -14, t, limit=400)
        assert sum_density_cdf(c, t) == pytest.approx(oracle, abs=1e-7)
        assert sum_density_sf(c, t) == pytest.approx(1 - oracle, abs=1e-7)


def test_admission_gates():
    off_center = DiscreteDistribution1D([(0.0, 0.5), (0.1, 0.5)])
    with pytest.raises(AdmissionError):
        build_density_coupling(off_center)
    heavy = DiscreteDistribution1D([(-1.0, 0.5), (1.0, 0.5)])
    with pytest.raises(AdmissionError):
        build_density_coupling(heavy)  # kappa 0.85 >> 0.05
    with pytest.raises(DomainError):
        build_density_coupling(SYM, nu=0.7)


def test_sampler_marginals():
    c = build_density_coupling(SYM)
    s, g = sample_coupled_pair(c, RandomSource(7), 200_000)
    assert ks_distance(np.sort(g), std_normal_cdf) <= 0.005
    assert empirical_tv_to_dist(s, SYM) <= 0.005
    # sums follow the closed-form law; oracle CDF by cumulative quadrature
    grid = np.linspace(c.y0 - 10, c.y0 + 10, 4001)
    dens = sum_density(c, grid)
    cdf_grid = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2 * np.diff(grid))])
    ks = ks_distance(np.sort(s + g), lambda t: np.interp(t, grid, cdf_grid))
    assert ks <= 0.005


def test_sampler_deterministic():
    c = build_density_coupling(SYM)
    s1, g1 = sample_coupled_pair(c, RandomSource(12), 5000)
    s2, g2 = sample_coupled_pair(c, RandomSource(12), 5000)
    assert np.array_equal(s1, s2) and np.array_equal(g1, g2)


def test_conditional_atom_examples():
    c0 = build_density_coupling(DELTA0)
    for t in (-2.0, 0.0, 1.3):
        w = conditional_atom_given_sum(c0, t)
        assert w.tolist() == [1.0]
    c = build_density_coupling(SYM)
    for t in (-1.0, 0.0, 0.4):
        w = conditional_atom_given_sum(c, t)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(w >= 0)


def test_conditional_weights_reconstruct_density():
    from gsum.coupling1d import _conditional_weights

    c = build_density_coupling(SKEW)
    ts = np.linspace(-4, 4, 81)
    w = _conditional_weights(c, ts)
    assert np.max(np.abs(w.sum(axis=1) - sum_density(c, ts))) <= 1e-10


def test_reverse_pipeline_matches_forward():
    c = build_density_coupling(SYM)
    s, g = sample_coupled_pair(c, RandomSource(9), 150_000)
    t = s + g
    s_rev = sample_atoms_given_sums(c, t, RandomSource(10))
    g_rev = t - s_rev
    assert ks_distance_two_sample(g, g_rev) <= 0.007


def test_density_ratio_audit():
    c0 = build_density_coupling(DELTA0)
    audit = density_ratio_audit(c0)
    assert audit.c_low == pytest.approx(1.0, abs=1e-10)
    assert audit.c_high == pytest.approx(1.0, abs=1e-10)
    c = build_density_coupling(SYM)
    audit = density_ratio_audit(c)
    assert 0 < audit.c_low <= 1.0 <= audit.c_high
    assert audit.ratio <= 1e4
    with pytest.raises(DomainError):
        density_ratio_audit(c, half_width=2.0)


def test_transport_identity_case():
    c0 = build_density_coupling(DELTA0)
    F = bobkov_transport(c0)
    assert np.max(np.abs(F.values - F.knots)) <= 1e-8
    assert F.lipschitz_certificate == pytest.approx(1.0, abs=1e-8)
    assert abs(F.mean_under_gamma) <= 1e-8


def test_transport_pushforward_and_roundtrip():
    c = build_density_coupling(SYM)
    F = bobkov_transport(c)
    # monotone
    assert np.all(np.diff(F.values) >= 0)
    # round trip at the table's own quantile points: Phi(F^{-1}(t)) = F_f(t)
    sel = slice(64, -64, 8)  # interior knots
    ts = F.values[sel]
    xinv = np.interp(ts, F.values, F.knots)
    assert np.max(np.abs(std_normal_cdf(xinv) - sum_density_cdf(c, ts))) <= 1e-8
    # between knots the error is the piecewise-linear interpolation budget
    mid = (F.values[:-1] + F.values[1:]) / 2
    xmid = np.interp(mid, F.values, F.knots)
    assert np.max(np.abs(std_normal_cdf(xmid) - sum_density_cdf(c, mid))) <= 5e-4
    # pushforward of a Gaussian sample
    z = RandomSource(8).generator().standard_normal(200_000)
    ks = ks_distance(np.sort(F(z)), lambda t: sum_density_cdf(c, t))
    assert ks <= 0.005
    # slope certificate within the pinch-ratio bound
    audit = density_ratio_audit(c, half_width=9.0)
    assert F.lipschitz_certificate <= audit.ratio * 1.05


def test_case_b_split_bookkeeping():
    c = build_density_coupling(DELTA0)
    j, p_prime = c.case_b_split
    assert 0 < p_prime < 1
    assert c.xs.size == 2 and c.xs[0] == c.xs[1] == 0.0
    assert c.ps[j] == pytest.approx(p_prime)
    assert c.ps.sum() == pytest.approx(1.0, abs=1e-12)
    assert c.i_y0 == j + 1


def test_positivity_guard():
    from gsum.coupling1d import _positivity_ok

    # atoms close to the anchor admit large nu; a far atom/anchor pair does not
    assert _positivity_ok(np.array([0.05]), 0.0, 0.4)
    assert not _positivity_ok(np.array([1.0]), -1.0, 0.2)
    # large nu still builds for tight sources, with positivity intact
    c = build_density_coupling(SYM, nu=0.4)
    assert 0 < c.nu <= 0.4
    xs = np.linspace(-8, 8, 1601)
    for j in range(c.xs.size):
        _, g1 = component_densities(c, j, xs)
        assert np.all(g1 > 0)


def test_quantize_quantiles():
    dist, w1 = quantize_quantiles(lambda u: 0.05 * std_normal_quantile(u), n_atoms=256)
    assert dist.xs.size == 256
    assert abs(dist.mean()) <= 1e-12
    assert w1 <= 1e-3
    k = subgaussian_norm(dist).kappa
    assert k <= 0.05
    build_density_coupling(dist)  # admissible after quantization
