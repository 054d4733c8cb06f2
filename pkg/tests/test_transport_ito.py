"""Transport maps, heat smoothing, pair decompositions, the 3-sum pipeline."""

import math

import numpy as np
import pytest

from gsum import (
    DiscreteDistribution1D,
    DomainError,
    ItoConfig,
    NormalizationPlan,
    RandomSource,
    ThreeGaussiansPipeline,
    TransportMap1D,
    TripleSample,
    empirical_tv_to_dist,
    heat_smoothed,
    ito_pair_decomposition,
    ks_distance,
    linear_map_decomposition,
    normals,
    normalization_triple,
    std_normal_cdf,
    three_gaussians_sampler,
)
from gsum.ito import GradientTables

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# transport map type
# ---------------------------------------------------------------------------

def test_transport_table_validation():
    with pytest.raises(DomainError):
        TransportMap1D.from_table([0.0, 1.0], [1.0, 0.0])  # decreasing values
    with pytest.raises(DomainError):
        TransportMap1D.from_table([0.0, 0.0], [0.0, 1.0])  # flat knots


def test_identity_transport_is_exact():
    F = TransportMap1D.identity()
    xs = normals(RandomSource(1), 1000)
    assert np.array_equal(F(xs), xs)
    assert F.lipschitz_certificate == 1.0
    assert F.mean_under_gamma == 0.0
    assert np.all(F.slopes() == 1.0)


def test_affine_transport():
    F = TransportMap1D.from_affine(0.5, 1.25)
    assert F(2.0) == 2.25
    assert F.lipschitz_certificate == 0.5
    assert F.mean_under_gamma == 1.25


def test_tabulated_lipschitz_certificate():
    F = TransportMap1D.tabulate(np.tanh)
    slopes = F.slopes()
    assert F.lipschitz_certificate == float(slopes.max())
    assert F.lipschitz_certificate <= 1.0 + 1e-12
    assert abs(F.mean_under_gamma) <= 1e-8  # odd map


# ---------------------------------------------------------------------------
# heat smoothing
# ---------------------------------------------------------------------------

def test_heat_fixes_affine_maps():
    F = TransportMap1D.identity()
    for t in (0.0, 0.3, 0.99):
        value, grad = heat_smoothed(F, t, 1.7)
        assert value == 1.7
        assert grad == 1.0
    with pytest.raises(DomainError):
        heat_smoothed(F, 1.0, 0.0)


def test_heat_second_moment_oracle():
    # E[(x + sigma Z)^2] = x^2 + sigma^2 away from the table boundary
    F = TransportMap1D.tabulate(lambda u: u * u, lo=0.0, hi=8.0, n=8193)
    for t, x in ((0.75, 2.0), (0.75, 3.5), (0.9, 4.0)):
        value, grad = heat_smoothed(F, t, x)
        assert value == pytest.approx(x * x + (1 - t), abs=1e-4)
        assert grad == pytest.approx(2 * x, abs=1e-4)


def test_heat_gradient_respects_certificate():
    F = TransportMap1D.tabulate(np.tanh)
    for t in (0.0, 0.5, 0.97):
        _, grad = heat_smoothed(F, t, np.linspace(-4, 4, 81))
        assert np.max(np.abs(grad)) <= F.lipschitz_certificate + 1e-8


def test_gradient_tables_match_exact_smoothing():
    F = TransportMap1D.tabulate(np.tanh)
    tables = GradientTables(F, 64)
    slopes, knots = F.slopes(), F.knots
    for j in (0, 32, 61):
        sigma = math.sqrt(1 - j / 64)
        for x in (-1.3, 0.0, 0.7):
            a = (knots[:-1] - x) / sigma
            b = (knots[1:] - x) / sigma
            exact = float(np.dot(slopes, std_normal_cdf(b) - std_normal_cdf(a)))
            got = float(tables.lookup(j, np.array([x]))[0])
            assert got == pytest.approx(exact, abs=5e-5)


# ---------------------------------------------------------------------------
# pair decomposition
# ---------------------------------------------------------------------------

def test_identity_pair_decomposition_exact():
    F = TransportMap1D.identity()
    h, x, y = ito_pair_decomposition(F, ItoConfig(steps=64), RandomSource(3), 20_000)
    assert np.array_equal(x, h) and np.array_equal(y, h)
    res = F(h) - F.mean_under_gamma - F.lipschitz_certificate * (x + y) / 2.0
    assert np.max(np.abs(res)) == 0.0


def test_pair_marginals_are_gaussian():
    F = TransportMap1D.tabulate(np.tanh)
    h, x, y = ito_pair_decomposition(F, ItoConfig(steps=128), RandomSource(5), 150_000)
    assert ks_distance(np.sort(x), std_normal_cdf) <= 0.006
    assert ks_distance(np.sort(y), std_normal_cdf) <= 0.006
    assert ks_distance(np.sort(h), std_normal_cdf) <= 0.006


def test_pair_self_convergence():
    F = TransportMap1D.tabulate(np.tanh)
    rms = {}
    for steps in (256, 1024):
        h, x, y = ito_pair_decomposition(F, ItoConfig(steps=steps), RandomSource(7), 20_000)
        res = F(h) - F.mean_under_gamma - F.lipschitz_certificate * (x + y) / 2.0
        rms[steps] = float(np.sqrt(np.mean(res**2)))
    assert rms[1024] <= 0.7 * rms[256]


def test_pair_thread_determinism():
    F = TransportMap1D.tabulate(np.tanh)
    a = ito_pair_decomposition(F, ItoConfig(steps=64), RandomSource(9), 300_000, threads=1)
    b = ito_pair_decomposition(F, ItoConfig(steps=64), RandomSource(9), 300_000, threads=2)
    for u, v in zip(a, b):
        assert np.array_equal(u, v)


def test_ito_config_validation():
    with pytest.raises(DomainError):
        ItoConfig(steps=8)
    with pytest.raises(DomainError):
        ItoConfig(quadrature_nodes=4)


# ---------------------------------------------------------------------------
# linear map split
# ---------------------------------------------------------------------------

def test_linear_map_identity_and_zero():
    g = np.array([0.3, -1.2, 0.8])
    x, y = linear_map_decomposition(np.eye(3), g, RandomSource(4))
    assert np.array_equal(x, g) and np.array_equal(y, g)
    x, y = linear_map_decomposition(np.zeros((3, 3)), g, RandomSource(4))
    assert np.allclose(x, -y)
    assert np.max(np.abs((x + y) / 2)) == 0.0


def test_linear_map_norm_gate():
    with pytest.raises(DomainError):
        linear_map_decomposition(1.2 * np.eye(2), np.zeros(2), RandomSource(4))


def test_linear_map_moments():
    g = normals(RandomSource(5), 200_000)[:, None]
    x, y = linear_map_decomposition(np.array([[0.6]]), g, RandomSource(6))
    x, y = x[:, 0], y[:, 0]
    assert np.max(np.abs((x + y) / 2 - 0.6 * g[:, 0])) <= 1e-12
    assert x.var() == pytest.approx(1.0, abs=0.02)
    assert y.var() == pytest.approx(1.0, abs=0.02)
    cov = float(np.mean(x * y) - x.mean() * y.mean())
    assert cov == pytest.approx(-0.28, abs=0.02)


def test_linear_map_batch_covariance_identity():
    gen = RandomSource(42).generator()
    A = np.array([[0.5, 0.2], [0.0, 0.7]])
    g = gen.standard_normal((200_000, 2))
    x, y = linear_map_decomposition(A, g, RandomSource(43))
    assert np.max(np.abs((x + y) / 2 - g @ A.T)) <= 1e-12
    for arr in (x, y):
        cov = arr.T @ arr / arr.shape[0]
        assert np.max(np.abs(cov - np.eye(2))) <= 0.02


# ---------------------------------------------------------------------------
# variance padding
# ---------------------------------------------------------------------------

def test_normalization_plan_arithmetic():
    plan = NormalizationPlan(1 / SQRT2, 1 / SQRT2, 1 / SQRT2)
    assert plan.a == pytest.approx(0.25, abs=1e-12)
    assert plan.var_w1_pad == pytest.approx(0.25, abs=1e-12)
    assert plan.var_w2_pad == pytest.approx(0.25, abs=1e-12)
    with pytest.raises(DomainError):
        NormalizationPlan(0.8, 0.2, 0.2)


def test_normalization_sampler_strict_gate():
    plan = NormalizationPlan(1 / SQRT2, 0.3, 0.3)
    with pytest.raises(DomainError):
        normalization_triple(plan, 0.0, 0.0, 0.0, RandomSource(1))


def test_normalization_identity_and_marginals():
    plan = NormalizationPlan(1 / (2 * SQRT2), 1 / (2 * SQRT2), 0.6)
    gs = [normals(RandomSource(20 + i), 200_000) for i in range(3)]
    G1, G2, G3 = normalization_triple(plan, *gs, RandomSource(30))
    target = plan.tau1 * gs[0] + plan.tau2 * gs[1] + plan.tau3 * gs[2]
    assert np.max(np.abs(G1 + G2 + G3 - target)) <= 1e-12
    for G in (G1, G2, G3):
        assert G.var() == pytest.approx(1.0, abs=0.02)
        assert ks_distance(np.sort(G), std_normal_cdf) <= 0.006


def test_normalization_reproducible_joint_law():
    plan = NormalizationPlan(0.3, 0.3, 0.3)
    gs = [normals(RandomSource(40 + i), 10_000) for i in range(3)]
    a = normalization_triple(plan, *gs, RandomSource(50))
    b = normalization_triple(plan, *gs, RandomSource(50))
    for u, v in zip(a, b):
        assert np.array_equal(u, v)


# ---------------------------------------------------------------------------
# the pipeline
# ---------------------------------------------------------------------------

def test_pipeline_delta0_degenerate():
    S = DiscreteDistribution1D([(0.0, 1.0)])
    pipe = ThreeGaussiansPipeline(S, ItoConfig(steps=64))
    G1, G2, G3, s, err = pipe.sample_arrays(20_000, RandomSource(60))
    assert np.all(s == 0.0)
    assert np.max(err) <= 1e-10
    assert ks_distance(np.sort(G1), std_normal_cdf) <= 0.02


def test_pipeline_admission_gate():
    heavy = DiscreteDistribution1D([(-1.0, 0.5), (1.0, 0.5)])
    with pytest.raises(Exception) as excinfo:
        ThreeGaussiansPipeline(heavy, ItoConfig(steps=64))
    assert "kappa" in str(excinfo.value)


def test_pipeline_taus_inside_open_interval():
    S = DiscreteDistribution1D([(-0.05, 0.5), (0.05, 0.5)])
    pipe = ThreeGaussiansPipeline(S, ItoConfig(steps=64))
    assert 0 < pipe.plan.tau1 < 1 / SQRT2
    assert 0 < pipe.plan.tau3 < 1 / SQRT2
    assert pipe.c_emp >= 1.0


def test_pipeline_marginals_and_reconstruction():
    S = DiscreteDistribution1D([(-0.05, 0.5), (0.05, 0.5)])
    pipe = ThreeGaussiansPipeline(S, ItoConfig(steps=256))
    G1, G2, G3, s, err = pipe.sample_arrays(100_000, RandomSource(61))
    for G in (G1, G2, G3):
        assert ks_distance(np.sort(G), std_normal_cdf) <= 0.01
    assert empirical_tv_to_dist(s, S) <= 0.01
    assert np.max(np.abs(G1 + G2 + G3 - s - np.sign(G1 + G2 + G3 - s) * err)) <= 1e-15


def test_pipeline_rescaling_composition():
    # scaling a certified 3-sum by tau = 2.5 via floor/fraction splitting and
    # halving of the fractional map keeps the parts Gaussian after the split
    S = DiscreteDistribution1D([(-0.05, 0.5), (0.05, 0.5)])
    pipe = ThreeGaussiansPipeline(S, ItoConfig(steps=64))
    G1, G2, G3, s, _ = pipe.sample_arrays(100_000, RandomSource(62))
    tau = 2.5
    frac = tau - math.floor(tau)
    # X = G1+G2+G3; tau X = 2X + frac X; frac X = A(X-part sums) with A = frac/2 * 2
    x_half, y_half = linear_map_decomposition(
        np.array([[frac / 2.0]]), G1[:, None], RandomSource(63)
    )
    assert np.max(np.abs((x_half[:, 0] + y_half[:, 0]) / 2 - frac / 2 * G1)) <= 1e-12
    assert ks_distance(np.sort(x_half[:, 0]), std_normal_cdf) <= 0.01
    assert ks_distance(np.sort(y_half[:, 0]), std_normal_cdf) <= 0.01


def test_sampler_stream_interface():
    S = DiscreteDistribution1D([(0.0, 1.0)])
    stream = three_gaussians_sampler(S, ItoConfig(steps=64), RandomSource(64), batch=256)
    samples = [next(stream) for _ in range(10)]
    assert all(isinstance(t, TripleSample) for t in samples)
    for t in samples:
        assert t.reconstruction_error == abs(t.g1 + t.g2 + t.g3 - t.s)
