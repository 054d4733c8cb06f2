"""Order statistics of measure families averaging to the Gaussian.

Given probability measures theta_1, ..., theta_n whose average is the
standard Gaussian, independent draws X_i ~ theta_i are sorted and compared
with the quantile anchors r_i (Phi(r_i) = i/n below the median, (i-1)/n
above).  The module estimates sum_i E|X*_i - r_i|^2 by Monte Carlo, evaluates
the analytic Chernoff envelope that dominates each lower-tail contribution,
and provides the Mills-ratio bracket used in those estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import DomainError
from .normal import std_normal_cdf, std_normal_pdf, std_normal_quantile
from .rng import RandomSource


def quantile_anchors(n: int) -> np.ndarray:
    """Anchors r_i: Phi(r_i) = i/n for i <= n/2 and (i-1)/n for i > n/2
    (1-based i; the returned array is indexed 0..n-1)."""
    if n < 2:
        raise DomainError("need n >= 2")
    i = np.arange(1, n + 1)
    frac = np.where(i <= n / 2, i / n, (i - 1) / n)
    return std_normal_quantile(frac)


@dataclass(frozen=True)
class ThetaFamily:
    """n per-index samplers with mixture identity (1/n) sum theta_i = gamma_1.

    `draw(gen, reps)` returns a (reps, n) matrix with column i sampled from
    theta_i; `mixture_cdf` is the average of the component CDFs and must
    agree with Phi within 1e-6 on the audit grid (checked at construction).
    """

    n: int
    label: str
    draw: Callable
    mixture_cdf: Callable

    def __post_init__(self):
        grid = np.linspace(-6.0, 6.0, 241)
        dev = float(np.max(np.abs(self.mixture_cdf(grid) - std_normal_cdf(grid))))
        if dev > 1e-6:
            raise DomainError(f"mixture CDF deviates from Phi by {dev:.3e}")


def all_gaussian_family(n: int) -> ThetaFamily:
    """Every component the standard Gaussian."""
    if n < 2:
        raise DomainError("need n >= 2")

    def draw(gen, reps):
        return gen.standard_normal((reps, n))

    return ThetaFamily(n=n, label="all_gaussian", draw=draw, mixture_cdf=std_normal_cdf)


def quantile_strip_family(n: int) -> ThetaFamily:
    """Component i is the Gaussian conditioned on its i-th probability strip:
    sample U uniform on ((i-1)/n, i/n) and map through the quantile."""
    if n < 2:
        raise DomainError("need n >= 2")

    def draw(gen, reps):
        u = (np.arange(n)[None, :] + gen.random((reps, n))) / n
        return std_normal_quantile(u)

    def mixture_cdf(x):
        # strip CDFs are clip(n Phi(x) - (i-1), 0, 1); their average is
        # exactly Phi, assembled here without that simplification
        x = np.asarray(x, dtype=float)
        base = n * std_normal_cdf(x)
        total = np.zeros_like(base)
        for i in range(n):
            total += np.clip(base - i, 0.0, 1.0)
        return total / n

    return ThetaFamily(n=n, label="quantile_strips", draw=draw, mixture_cdf=mixture_cdf)


@dataclass(frozen=True)
class OrderStatsReport:
    n: int
    reps: int
    moment_sum: float
    stderr: float
    ratio: float  # moment_sum / (log log n + 1); NaN below n = 3


def orderstats_moment_sum(
    family: ThetaFamily, reps: int, rng: RandomSource
) -> OrderStatsReport:
    """Monte Carlo estimate of sum_i E|X*_i - r_i|^2 over `reps` replicas."""
    if reps < 100:
        raise DomainError("need at least 100 replicas")
    anchors = quantile_anchors(family.n)
    gen = rng.generator()
    per_rep = []
    block = max(1, (1 << 22) // max(family.n, 1))
    remaining = int(reps)
    while remaining > 0:
        m = min(block, remaining)
        X = family.draw(gen, m)
        X.sort(axis=1)
        dev = X - anchors[None, :]
        per_rep.extend((dev * dev).sum(axis=1).tolist())
        remaining -= m
    total = math.fsum(per_rep)
    mean = total / reps
    var = math.fsum((v - mean) ** 2 for v in per_rep) / reps
    stderr = math.sqrt(var / reps)
    ratio = mean / (math.log(math.log(family.n)) + 1.0) if family.n >= 3 else math.nan
    return OrderStatsReport(
        n=family.n, reps=int(reps), moment_sum=mean, stderr=stderr, ratio=ratio
    )


def per_index_lower_tail_moment(
    family: ThetaFamily, indices, reps: int, rng: RandomSource
):
    """MC estimate of E[max(r_i - X*_i, 0)^2] per requested index (1-based).

    This is twice the lower-tail integral of P[X*_i - r_i < -t] t dt that the
    analytic envelope dominates; means and stderrs are returned per index.
    """
    anchors = quantile_anchors(family.n)
    idx = np.asarray(indices, dtype=int) - 1
    gen = rng.generator()
    sums = np.zeros(idx.size)
    sqs = np.zeros(idx.size)
    block = max(1, (1 << 22) // max(family.n, 1))
    remaining = int(reps)
    while remaining > 0:
        m = min(block, remaining)
        X = family.draw(gen, m)
        X.sort(axis=1)
        short = np.maximum(anchors[idx][None, :] - X[:, idx], 0.0) ** 2
        sums += short.sum(axis=0)
        sqs += (short * short).sum(axis=0)
        remaining -= m
    mean = sums / reps
    var = np.maximum(sqs / reps - mean * mean, 0.0)
    return mean, np.sqrt(var / reps)


def xi_bound(i: int, a: float) -> float:
    """Chernoff envelope for P[at least i of n strip indicators fire] with
    total intensity a: exp(-(i-a)^2/(12a)) for a >= i/7, else (4a/i)^(i/8)."""
    if not (0.0 < a < i):
        raise DomainError("need 0 < a < i")
    if a >= i / 7.0:
        return math.exp(-((i - a) ** 2) / (12.0 * a))
    return (4.0 * a / i) ** (i / 8.0)


def mills_bounds(x: float):
    """(lower, upper) bracket for Phi(x) at x <= 0:
    |x| phi(x) / (1 + x^2) <= Phi(x) <= phi(x) / |x| (upper = inf at 0)."""
    if x > 0:
        raise DomainError("bracket applies to x <= 0")
    if x == 0.0:
        return 0.0, math.inf
    dens = std_normal_pdf(x)
    ax = abs(x)
    return ax * dens / (1.0 + ax * ax), dens / ax


def analytic_tail_integral(n: int, i: int) -> float:
    """integral_0^inf xi_i(n Phi(r_i - t)) t dt by adaptive quadrature.

    Valid for 1 <= i <= n/2 (anchors at or below the median).  The integrand
    switches Chernoff branch at the t where n Phi(r_i - t) = i/7; the
    quadrature is split there.
    """
    if not (1 <= i <= n / 2):
        raise DomainError("need 1 <= i <= n/2")
    anchors = quantile_anchors(n)
    r_i = float(anchors[i - 1])
    t_switch = r_i - std_normal_quantile(i / (7.0 * n))

    def integrand(t):
        a = n * std_normal_cdf(r_i - t)
        if a <= 0.0 or a >= i:
            return 0.0
        return xi_bound(i, a) * t

    left, _ = quad(integrand, 0.0, max(t_switch, 1e-12), limit=200)
    right, _ = quad(integrand, max(t_switch, 1e-12), np.inf, limit=200)
    return left + right


def anchor_spread_check(n: int) -> bool:
    """(1 + |r_i|)^2 >= (log(n/i) + 1)/10 for every anchor, checked exactly."""
    anchors = quantile_anchors(n)
    i = np.arange(1, n + 1)
    lhs = (1.0 + np.abs(anchors)) ** 2
    rhs = (np.log(n / i) + 1.0) / 10.0
    return bool(np.all(lhs >= rhs))


def log_tail_decay_audit(c: float = 0.3, x_grid=None, t_grid=None) -> float:
    """Largest c' with Phi(x - t) <= exp(-c'(1+|x|)t) Phi(x) on the grid.

    Returns the measured constant (the audit passes when it is >= c).
    """
    if x_grid is None:
        x_grid = np.linspace(-8.0, 0.0, 81)
    if t_grid is None:
        t_grid = np.linspace(0.05, 8.0, 80)
    best = math.inf
    for x in x_grid:
        lead = std_normal_cdf(x)
        for t in t_grid:
            val = std_normal_cdf(x - t)
            if val <= 0.0:
                continue
            c_here = -math.log(val / lead) / ((1.0 + abs(x)) * t)
            best = min(best, c_here)
    if best < c:
        raise DomainError(f"measured decay constant {best:.4f} is below {c}")
    return best
