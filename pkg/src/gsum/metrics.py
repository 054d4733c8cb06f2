"""Verification metrics: Kolmogorov-Smirnov and 1D Wasserstein distances."""

from __future__ import annotations

import numpy as np

from .dists import DiscreteDistribution1D
from .errors import DomainError


def ks_distance(sample, cdf) -> float:
    """sup |F_emp - cdf| audited at both one-sided limits of each sample point.

    `sample` must be sorted nondecreasing; `cdf` maps arrays to arrays.  The
    left empirical value is compared against the cdf's left limit, so the
    statistic is the true sup-norm also for step-function references (a
    sample against its own empirical CDF scores exactly 0).
    """
    sample = np.asarray(sample, dtype=float)
    if sample.size == 0:
        raise DomainError("sample must be nonempty")
    if np.any(np.diff(sample) < 0):
        raise DomainError("sample must be sorted nondecreasing")
    n = sample.size
    right = np.asarray(cdf(sample), dtype=float)
    left = np.asarray(cdf(np.nextafter(sample, -np.inf)), dtype=float)
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return float(max(np.max(np.abs(hi - right)), np.max(np.abs(lo - left))))


def ks_distance_two_sample(a, b) -> float:
    """Two-sample KS statistic; inputs need not be sorted."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise DomainError("samples must be nonempty")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def wasserstein1_1d(a: DiscreteDistribution1D, b: DiscreteDistribution1D) -> float:
    """Closed-form W1 between atomic 1D laws: the integral of |F_a - F_b|."""
    grid = np.union1d(a.xs, b.xs)
    if grid.size == 1:
        return 0.0
    fa = a.cdf(grid[:-1])
    fb = b.cdf(grid[:-1])
    return float(np.dot(np.abs(fa - fb), np.diff(grid)))


def total_variation_discrete(a: DiscreteDistribution1D, b: DiscreteDistribution1D) -> float:
    """TV distance (1/2) sum |p_a - p_b| over the union support."""
    grid = np.union1d(a.xs, b.xs)
    pa = np.zeros(grid.size)
    pb = np.zeros(grid.size)
    pa[np.searchsorted(grid, a.xs)] = a.ps
    pb[np.searchsorted(grid, b.xs)] = b.ps
    return 0.5 * float(np.abs(pa - pb).sum())


def empirical_tv_to_dist(sample, dist: DiscreteDistribution1D) -> float:
    """TV between the empirical law of `sample` and an atomic reference.

    Sample values are matched to the nearest atom (they are expected to be
    exact atom values up to float noise).
    """
    sample = np.asarray(sample, dtype=float)
    idx = np.searchsorted(dist.xs, sample)
    idx = np.clip(idx, 0, dist.xs.size - 1)
    left = np.clip(idx - 1, 0, dist.xs.size - 1)
    use_left = np.abs(sample - dist.xs[left]) < np.abs(sample - dist.xs[idx])
    idx = np.where(use_left, left, idx)
    counts = np.bincount(idx, minlength=dist.xs.size).astype(float)
    return 0.5 * float(np.abs(counts / sample.size - dist.ps).sum())
