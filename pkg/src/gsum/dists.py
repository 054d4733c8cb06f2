"""Finite discrete distributions and subgaussian tail norms.

A 1D distribution is a list of (x, p) atoms; a vector distribution is a list
of (vector, p) atoms with a declared dimension.  Construction canonicalizes:
zero-probability atoms are dropped, duplicate atoms merged, atoms sorted, and
the probabilities must sum to 1 within 1e-12.

The kappa tail norm is the smallest kappa with
    P[|<X, v>| >= t] <= 2 exp(-t^2 / (2 kappa^2))   for all t > 0
over the audited directions v.  For a discrete 1D law the tail is a step
function, so the supremum over t is attained at the atom magnitudes and the
audit there is exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

PROB_TOL = 1e-12


def _canonical_atoms(xs, ps, prob_tol=PROB_TOL):
    xs = np.asarray(xs, dtype=float)
    ps = np.asarray(ps, dtype=float)
    if xs.shape[0] != ps.shape[0] or xs.shape[0] == 0:
        raise DomainError("atoms and probabilities must be nonempty and aligned")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ps))):
        raise DomainError("atoms and probabilities must be finite")
    if np.any(ps < 0.0):
        raise DomainError("probabilities must be nonnegative")
    keep = ps > 0.0
    xs, ps = xs[keep], ps[keep]
    if xs.size == 0:
        raise DomainError("all atoms have zero probability")
    total = float(ps.sum())
    if abs(total - 1.0) > prob_tol:
        raise DomainError(f"probabilities sum to {total!r}, not 1 within {prob_tol}")
    order = np.argsort(xs, kind="stable")
    xs, ps = xs[order], ps[order]
    # merge exact duplicates
    out_x, out_p = [xs[0]], [ps[0]]
    for x, p in zip(xs[1:], ps[1:]):
        if x == out_x[-1]:
            out_p[-1] += p
        else:
            out_x.append(x)
            out_p.append(p)
    return np.array(out_x), np.array(out_p)


@dataclass(frozen=True)
class DiscreteDistribution1D:
    """Finite atomic law on the real line, canonicalized at construction."""

    xs: np.ndarray
    ps: np.ndarray

    def __init__(self, atoms):
        xs = [a[0] for a in atoms]
        ps = [a[1] for a in atoms]
        cx, cp = _canonical_atoms(xs, ps)
        object.__setattr__(self, "xs", cx)
        object.__setattr__(self, "ps", cp)

    @classmethod
    def from_arrays(cls, xs, ps) -> "DiscreteDistribution1D":
        return cls(list(zip(np.asarray(xs, dtype=float), np.asarray(ps, dtype=float))))

    @property
    def atoms(self):
        return list(zip(self.xs.tolist(), self.ps.tolist()))

    def mean(self) -> float:
        return float(np.dot(self.xs, self.ps))

    def variance(self) -> float:
        m = self.mean()
        return float(np.dot((self.xs - m) ** 2, self.ps))

    def scaled(self, c: float) -> "DiscreteDistribution1D":
        if c == 0.0:
            return DiscreteDistribution1D([(0.0, 1.0)])
        return DiscreteDistribution1D.from_arrays(c * self.xs, self.ps)

    def cdf(self, t):
        """P[X <= t], right-continuous step function."""
        t = np.asarray(t, dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(self.ps)])
        idx = np.searchsorted(self.xs, t, side="right")
        out = cum[idx]
        return float(out) if out.ndim == 0 else out

    def sample(self, rng_gen, n: int) -> np.ndarray:
        """n draws using an already-open numpy Generator."""
        idx = rng_gen.choice(self.xs.size, size=n, p=self.ps / self.ps.sum())
        return self.xs[idx]

    def to_json_dict(self) -> dict:
        return {"atoms": [{"x": float(x), "p": float(p)} for x, p in zip(self.xs, self.ps)]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "DiscreteDistribution1D":
        try:
            atoms = [(entry["x"], entry["p"]) for entry in data["atoms"]]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed distribution JSON: {exc}") from exc
        return cls(atoms)

    @classmethod
    def from_json(cls, text: str) -> "DiscreteDistribution1D":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class DiscreteDistributionVec:
    """Finite atomic law on R^n with a declared dimension."""

    points: np.ndarray  # (m, n)
    ps: np.ndarray      # (m,)
    dimension: int

    def __init__(self, atoms, dimension: int):
        dimension = int(dimension)
        if dimension < 1:
            raise DomainError("dimension must be positive")
        pts = np.asarray([a[0] for a in atoms], dtype=float)
        ps = np.asarray([a[1] for a in atoms], dtype=float)
        if pts.ndim != 2 or pts.shape[1] != dimension:
            raise DomainError("all vectors must have the declared dimension")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(ps))):
            raise DomainError("atoms and probabilities must be finite")
        if np.any(ps < 0.0):
            raise DomainError("probabilities must be nonnegative")
        keep = ps > 0.0
        pts, ps = pts[keep], ps[keep]
        if pts.shape[0] == 0:
            raise DomainError("all atoms have zero probability")
        if abs(float(ps.sum()) - 1.0) > PROB_TOL:
            raise DomainError("probabilities must sum to 1 within 1e-12")
        # canonical order: lexicographic over coordinates; merge duplicates
        order = np.lexsort(pts.T[::-1])
        pts, ps = pts[order], ps[order]
        out_pts, out_ps = [pts[0]], [ps[0]]
        for v, p in zip(pts[1:], ps[1:]):
            if np.array_equal(v, out_pts[-1]):
                out_ps[-1] += p
            else:
                out_pts.append(v)
                out_ps.append(p)
        object.__setattr__(self, "points", np.array(out_pts))
        object.__setattr__(self, "ps", np.array(out_ps))
        object.__setattr__(self, "dimension", dimension)

    def mean(self) -> np.ndarray:
        return self.points.T @ self.ps

    def second_moment(self) -> np.ndarray:
        return (self.points.T * self.ps) @ self.points

    def cov(self) -> np.ndarray:
        m = self.mean()
        return self.second_moment() - np.outer(m, m)

    def project(self, direction) -> DiscreteDistribution1D:
        v = np.asarray(direction, dtype=float)
        return DiscreteDistribution1D.from_arrays(self.points @ v, self.ps)

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dimension,
            "atoms": [
                {"x": [float(c) for c in v], "p": float(p)}
                for v, p in zip(self.points, self.ps)
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "DiscreteDistributionVec":
        try:
            dim = data["dim"]
            atoms = [(entry["x"], entry["p"]) for entry in data["atoms"]]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed vector distribution JSON: {exc}") from exc
        return cls(atoms, dim)

    @classmethod
    def from_json(cls, text: str) -> "DiscreteDistributionVec":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class SubgaussianCertificate:
    """Minimal kappa plus the tail threshold and direction attaining it."""

    kappa: float
    worst_t: float
    direction: np.ndarray = field(default_factory=lambda: np.array([1.0]))

    def tail_bound(self, t):
        if self.kappa == 0.0:
            t = np.asarray(t, dtype=float)
            out = np.where(t > 0, 0.0, 2.0)
            return float(out) if out.ndim == 0 else out
        return 2.0 * np.exp(-np.asarray(t, dtype=float) ** 2 / (2.0 * self.kappa**2))


def _kappa_1d(dist: DiscreteDistribution1D):
    """Exact minimal kappa for a 1D atomic law.

    The two-sided tail P[|X| >= t] is constant between atom magnitudes, so
    t^2 / (2 log(2 / tail(t))) is maximized exactly at the magnitudes.
    """
    mags = np.abs(dist.xs)
    order = np.argsort(mags, kind="stable")
    mags_sorted = mags[order]
    ps_sorted = dist.ps[order]
    # tail at magnitude m: total mass with |x| >= m
    suffix = np.cumsum(ps_sorted[::-1])[::-1]
    best_k2 = 0.0
    worst_t = 0.0
    i = 0
    n = mags_sorted.size
    while i < n:
        j = i
        while j + 1 < n and mags_sorted[j + 1] == mags_sorted[i]:
            j += 1
        m = mags_sorted[i]
        if m > 0.0:
            tail = float(suffix[i])
            k2 = m * m / (2.0 * math.log(2.0 / tail))
            if k2 > best_k2:
                best_k2 = k2
                worst_t = m
        i = j + 1
    return math.sqrt(best_k2), worst_t


def subgaussian_norm(dist, direction_grid=None) -> SubgaussianCertificate:
    """Minimal kappa for the two-sided tail bound, exact in 1D.

    For vector input the audit runs over the provided unit directions and is
    exact per direction (projections are again atomic 1D laws).
    """
    if isinstance(dist, DiscreteDistribution1D):
        kappa, worst_t = _kappa_1d(dist)
        return SubgaussianCertificate(kappa, worst_t, np.array([1.0]))
    if isinstance(dist, DiscreteDistributionVec):
        if not direction_grid:
            raise DomainError("vector input requires a nonempty direction grid")
        best = SubgaussianCertificate(0.0, 0.0, np.asarray(direction_grid[0], dtype=float))
        for v in direction_grid:
            v = np.asarray(v, dtype=float)
            norm = float(np.linalg.norm(v))
            if not math.isclose(norm, 1.0, rel_tol=0, abs_tol=1e-9):
                raise DomainError("direction grid entries must be unit vectors")
            kappa, worst_t = _kappa_1d(dist.project(v))
            if kappa > best.kappa:
                best = SubgaussianCertificate(kappa, worst_t, v)
        return best
    raise DomainError(f"unsupported distribution type {type(dist)!r}")
