"""Monotone 1D maps pushing the standard Gaussian to a target density.

A map is stored as a nondecreasing table (knots, values) with a Lipschitz
certificate (the maximum finite-difference slope) and its mean under the
standard Gaussian.  Affine maps carry an exact fast path so that identity-like
maps evaluate and differentiate without interpolation noise: the degenerate
splits they induce downstream are then exact as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

SQRT2 = math.sqrt(2.0)


@lru_cache(maxsize=16)
def gauss_hermite(n: int):
    """Physicists' Gauss-Hermite nodes/weights (cached, deterministic)."""
    nodes, weights = np.polynomial.hermite.hermgauss(int(n))
    return nodes, weights


def _gh_average(values_2d, weights):
    """Normalized GH average along the last axis.

    Normalizing by the weights' own dot keeps constant inputs exactly fixed
    (dot(w, c*1)/dot(w, 1) == c for c encoded as a constant array).
    """
    num = values_2d @ weights
    den = np.ones(weights.size) @ weights
    return num / den


@dataclass(frozen=True)
class TransportMap1D:
    """Tabulated nondecreasing map with Lipschitz certificate.

    knots/values define piecewise-linear evaluation with constant extension
    beyond the table; `affine` (a, b), when set, bypasses the table with the
    exact map x -> a*x + b.
    """

    knots: np.ndarray
    values: np.ndarray
    lipschitz_certificate: float
    mean_under_gamma: float
    affine: tuple | None = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_table(cls, knots, values, quad_nodes: int = 128) -> "TransportMap1D":
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.ndim != 1 or knots.size < 2 or knots.shape != values.shape:
            raise DomainError("need aligned 1D knot/value tables with >= 2 entries")
        if np.any(np.diff(knots) <= 0):
            raise DomainError("knots must be strictly increasing")
        if np.any(np.diff(values) < 0):
            raise DomainError("values must be nondecreasing")
        slopes = np.diff(values) / np.diff(knots)
        lip = float(np.max(slopes)) if slopes.size else 0.0
        mean = _mean_under_gamma_table(knots, values, quad_nodes)
        return cls(knots, values, lip, mean, None)

    @classmethod
    def from_affine(cls, a: float, b: float = 0.0, half_range: float = 8.0) -> "TransportMap1D":
        if a < 0:
            raise DomainError("affine transports must be nondecreasing (a >= 0)")
        knots = np.linspace(-half_range, half_range, 9)
        return cls(knots, a * knots + b, float(a), float(b), (float(a), float(b)))

    @classmethod
    def identity(cls, half_range: float = 8.0) -> "TransportMap1D":
        return cls.from_affine(1.0, 0.0, half_range)

    @classmethod
    def tabulate(cls, fn, lo: float = -8.0, hi: float = 8.0, n: int = 4097) -> "TransportMap1D":
        knots = np.linspace(lo, hi, n)
        return cls.from_table(knots, np.asarray(fn(knots), dtype=float))

    # -- evaluation --------------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.affine is not None:
            a, b = self.affine
            out = a * x + b
            return float(out) if out.ndim == 0 else out
        out = np.interp(x, self.knots, self.values)
        return float(out) if out.ndim == 0 else out

    def slopes(self) -> np.ndarray:
        """Per-cell finite-difference slopes (piecewise-constant derivative)."""
        if self.affine is not None:
            a, _ = self.affine
            return np.full(self.knots.size - 1, a)
        return np.diff(self.values) / np.diff(self.knots)

    def derivative_at(self, x):
        """Derivative lookup (cells are clamped; outside the table it is 0
        for tabulated maps by constant extension, `a` for affine maps)."""
        x = np.asarray(x, dtype=float)
        if self.affine is not None:
            out = np.full_like(x, self.affine[0], dtype=float)
            return float(out) if out.ndim == 0 else out
        sl = self.slopes()
        idx = np.clip(np.searchsorted(self.knots, x, side="right") - 1, 0, sl.size - 1)
        out = sl[idx]
        inside = (x >= self.knots[0]) & (x <= self.knots[-1])
        out = np.where(inside, out, 0.0)
        return float(out) if out.ndim == 0 else out

    # -- heat smoothing ----------------------------------------------------

    def smoothed_value(self, sigma: float, x, quad_nodes: int = 64):
        """E[F(x + sigma Z)], Z ~ N(0,1), by Gauss-Hermite quadrature."""
        if sigma == 0.0 or self.affine is not None:
            # the heat semigroup fixes affine maps
            return self(x)
        scalar = np.ndim(x) == 0
        nodes, weights = gauss_hermite(quad_nodes)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        pts = x[:, None] + (SQRT2 * sigma) * nodes[None, :]
        vals = self(pts.ravel()).reshape(pts.shape)
        out = _gh_average(vals, weights)
        return float(out[0]) if scalar else out

    def smoothed_gradient(self, sigma: float, x, quad_nodes: int = 64):
        """d/dx E[F(x + sigma Z)] = E[F'(x + sigma Z)].

        Averaging tabulated slopes keeps the result within the Lipschitz
        certificate exactly (a convex combination of bounded slopes).
        """
        if self.affine is not None:
            a, _ = self.affine
            x = np.asarray(x, dtype=float)
            out = np.full_like(x, a, dtype=float)
            return float(out) if out.ndim == 0 else out
        scalar = np.ndim(x) == 0
        nodes, weights = gauss_hermite(quad_nodes)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        pts = x[:, None] + (SQRT2 * sigma) * nodes[None, :]
        vals = self.derivative_at(pts.ravel()).reshape(pts.shape)
        out = _gh_average(vals, weights)
        return float(out[0]) if scalar else out


def _mean_under_gamma_table(knots, values, quad_nodes: int) -> float:
    nodes, weights = gauss_hermite(quad_nodes)
    pts = SQRT2 * nodes
    vals = np.interp(pts, knots, values)
    return float(_gh_average(vals[None, :], weights)[0])
