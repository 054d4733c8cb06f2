"""Geometric checks: the ellipsoid-covariance game and set-sum measures.

The central object is the finite two-player game on a symmetric point set S:
covariance player picks a symmetric probability measure mu on S (minimizing
the operator norm of its covariance), ellipsoid player picks a PSD matrix Q
of fixed trace (maximizing the smallest quadratic value over S).  Both
optimal values coincide; the solver certifies them from both sides with a
cutting-plane scheme whose certificates are a feasible measure (upper side)
and a feasible trace-normalized matrix (lower side).

Also here: Monte Carlo Gaussian measure of ellipsoids, the largest symmetric
interval inside A + A for unions of 1D intervals, and the isoperimetric
neighborhood-measure check for half-spaces and small grid sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.optimize import linprog

from .errors import DomainError, InternalError
from .normal import std_normal_cdf
from .rng import RandomSource


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EllipsoidSpec:
    """Ellipsoid {x : x^T Q x <= 1}; its trace is the trace of Q."""

    q_matrix: np.ndarray
    trace: float

    def __init__(self, q_matrix):
        q = np.asarray(q_matrix, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise DomainError("Q must be a square matrix")
        if not np.allclose(q, q.T, atol=1e-12):
            raise DomainError("Q must be symmetric")
        if float(np.linalg.eigvalsh(q)[0]) < -1e-12:
            raise DomainError("Q must be positive semidefinite")
        object.__setattr__(self, "q_matrix", q)
        object.__setattr__(self, "trace", float(np.trace(q)))

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        vals = np.einsum("ij,jk,ik->i", x, self.q_matrix, x)
        return vals <= 1.0


@dataclass(frozen=True)
class GameSolution:
    """Two-sided certificate for the trace-constrained minimax game."""

    q_star: EllipsoidSpec
    mu_star: np.ndarray          # symmetric probability vector over the input points
    primal_value: float          # min_s s^T Q* s for the feasible Q* (lower side)
    dual_value: float            # tau * ||Cov(mu*)|| for the feasible mu* (upper side)
    gap: float
    converged: bool


# ---------------------------------------------------------------------------
# symmetric point sets
# ---------------------------------------------------------------------------

def _symmetric_pairs(points: np.ndarray):
    """Group a symmetric point set into antipodal pair representatives.

    Returns (reps, pair_index) where pair_index[i] is the pair of point i.
    The origin, if present, forms its own (self-paired) entry.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise DomainError("point set must be a nonempty (m, n) array")
    index = {tuple(p): i for i, p in enumerate(points)}
    if len(index) != points.shape[0]:
        raise DomainError("point set contains duplicates")
    pair_index = -np.ones(points.shape[0], dtype=np.int64)
    reps = []
    for i, p in enumerate(points):
        if pair_index[i] >= 0:
            continue
        key = tuple(-p)
        if key not in index:
            raise DomainError("point set is not symmetric (missing an antipode)")
        j = index[key]
        pair_index[i] = len(reps)
        pair_index[j] = len(reps)
        reps.append(p)
    return np.array(reps), pair_index


def _top_eigvec(M: np.ndarray) -> tuple:
    vals, vecs = np.linalg.eigh(M)
    u = vecs[:, -1]
    # deterministic sign: first nonzero component positive
    for c in u:
        if c != 0.0:
            if c < 0:
                u = -u
            break
    return float(vals[-1]), u


def _solve_game(points: np.ndarray, gap_tol: float = 1e-8, max_iter: int = 500):
    """Cutting-plane solve of min over symmetric mu of ||Cov(mu)||.

    Maintains a direction set U; the restricted problem (an LP over pair
    weights) lower-bounds the value, the best iterate upper-bounds it, and
    the LP duals give a density matrix certifying the lower side.
    """
    reps, pair_index = _symmetric_pairs(points)
    n = points.shape[1]
    P = reps.shape[0]

    def quad_coeffs(u):
        return (reps @ u) ** 2  # <s_p, u>^2 per pair

    U = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        U.append(e)
    M0 = (reps.T * np.full(P, 1.0 / P)) @ reps
    _, u0 = _top_eigvec(M0)
    U.append(u0)

    best_w = np.full(P, 1.0 / P)
    best_upper, _ = _top_eigvec((reps.T * best_w) @ reps)
    best_lower = -math.inf
    best_Y = np.eye(n) / n
    converged = False
    for _ in range(max_iter):
        rows = np.array([quad_coeffs(u) for u in U])
        A_ub = np.hstack([rows, -np.ones((rows.shape[0], 1))])
        b_ub = np.zeros(rows.shape[0])
        A_eq = np.hstack([np.ones((1, P)), np.zeros((1, 1))])
        c = np.zeros(P + 1)
        c[-1] = 1.0
        bounds = [(0.0, None)] * P + [(None, None)]
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                      bounds=bounds, method="highs")
        if not res.success:
            raise InternalError(f"restricted game LP failed: {res.message}")
        w = np.maximum(res.x[:P], 0.0)
        w = w / w.sum()
        M = (reps.T * w) @ reps
        lam, u_new = _top_eigvec(M)
        if lam < best_upper:
            best_upper = lam
            best_w = w
        duals = getattr(res, "ineqlin", None)
        if duals is not None and duals.marginals is not None:
            lam_u = np.maximum(-np.asarray(duals.marginals), 0.0)
            total = lam_u.sum()
            if total > 0:
                lam_u = lam_u / total
                Y = sum(l * np.outer(u, u) for l, u in zip(lam_u, U))
                lower_cert = float(min(quad_coeffs_matrix(reps, Y)))
                if lower_cert > best_lower:
                    best_lower = lower_cert
                    best_Y = Y
        # converge only on the recomputed two-sided certificates, never on
        # the LP's internal optimum, so the reported gap honors the tolerance
        if best_upper - best_lower <= gap_tol:
            converged = True
            break
        U.append(u_new)
    return reps, pair_index, best_w, best_upper, best_lower, best_Y, converged


def quad_coeffs_matrix(reps: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return np.einsum("ij,jk,ik->i", reps, Y, reps)


def min_cov_norm(points, gap_tol: float = 1e-8, max_iter: int = 500):
    """Minimal ||Cov(mu)|| over symmetric probability measures on the set.

    Returns (mu, value): mu is the optimal symmetric weight vector over the
    input points (antipodes share mass), value the achieved operator norm.
    """
    points = np.asarray(points, dtype=float)
    reps, pair_index, w, upper, _, _, _ = _solve_game(points, gap_tol, max_iter)
    mu = np.empty(points.shape[0])
    for i in range(points.shape[0]):
        p = pair_index[i]
        self_paired = np.array_equal(points[i], -points[i])
        mu[i] = w[p] if self_paired else w[p] / 2.0
    return mu, float(upper)


def ellipsoid_game(points, tau: float, gap_tol: float = 1e-6, max_iter: int = 500) -> GameSolution:
    """Certify both sides of the trace-tau game on a symmetric point set.

    dual side: tau * ||Cov(mu*)|| for the best symmetric measure found;
    primal side: min_s s^T Q* s for the feasible Q* = tau * Y*; weak duality
    (primal <= dual) is asserted.
    """
    if tau <= 0:
        raise DomainError("tau must be positive")
    points = np.asarray(points, dtype=float)
    reps, pair_index, w, upper, lower, Y, converged = _solve_game(
        points, gap_tol / tau, max_iter
    )
    mu = np.empty(points.shape[0])
    for i in range(points.shape[0]):
        p = pair_index[i]
        self_paired = np.array_equal(points[i], -points[i])
        mu[i] = w[p] if self_paired else w[p] / 2.0
    q_star = EllipsoidSpec(tau * Y)
    primal = float(tau * min(quad_coeffs_matrix(reps, Y)))
    dual = float(tau * upper)
    if primal > dual + 1e-9:
        raise InternalError("weak duality violated by certificates")
    return GameSolution(
        q_star=q_star,
        mu_star=mu,
        primal_value=primal,
        dual_value=dual,
        gap=abs(dual - primal),
        converged=converged,
    )


@dataclass(frozen=True)
class IntersectionVerdict:
    """Trace-tau intersection certificate (verdict None = indeterminate)."""

    verdict: bool | None
    min_cov_value: float
    threshold: float
    witness_mu: np.ndarray | None
    witness_q: EllipsoidSpec | None


def ellipsoid_intersects(points, tau: float, gap_tol: float = 1e-6) -> IntersectionVerdict:
    """Does every trace-tau ellipsoid intersect the symmetric set?

    True iff some symmetric measure has covariance norm at most 1/tau (the
    measure is the witness); false is certified by a feasible ellipsoid whose
    quadratic exceeds 1 on the whole set.  A band of 10 * gap_tol around the
    threshold is reported as indeterminate.
    """
    if tau <= 0:
        raise DomainError("tau must be positive")
    points = np.asarray(points, dtype=float)
    reps, pair_index, w, upper, lower, Y, _ = _solve_game(points, gap_tol)
    threshold = 1.0 / tau
    band = 10.0 * gap_tol
    mu = np.empty(points.shape[0])
    for i in range(points.shape[0]):
        p = pair_index[i]
        self_paired = np.array_equal(points[i], -points[i])
        mu[i] = w[p] if self_paired else w[p] / 2.0
    if upper <= threshold - band:
        return IntersectionVerdict(True, float(upper), threshold, mu, None)
    lower_cert = float(min(quad_coeffs_matrix(reps, Y)))
    if lower_cert > threshold + band:
        q = EllipsoidSpec(tau * Y)
        return IntersectionVerdict(False, float(upper), threshold, None, q)
    return IntersectionVerdict(None, float(upper), threshold, mu, None)


# ---------------------------------------------------------------------------
# Gaussian measures
# ---------------------------------------------------------------------------

def gaussian_measure_ellipsoid(E: EllipsoidSpec, nsamples: int, rng: RandomSource):
    """Monte Carlo gamma_n({x^T Q x <= 1}) with binomial stderr."""
    if nsamples < 10**4:
        raise DomainError("need at least 1e4 samples")
    n = E.q_matrix.shape[0]
    gen = rng.generator()
    hits = 0
    remaining = int(nsamples)
    chunk = 1 << 16
    while remaining > 0:
        m = min(chunk, remaining)
        z = gen.standard_normal((m, n))
        vals = np.einsum("ij,jk,ik->i", z, E.q_matrix, z)
        hits += int(np.count_nonzero(vals <= 1.0))
        remaining -= m
    p = hits / nsamples
    stderr = math.sqrt(p * (1.0 - p) / nsamples)
    return p, stderr


# ---------------------------------------------------------------------------
# interval sums
# ---------------------------------------------------------------------------

def _merge_intervals(intervals):
    ivs = sorted((float(a), float(b)) for a, b in intervals)
    merged = []
    for a, b in ivs:
        if b < a:
            raise DomainError(f"empty interval ({a}, {b})")
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


def gaussian_measure_intervals(intervals) -> float:
    return sum(std_normal_cdf(b) - std_normal_cdf(a) for a, b in _merge_intervals(intervals))


def steinhaus_interval(intervals, measure_tol: float = 1e-9) -> float:
    """Largest delta with [-delta, delta] inside A + A, A a 1D interval union.

    Requires gamma_1(A) >= 2/3; the Minkowski sum of interval unions is
    computed exactly.  Returns math.inf when A + A covers the line around 0
    without bound.
    """
    A = _merge_intervals(intervals)
    measure = gaussian_measure_intervals(A)
    if measure < 2.0 / 3.0 - measure_tol:
        raise DomainError(f"gamma_1(A) = {measure:.6g} is below 2/3")
    sums = []
    for a1, b1 in A:
        for a2, b2 in A:
            sums.append((a1 + a2, b1 + b2))
    merged = _merge_intervals(sums)
    for a, b in merged:
        if a <= 0.0 <= b:
            left = math.inf if a == -math.inf else -a
            right = math.inf if b == math.inf else b
            return min(left, right)
    raise InternalError("A + A does not contain 0 despite the measure gate")


# ---------------------------------------------------------------------------
# neighborhood measure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HalfSpace:
    """{x : <normal, x> >= offset}."""

    normal: np.ndarray
    offset: float

    def __init__(self, normal, offset: float):
        v = np.asarray(normal, dtype=float)
        nrm = float(np.linalg.norm(v))
        if nrm == 0.0:
            raise DomainError("half-space normal must be nonzero")
        object.__setattr__(self, "normal", v / nrm)
        object.__setattr__(self, "offset", float(offset) / nrm)

    @property
    def dimension(self) -> int:
        return self.normal.size

    def gaussian_measure(self) -> float:
        return float(std_normal_cdf(-self.offset))

    def distance(self, x: np.ndarray) -> np.ndarray:
        vals = x @ self.normal
        return np.maximum(self.offset - vals, 0.0)


@dataclass(frozen=True)
class GridSet:
    """Axis-aligned occupancy grid in dimension <= 3 (desk-scale sets).

    Cell (i1,..,in) covers origin + h*[i, i+1); distances are measured
    between cell centers (resolution-limited, documented desk approximation).
    """

    origin: np.ndarray
    cell: float
    mask: np.ndarray

    def __init__(self, origin, cell: float, mask):
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim > 3:
            raise DomainError("grid sets support dimension <= 3")
        if not mask.any():
            raise DomainError("grid set is empty")
        object.__setattr__(self, "origin", np.asarray(origin, dtype=float))
        object.__setattr__(self, "cell", float(cell))
        object.__setattr__(self, "mask", mask)

    @property
    def dimension(self) -> int:
        return self.mask.ndim

    def gaussian_measure(self) -> float:
        """Exact Gaussian mass of the occupied cells (product of Phi gaps)."""
        total = 0.0
        it = np.ndindex(self.mask.shape)
        for idx in it:
            if not self.mask[idx]:
                continue
            mass = 1.0
            for axis, i in enumerate(idx):
                lo = self.origin[axis] + i * self.cell
                mass *= std_normal_cdf(lo + self.cell) - std_normal_cdf(lo)
            total += mass
        return total

    def distance(self, x: np.ndarray) -> np.ndarray:
        edt = ndimage.distance_transform_edt(~self.mask) * self.cell
        centers = (x - self.origin) / self.cell - 0.5
        idx = np.clip(np.round(centers).astype(np.int64), 0,
                      np.array(self.mask.shape) - 1)
        clip_gap = np.linalg.norm(
            (centers - idx) * self.cell, axis=-1
        ) - math.sqrt(self.dimension) * self.cell
        base = edt[tuple(idx.T)]
        return np.maximum(base, 0.0) + np.maximum(clip_gap, 0.0)


@dataclass(frozen=True)
class NeighborhoodReport:
    base_measure: float
    estimate: float
    stderr: float
    bound: float
    passed: bool


def neighborhood_measure_check(
    S, D: float, nsamples: int, rng: RandomSource
) -> NeighborhoodReport:
    """Estimate gamma_n(S + B(0, D)) and compare with 1 - 2 exp(-D^2/2).

    S must have Gaussian measure at least 1/2 (certified from its exact
    measure); membership in the neighborhood tests distance(S, x) <= D.
    """
    if D < 0:
        raise DomainError("D must be nonnegative")
    base = S.gaussian_measure()
    if base < 0.5 - 1e-9:
        raise DomainError(f"gamma_n(S) = {base:.6g} is below 1/2")
    n = S.dimension
    gen = rng.generator()
    hits = 0
    remaining = int(nsamples)
    chunk = 1 << 16
    while remaining > 0:
        m = min(chunk, remaining)
        z = gen.standard_normal((m, n))
        hits += int(np.count_nonzero(S.distance(z) <= D))
        remaining -= m
    p = hits / nsamples
    stderr = math.sqrt(max(p * (1.0 - p), 1e-12) / nsamples)
    bound = 1.0 - 2.0 * math.exp(-D * D / 2.0)
    return NeighborhoodReport(
        base_measure=base,
        estimate=p,
        stderr=stderr,
        bound=bound,
        passed=bool(p >= bound - 3.0 * stderr),
    )
