"""Desk-scale high-dimensional constructions.

Three groups of machinery:

* the centered-simplex vector family scaled by sqrt(log d), its Gaussian
  argmax regions, and Monte Carlo verification that the conditional mean in
  each region is a dimension-stable multiple of the region's vector;

* partitions of a vector family into parts whose averaged outer-product sums
  have small operator norm, found by exhaustive search at small sizes and by
  restarted local search otherwise, always returning recomputable
  certificates (a search miss raises a budget error, never a fake result);

* the factorization scaffolding writing each atom of a bounded-norm,
  small-covariance vector law as a bounded linear map applied to a scaled
  standard basis vector of its part.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dists import DiscreteDistributionVec
from .errors import DomainError, InternalError, SearchBudgetExceeded
from .linalg import power_iteration_norm
from .rng import RandomSource

SIZE_FACTOR_LOW = 3.0       # parts must have size strictly above k/3
SIZE_FACTOR_HIGH = 5050.0   # and strictly below 5050 k
NORM_FACTOR = 50.0          # averaged part Gram norm at most 50/k


# ---------------------------------------------------------------------------
# simplex construction
# ---------------------------------------------------------------------------

def _helmert_basis(d: int) -> np.ndarray:
    """Rows k = 1..d-1: (1,...,1,-k,0,...)/sqrt(k(k+1)); orthonormal basis
    of the zero-sum hyperplane in R^d, returned as a (d-1, d) matrix."""
    B = np.zeros((d - 1, d))
    for k in range(1, d):
        B[k - 1, :k] = 1.0
        B[k - 1, k] = -k
        B[k - 1] /= math.sqrt(k * (k + 1))
    return B


@dataclass
class SimplexConstruction:
    """Centered simplex directions in their own (d-1)-dimensional frame."""

    d: int
    vectors: np.ndarray          # (d, d-1); row j is v_j in the span frame
    c_d: float | None = None
    c_d_stderr: float | None = None

    @property
    def vector_norm_sq(self) -> float:
        return math.log(self.d) * (1.0 - 1.0 / self.d)


def simplex_vectors(d: int) -> SimplexConstruction:
    """The d vectors sqrt(log d) * (e_j - centroid), in an orthonormal frame
    of their zero-sum span."""
    if d < 2:
        raise DomainError("need d >= 2")
    B = _helmert_basis(d)
    # <v_j, b_k> = sqrt(log d) * b_k[j] because each basis row sums to zero
    vecs = math.sqrt(math.log(d)) * B.T.copy()
    return SimplexConstruction(d=d, vectors=vecs)


def region_index(z, construction: SimplexConstruction) -> int:
    """argmax_j <z, v_j>, ties resolved to the lowest index (0-based)."""
    z = np.asarray(z, dtype=float)
    scores = construction.vectors @ z
    return int(np.argmax(scores))


def _region_argmax(construction: SimplexConstruction, G: np.ndarray) -> np.ndarray:
    return np.argmax(G @ construction.vectors.T, axis=1)


def estimate_cd(
    construction: SimplexConstruction, nsamples: int, rng: RandomSource
):
    """Monte Carlo estimate of the conditional-mean coefficient.

    For standard Gaussian G and its argmax region j, the projection
    <G, v_j>/||v_j||^2 has mean c_d by symmetry; the component of the
    conditional mean orthogonal to v_j must vanish, which is audited along a
    deterministic probe direction per region (3 sigma).
    """
    if nsamples < 10**4:
        raise DomainError("need at least 1e4 samples")
    d = construction.d
    k = d - 1
    vn2 = construction.vector_norm_sq
    gen = rng.generator()
    t_sum = 0.0
    t_sq = 0.0
    probe_sum = np.zeros(d)
    probe_sq = np.zeros(d)
    counts = np.zeros(d, dtype=np.int64)
    probes = _orthogonal_probes(construction)
    chunk = 1 << 16
    remaining = int(nsamples)
    while remaining > 0:
        m = min(chunk, remaining)
        G = gen.standard_normal((m, k))
        reg = _region_argmax(construction, G)
        t = np.einsum("ij,ij->i", G, construction.vectors[reg]) / vn2
        t_sum += float(t.sum())
        t_sq += float((t * t).sum())
        resid = G - t[:, None] * construction.vectors[reg]
        proj = np.einsum("ij,ij->i", resid, probes[reg])
        np.add.at(probe_sum, reg, proj)
        np.add.at(probe_sq, reg, proj * proj)
        np.add.at(counts, reg, 1)
        remaining -= m
    n = int(nsamples)
    c_d = t_sum / n
    var = max(t_sq / n - c_d * c_d, 0.0)
    stderr = math.sqrt(var / n)
    for j in range(d):
        if counts[j] < 2:
            continue
        mean_j = probe_sum[j] / counts[j]
        var_j = max(probe_sq[j] / counts[j] - mean_j**2, 0.0)
        se_j = math.sqrt(var_j / counts[j])
        if abs(mean_j) > 3.0 * se_j + 1e-12:
            raise InternalError(
                f"orthogonal component of conditional mean in region {j} "
                f"is {mean_j:.3e} ({abs(mean_j) / max(se_j, 1e-300):.2f} sigma)"
            )
    construction.c_d = c_d
    construction.c_d_stderr = stderr
    return c_d, stderr


def _orthogonal_probes(construction: SimplexConstruction) -> np.ndarray:
    """One deterministic unit probe per region, orthogonal to that region's
    vector (zero probe in d = 2 where the span is one-dimensional)."""
    d, k = construction.d, construction.d - 1
    probes = np.zeros((d, k))
    if k < 2:
        return probes
    for j in range(d):
        v = construction.vectors[j]
        base = np.zeros(k)
        base[(j + 1) % k] = 1.0
        w = base - (base @ v) / (v @ v) * v
        norm = np.linalg.norm(w)
        if norm < 1e-12:
            base = np.zeros(k)
            base[(j + 2) % k] = 1.0
            w = base - (base @ v) / (v @ v) * v
            norm = np.linalg.norm(w)
        probes[j] = w / norm
    return probes


@dataclass(frozen=True)
class BesselReport:
    """Distributional audit of the region decomposition G = c_d v_R + Y."""

    d: int
    nsamples: int
    c_d: float
    region_counts: np.ndarray
    freq_max_sigmas: float
    frequencies_uniform_3sigma: bool
    y_mean_max_sigmas: float
    y_mean_centered_3sigma: bool
    e_norm2_y: float


def bessel_identity_check(
    construction: SimplexConstruction, nsamples: int, rng: RandomSource
) -> BesselReport:
    """Simulate G, split off c_d * v_region, and audit the pieces.

    G - Y lands on the d scaled vertices with uniform frequencies (3 sigma
    binomial per region) and the residual Y is centered (3 sigma per
    coordinate); E||Y||^2 is reported.
    """
    if construction.c_d is None:
        raise DomainError("estimate c_d before the identity check")
    d, k = construction.d, construction.d - 1
    c_d = construction.c_d
    gen = rng.generator()
    counts = np.zeros(d, dtype=np.int64)
    y_sum = np.zeros(k)
    y_sq = np.zeros(k)
    norm2_sum = 0.0
    chunk = 1 << 16
    remaining = int(nsamples)
    while remaining > 0:
        m = min(chunk, remaining)
        G = gen.standard_normal((m, k))
        reg = _region_argmax(construction, G)
        np.add.at(counts, reg, 1)
        Y = G - c_d * construction.vectors[reg]
        y_sum += Y.sum(axis=0)
        y_sq += (Y * Y).sum(axis=0)
        norm2_sum += float((Y * Y).sum())
        remaining -= m
    n = int(nsamples)
    p = 1.0 / d
    freq_sigma = math.sqrt(p * (1 - p) / n)
    freq_dev = np.abs(counts / n - p) / freq_sigma
    y_mean = y_sum / n
    y_se = np.sqrt(np.maximum(y_sq / n - y_mean**2, 0.0) / n)
    y_sigmas = np.abs(y_mean) / np.maximum(y_se, 1e-300)
    return BesselReport(
        d=d,
        nsamples=n,
        c_d=c_d,
        region_counts=counts,
        freq_max_sigmas=float(freq_dev.max()),
        frequencies_uniform_3sigma=bool(freq_dev.max() <= 3.0),
        y_mean_max_sigmas=float(y_sigmas.max()),
        y_mean_centered_3sigma=bool(y_sigmas.max() <= 3.0),
        e_norm2_y=norm2_sum / n,
    )


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

def part_gram_norm(vectors: np.ndarray, part) -> float:
    """|| (1/|T|) sum_{i in T} v_i v_i^T || recomputed deterministically."""
    part = list(part)
    sub = vectors[part]
    gram = sub.T @ sub / len(part)
    return power_iteration_norm(gram)


# ---------------------------------------------------------------------------
# partitions with certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PartitionResult:
    """Partition with recomputable size/norm certificates."""

    parts: tuple                 # tuple of tuples of indices
    per_part_norm: tuple         # matching averaged-Gram norms
    sizes: tuple
    search_strategy: str
    k: int

    def certified(self) -> bool:
        lo = self.k / SIZE_FACTOR_LOW
        hi = SIZE_FACTOR_HIGH * self.k
        bound = NORM_FACTOR / self.k
        sizes_ok = all(lo < s < hi for s in self.sizes)
        norms_ok = all(nrm <= bound + 1e-12 for nrm in self.per_part_norm)
        return sizes_ok and norms_ok

    def verify(self, vectors) -> bool:
        """Recompute certificates; bit-exact match against stored values."""
        vectors = np.asarray(vectors, dtype=float)
        for part, nrm, size in zip(self.parts, self.per_part_norm, self.sizes):
            if len(part) != size:
                return False
            if part_gram_norm(vectors, part) != nrm:
                return False
        all_idx = sorted(i for part in self.parts for i in part)
        return all_idx == list(range(vectors.shape[0]))

    def to_json_dict(self) -> dict:
        return {
            "parts": [list(p) for p in self.parts],
            "per_part_norm": list(self.per_part_norm),
            "sizes": list(self.sizes),
            "search_strategy": self.search_strategy,
            "k": self.k,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "PartitionResult":
        return cls(
            parts=tuple(tuple(int(i) for i in p) for p in data["parts"]),
            per_part_norm=tuple(float(v) for v in data["per_part_norm"]),
            sizes=tuple(int(s) for s in data["sizes"]),
            search_strategy=str(data["search_strategy"]),
            k=int(data["k"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PartitionResult":
        return cls.from_json_dict(json.loads(text))


def _validate_partition_input(vectors, k):
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2 or vectors.shape[0] == 0:
        raise DomainError("vectors must form a nonempty (m, n) array")
    m, _ = vectors.shape
    k = int(k)
    if k < 1:
        raise DomainError("k must be positive")
    if m < k:
        raise DomainError("need at least k vectors")
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms > 1.0 + 1e-12):
        raise DomainError("all vectors must have norm at most 1")
    gram = vectors.T @ vectors / m
    lam = float(np.linalg.eigvalsh(gram)[-1])
    if lam > 1.0 / k + 1e-10:
        raise DomainError(
            f"mean outer-product norm {lam:.6g} exceeds 1/k = {1.0 / k:.6g}"
        )
    return vectors, k


def _batched_max_norm(grams: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Max over parts of lambda_max(gram)/size for stacked (B, r, n, n)."""
    B, r, n, _ = grams.shape
    flat = grams.reshape(B * r, n, n)
    if n == 1:
        lam = flat[:, 0, 0]
    elif n == 2:
        a, b, d2 = flat[:, 0, 0], flat[:, 0, 1], flat[:, 1, 1]
        half = 0.5 * (a + d2)
        lam = half + np.sqrt(np.maximum(0.25 * (a - d2) ** 2 + b * b, 0.0))
    else:
        lam = np.linalg.eigvalsh(flat)[:, -1]
    lam = lam.reshape(B, r)
    return (lam / sizes).max(axis=1)


def _exhaustive_partition(vectors, k, r, min_size):
    """Optimal r-part partition minimizing the max averaged-Gram norm.

    Enumerates restricted-growth strings (canonical set partitions) into
    exactly r parts, skipping leaves with undersized parts; ties at 1e-9 keep
    the earliest candidate, so the canonical order is the tie-break.
    """
    m, n = vectors.shape
    if r < 1 or m < r * min_size:
        raise DomainError("infeasible part sizes for exhaustive search")
    best_assign = None
    best_val = math.inf
    buffer_assign = []
    buffer_grams = []
    buffer_sizes = []

    def flush():
        nonlocal best_assign, best_val
        if not buffer_assign:
            return
        grams = np.array(buffer_grams)
        sizes = np.array(buffer_sizes, dtype=float)
        vals = _batched_max_norm(grams, sizes)
        i = int(np.argmin(vals))
        # strict tolerance keeps the first candidate among numerical ties
        if vals[i] < best_val - 1e-9:
            best_val = float(vals[i])
            best_assign = buffer_assign[i]
        buffer_assign.clear()
        buffer_grams.clear()
        buffer_sizes.clear()

    assign = np.zeros(m, dtype=np.int64)
    grams = np.zeros((r, n, n))
    sizes = np.zeros(r, dtype=np.int64)
    outer = np.einsum("ij,ik->ijk", vectors, vectors)

    def rec(i, used):
        if i == m:
            if used == r and np.all(sizes >= min_size):
                buffer_assign.append(assign.copy())
                buffer_grams.append(grams.copy())
                buffer_sizes.append(sizes.copy())
                if len(buffer_assign) >= 4096:
                    flush()
            return
        # feasibility prune: remaining items must be able to open new parts
        remaining = m - i
        if used < r and remaining < (r - used) * min_size:
            return
        cap = min(used + 1, r)
        for part in range(cap):
            assign[i] = part
            grams[part] += outer[i]
            sizes[part] += 1
            rec(i + 1, max(used, part + 1))
            grams[part] -= outer[i]
            sizes[part] -= 1

    rec(0, 0)
    flush()
    if best_assign is None:
        raise DomainError("no feasible partition under the size constraints")
    parts = [[] for _ in range(r)]
    for i, p in enumerate(best_assign):
        parts[p].append(i)
    return [tuple(p) for p in parts]


def _randomized_partition(vectors, k, r, min_size, rng, restarts=32, moves=400):
    """Restarted local search minimizing the max averaged-Gram norm."""
    m, n = vectors.shape
    outer = np.einsum("ij,ik->ijk", vectors, vectors)
    best_parts = None
    best_val = math.inf

    def value(grams, sizes):
        lam = np.linalg.eigvalsh(grams)[:, -1]
        return float((lam / sizes).max())

    for restart in range(restarts):
        gen = rng.stream(restart + 1).generator()
        perm = gen.permutation(m)
        assign = np.empty(m, dtype=np.int64)
        for pos, item in enumerate(perm):
            assign[item] = pos % r
        sizes = np.bincount(assign, minlength=r)
        if np.any(sizes < min_size):
            continue
        grams = np.zeros((r, n, n))
        for i in range(m):
            grams[assign[i]] += outer[i]
        current = value(grams, sizes.astype(float))
        for _ in range(moves):
            improved = False
            for i in gen.permutation(m):
                src = assign[i]
                if sizes[src] <= min_size:
                    continue
                for dst in range(r):
                    if dst == src:
                        continue
                    grams[src] -= outer[i]
                    grams[dst] += outer[i]
                    sizes[src] -= 1
                    sizes[dst] += 1
                    cand = value(grams, sizes.astype(float))
                    if cand < current - 1e-12:
                        assign[i] = src = dst
                        current = cand
                        improved = True
                        break
                    grams[src] += outer[i]
                    grams[dst] -= outer[i]
                    sizes[src] += 1
                    sizes[dst] -= 1
            if not improved:
                break
        if current < best_val:
            best_val = current
            best_parts = assign.copy()
    if best_parts is None:
        raise SearchBudgetExceeded("no feasible start found in randomized search")
    parts = [[] for _ in range(r)]
    for i, p in enumerate(best_parts):
        parts[p].append(i)
    return [tuple(p) for p in parts]


EXHAUSTIVE_LIMIT = 12


def mss_partition(
    vectors,
    k: int,
    strategy: str = "auto",
    rng: RandomSource | None = None,
    min_part_size: int | None = None,
) -> PartitionResult:
    """Partition vectors (norm <= 1, mean Gram <= I/k) into certified parts.

    Certificates: every part size strictly inside (k/3, 5050 k) and averaged
    Gram norm at most 50/k.  Exhaustive search is exact for m <= 12;
    otherwise restarted local search runs and a miss raises a search-budget
    error carrying the best uncertified candidate.
    """
    vectors, k = _validate_partition_input(vectors, k)
    m = vectors.shape[0]
    if min_part_size is None:
        min_part_size = int(k / SIZE_FACTOR_LOW) + 1
    r = max(1, m // k)
    while r > 1 and m < r * min_part_size:
        r -= 1
    if strategy == "auto":
        strategy = "exhaustive" if m <= EXHAUSTIVE_LIMIT else "randomized"
    if strategy == "exhaustive":
        if m > EXHAUSTIVE_LIMIT:
            raise DomainError(f"exhaustive search is limited to m <= {EXHAUSTIVE_LIMIT}")
        parts = _exhaustive_partition(vectors, k, r, min_part_size)
    elif strategy == "randomized":
        if rng is None:
            rng = RandomSource(0)
        parts = _randomized_partition(vectors, k, r, min_part_size, rng)
    else:
        raise DomainError(f"unknown strategy {strategy!r}")
    norms = tuple(part_gram_norm(vectors, p) for p in parts)
    result = PartitionResult(
        parts=tuple(parts),
        per_part_norm=norms,
        sizes=tuple(len(p) for p in parts),
        search_strategy=strategy,
        k=k,
    )
    if not result.certified():
        raise SearchBudgetExceeded(
            "search exhausted without a certified partition "
            f"(best max norm {max(norms):.6g}, sizes {result.sizes})",
            best=result,
        )
    return result


# ---------------------------------------------------------------------------
# norm-vs-covariance factorization scaffolding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FactorizationPlan:
    """Atoms written as F_j applied to sqrt(log d_j) times basis vectors.

    `column_atoms[j]` stores the exact atom vectors in column order, so
    applying F_j to the designated scaled basis vector reproduces the atom
    bit-exactly; the matrices themselves are the stored columns divided by
    sqrt(log d_j).
    """

    lam: float
    parts: PartitionResult
    per_part_map: tuple          # matrices F_j, shape (n, d_j)
    operator_norms: tuple
    part_means: tuple
    column_atoms: tuple          # exact atoms per column
    sigma: tuple                 # sigma[j][i] = atom index of column i in part j
    c0: float
    atoms: np.ndarray = field(repr=False, default=None)

    def apply_to_scaled_basis(self, j: int, col: int) -> np.ndarray:
        """F_j(sqrt(log d_j) e_col), exact by stored-column construction."""
        return np.array(self.column_atoms[j][col])


def normcov_factorize(
    X: DiscreteDistributionVec,
    lam: float,
    c0: float = 10.0,
    strategy: str = "auto",
    rng: RandomSource | None = None,
) -> FactorizationPlan:
    """Partition and factor a bounded, small-covariance atomic vector law.

    Gates: ||atom|| <= lam for every atom, ||Cov|| <= lam^2 exp(-lam^2)
    (within 1e-10), uniform atom weights.  Atoms are replicated uniformly so
    the count reaches k = floor(exp(lam^2)) and every part has at least two
    elements (log of the part size must be positive for the column scaling).
    """
    if lam < 1.0:
        raise DomainError("lam must be at least 1")
    pts = X.points
    norms = np.linalg.norm(pts, axis=1)
    if np.any(norms > lam + 1e-9):
        raise DomainError("an atom exceeds the norm bound lam")
    cov_norm = float(np.linalg.eigvalsh(X.cov())[-1])
    gate = lam * lam * math.exp(-lam * lam)
    if cov_norm > gate + 1e-10:
        raise DomainError(
            f"covariance norm {cov_norm:.6g} exceeds lam^2 exp(-lam^2) = {gate:.6g}"
        )
    if np.max(np.abs(X.ps - X.ps[0])) > 1e-12:
        raise DomainError("atoms must carry uniform weights")
    k = int(math.floor(math.exp(lam * lam)))
    m0 = pts.shape[0]
    copies = max(1, -(-k // m0))  # ceil(k/m0): uniform replication
    atoms = np.tile(pts, (copies, 1))
    scaled = atoms / lam
    parts = mss_partition(
        scaled, k, strategy=strategy, rng=rng, min_part_size=max(2, int(k / SIZE_FACTOR_LOW) + 1)
    )
    maps = []
    op_norms = []
    means = []
    col_atoms = []
    sigma = []
    for part in parts.parts:
        d_j = len(part)
        root = math.sqrt(math.log(d_j))
        cols = [np.array(atoms[i]) for i in part]
        F_j = np.column_stack(cols) / root
        nrm = power_iteration_norm(F_j)
        if nrm > c0 + 1e-9:
            raise InternalError(
                f"part map norm {nrm:.6g} exceeds the frozen audit constant {c0}"
            )
        mean = np.mean([atoms[i] for i in part], axis=0)
        if np.linalg.norm(mean) > c0 + 1e-9:
            raise InternalError("part mean norm exceeds the frozen audit constant")
        maps.append(F_j)
        op_norms.append(nrm)
        means.append(mean)
        col_atoms.append(tuple(cols))
        sigma.append(tuple(part))
    return FactorizationPlan(
        lam=float(lam),
        parts=parts,
        per_part_map=tuple(maps),
        operator_norms=tuple(op_norms),
        part_means=tuple(means),
        column_atoms=tuple(col_atoms),
        sigma=tuple(sigma),
        c0=float(c0),
        atoms=atoms,
    )
