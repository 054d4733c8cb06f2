"""Pair decompositions of Lipschitz images of Gaussians, and the 3-sum pipeline.

Core identity: for a tabulated nondecreasing map F with slope certificate L,
simulate a Brownian path on N uniform steps; at each step average the slope of
the heat-smoothed map at the left endpoint, scale it into [-1, 1] by L, and
split the increment into two exchangeable pieces

    x_inc = s*dB + w,   y_inc = s*dB - w,   w ~ N(0, (1-s^2)/N) fresh,

so that each of x = sum x_inc and y = sum y_inc is exactly standard normal
(conditionally independent N(0, 1/N) increments) while
L*(x+y)/2 = sum(a_j dB_j) approximates F(B_1) - E[F] with discretization error
vanishing as N grows.  The fresh noise is materialized as a single Gaussian
with the accumulated variance, which has the same joint law as the per-step
draws.

The 3-sum pipeline runs this machinery on the monotone transport of a density
coupling: h = B_1 gives t = F(h) distributed as the coupled sum, the source
atom is drawn by Bayes inversion given t, and a variance-padding step turns
the three correlated channels into exact standard Gaussians summing to the
source variable up to the measured reconstruction error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coupling1d import (
    DensityCoupling,
    bobkov_transport,
    build_density_coupling,
    density_ratio_audit,
    sample_atoms_given_sums,
)
from .dists import DiscreteDistribution1D, subgaussian_norm
from .errors import AdmissionError, DomainError
from .linalg import power_iteration_norm
from .rng import RandomSource
from .transport import TransportMap1D

SQRT2 = math.sqrt(2.0)
PATH_CHUNK = 1 << 17  # fixed shard size: results never depend on worker count


@dataclass(frozen=True)
class ItoConfig:
    """Discretization knobs for the pair decomposition."""

    steps: int = 1024
    quadrature_nodes: int = 64
    terminal_clamp: float = 10.0

    def __post_init__(self):
        if self.steps < 16:
            raise DomainError("steps must be at least 16")
        if self.quadrature_nodes < 16:
            raise DomainError("quadrature_nodes must be at least 16")
        if not (self.terminal_clamp > 0):
            raise DomainError("terminal_clamp must be positive")


@dataclass(frozen=True)
class TripleSample:
    """One joint draw of three standard Gaussians reconstructing s."""

    g1: float
    g2: float
    g3: float
    s: float
    reconstruction_error: float

    @classmethod
    def build(cls, g1, g2, g3, s) -> "TripleSample":
        return cls(g1, g2, g3, s, abs(g1 + g2 + g3 - s))


@dataclass(frozen=True)
class NormalizationPlan:
    """Variance bookkeeping for padding three scaled Gaussians to unit law.

    a = ((1-tau1^2) + (1-tau2^2) - (1-tau3^2)) / 2 is the variance of the
    antithetic shared component; all three padding variances are nonnegative
    whenever every tau_i <= 1/sqrt(2) (the closed endpoint is admitted here
    for arithmetic; the sampler requires the open interval).
    """

    tau1: float
    tau2: float
    tau3: float

    def __post_init__(self):
        for t in (self.tau1, self.tau2, self.tau3):
            if not (0.0 < t <= 1.0 / SQRT2 + 1e-15):
                raise DomainError("tau values must lie in (0, 1/sqrt(2)]")
        if self.a < -1e-15 or self.var_w1_pad < -1e-15 or self.var_w2_pad < -1e-15:
            raise DomainError("padding variances must be nonnegative")

    @property
    def a(self) -> float:
        return 0.5 * ((1 - self.tau1**2) + (1 - self.tau2**2) - (1 - self.tau3**2))

    @property
    def var_w1_pad(self) -> float:
        return (1 - self.tau1**2) - self.a

    @property
    def var_w2_pad(self) -> float:
        return (1 - self.tau2**2) - self.a


def heat_smoothed(F: TransportMap1D, t: float, x, quad_nodes: int = 64):
    """(value, gradient) of the time-t heat smoothing of F at x.

    value = E[F(x + sqrt(1-t) Z)]; the gradient is the matching average of
    tabulated slopes, hence bounded by the Lipschitz certificate.
    """
    if not (0.0 <= t < 1.0):
        raise DomainError("heat smoothing requires t in [0, 1); use F itself at t=1")
    sigma = math.sqrt(1.0 - t)
    value = F.smoothed_value(sigma, x, quad_nodes)
    gradient = F.smoothed_gradient(sigma, x, quad_nodes)
    return value, gradient


# ---------------------------------------------------------------------------
# gradient tables (per-step smoothed slopes on a uniform grid)
# ---------------------------------------------------------------------------

class GradientTables:
    """Per-step lookup tables for the smoothed slope of a tabulated map.

    Table j holds E[F'(x + sigma_j Z)] on a uniform grid, sigma_j^2 = 1 - j/N.
    The smoothing is computed spectrally (FFT convolution of the sampled
    slope with the Gaussian kernel) because the tabulated transports carry
    genuine slope kinks: fixed-order quadrature of a discontinuous slope has
    an N-independent bias, while the spectral convolution is exact down to
    kernel widths of a few fine-grid cells.  Affine maps need no tables.
    """

    FINE_HALF_RANGE = 16.0
    FINE_POINTS = 1 << 15

    def __init__(self, F: TransportMap1D, steps: int, quad_nodes: int = 64,
                 half_range: float = 10.0, n_grid: int = 2049):
        self.F = F
        self.steps = int(steps)
        self.half_range = float(half_range)
        self.n_grid = int(n_grid)
        self.x0 = -self.half_range
        self.h = 2.0 * self.half_range / (self.n_grid - 1)
        self.inv_h = 1.0 / self.h
        if F.affine is not None:
            self.tables = None
            self.constant = float(F.affine[0])
            return
        nf = self.FINE_POINTS
        xf = np.linspace(-self.FINE_HALF_RANGE, self.FINE_HALF_RANGE, nf, endpoint=False)
        hf = xf[1] - xf[0]
        # midpoint sampling: each sample represents its fine cell's center,
        # so the implied quadrature of the convolution is second order
        ys = xf + hf / 2.0
        fprime = F.derivative_at(ys)
        spectrum = np.fft.rfft(fprime)
        freqs = np.fft.rfftfreq(nf, d=hf)
        grid = np.linspace(-self.half_range, self.half_range, self.n_grid)
        tables = np.empty((self.steps, self.n_grid))
        for j in range(self.steps):
            sigma2 = 1.0 - j / self.steps
            transfer = np.exp(-2.0 * math.pi**2 * sigma2 * freqs**2)
            row = np.fft.irfft(spectrum * transfer, n=nf)
            tables[j] = np.interp(grid, ys, row)
        self.tables = tables
        self.constant = None

    def lookup(self, j: int, x: np.ndarray) -> np.ndarray:
        if self.tables is None:
            return np.full_like(x, self.constant)
        table = self.tables[j]
        u = (x - self.x0) * self.inv_h
        i = np.clip(u.astype(np.int64), 0, self.n_grid - 2)
        frac = np.clip(u - i, 0.0, 1.0)
        return table[i] * (1.0 - frac) + table[i + 1] * frac


def _run_path_chunk(tables: GradientTables, L: float, N: int, stream: RandomSource, m: int):
    gen = stream.generator()
    sqrt_dt = math.sqrt(1.0 / N)
    inv_N = 1.0 / N
    B = np.zeros(m)
    A = np.zeros(m)
    V = np.zeros(m)
    for j in range(N):
        a = tables.lookup(j, B)
        if L > 0.0:
            s = np.clip(a / L, -1.0, 1.0)
        else:
            s = np.zeros(m)
        dB = gen.standard_normal(m)
        dB *= sqrt_dt
        A += s * dB
        V += (1.0 - s * s) * inv_N
        B += dB
    T = np.sqrt(V) * gen.standard_normal(m)
    return B, A + T, A - T


def ito_pair_decomposition(
    F: TransportMap1D,
    cfg: ItoConfig,
    rng: RandomSource,
    n_paths: int = 1,
    tables: GradientTables | None = None,
    threads: int = 1,
):
    """Simulate n_paths; returns (h, x, y) arrays.

    h is the Brownian endpoint; x and y are each exactly N(0,1) with
    L*(x+y)/2 approximating F(h) - mean.  Chunks have a fixed size and a
    fixed stream layout, so results are identical for any thread count.
    """
    if tables is None:
        tables = GradientTables(F, cfg.steps, cfg.quadrature_nodes, cfg.terminal_clamp)
    n_paths = int(n_paths)
    L = F.lipschitz_certificate
    N = cfg.steps
    h = np.empty(n_paths)
    x = np.empty(n_paths)
    y = np.empty(n_paths)
    jobs = []
    for chunk_idx, start in enumerate(range(0, n_paths, PATH_CHUNK)):
        m = min(PATH_CHUNK, n_paths - start)
        jobs.append((chunk_idx, start, m))

    def run(job):
        chunk_idx, start, m = job
        B, xs, ys = _run_path_chunk(tables, L, N, rng.stream(chunk_idx + 1), m)
        sl = slice(start, start + m)
        h[sl] = B
        x[sl] = xs
        y[sl] = ys

    if threads > 1 and len(jobs) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, jobs))
    else:
        for job in jobs:
            run(job)
    return h, x, y


# ---------------------------------------------------------------------------
# exact couplings: linear maps and variance padding
# ---------------------------------------------------------------------------

def linear_map_decomposition(A, g, rng: RandomSource):
    """Split A(g), ||A|| <= 1, into (x + y)/2 with x, y exactly N(0, I).

    Per singular direction with value sigma, the shared part sigma*z is padded
    antithetically with fresh variance 1 - sigma^2.  Accepts a single vector
    or a batch of shape (m, n).
    """
    A = np.asarray(A, dtype=float)
    norm = power_iteration_norm(A)
    if norm > 1.0 + 1e-10:
        raise DomainError(f"operator norm {norm!r} exceeds 1")
    g = np.asarray(g, dtype=float)
    single = g.ndim == 1
    gb = g[None, :] if single else g
    U, sv, Vt = np.linalg.svd(A)
    sv = np.clip(sv, 0.0, 1.0)
    z = gb @ Vt.T
    w = rng.generator().standard_normal(gb.shape)
    pad = np.sqrt(1.0 - sv * sv)
    xp = sv * z + pad * w
    yp = sv * z - pad * w
    x = xp @ U.T
    y = yp @ U.T
    return (x[0], y[0]) if single else (x, y)


def normalization_triple(plan: NormalizationPlan, g1, g2, g3, rng: RandomSource):
    """(G1, G2, G3) standard Gaussians with sum tau1 g1 + tau2 g2 + tau3 g3.

    Fresh padding: W1 = W' + W1'', W2 = -W' + W2'', W3 = -(W1 + W2), with W'
    of variance a and the double-primed parts filling each channel to unit
    variance.  Requires every tau strictly below 1/sqrt(2).
    """
    for t in (plan.tau1, plan.tau2, plan.tau3):
        if t >= 1.0 / SQRT2:
            raise DomainError("sampler requires every tau strictly below 1/sqrt(2)")
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    g3 = np.asarray(g3, dtype=float)
    gen = rng.generator()
    shape = np.broadcast(g1, g2, g3).shape
    w_shared = math.sqrt(plan.a) * gen.standard_normal(shape)
    w1_pad = math.sqrt(plan.var_w1_pad) * gen.standard_normal(shape)
    w2_pad = math.sqrt(plan.var_w2_pad) * gen.standard_normal(shape)
    W1 = w_shared + w1_pad
    W2 = -w_shared + w2_pad
    W3 = -(W1 + W2)
    return plan.tau1 * g1 + W1, plan.tau2 * g2 + W2, plan.tau3 * g3 + W3


# ---------------------------------------------------------------------------
# the 3-sum pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PipelineReport:
    """Static data of a built pipeline (audited constants and gates)."""

    scale: float
    c_emp: float
    lipschitz: float
    tau1: float
    tau3: float
    c_low: float
    c_high: float
    kappa_scaled: float
    iterations: int
    c_clipped: bool


class ThreeGaussiansPipeline:
    """Decompose a small centered discrete variable into three Gaussians.

    Construction iterates the audited pinch constant to a fixed point: the
    source is rescaled by sqrt(2) * C^2, coupled, transported, and C updated
    from the transport's slope certificate, then everything is rebuilt at the
    final scale.  Sampling runs the pair decomposition forward and inverts
    the sum by Bayes to recover the atom, so all three marginals are exact
    Gaussians up to transport tabulation error.
    """

    def __init__(
        self,
        S: DiscreteDistribution1D,
        cfg: ItoConfig,
        kappa_max: float = 0.2,
        nu: float = 0.1,
        c_cap: float = 3.0,
        n_knots: int = 4097,
        half_range: float = 8.0,
    ):
        if abs(S.mean()) > 1e-10:
            raise AdmissionError("pipeline gate: source must be centered")
        self.S = S
        self.cfg = cfg
        kappa = subgaussian_norm(S).kappa
        # floor keeps tau3 = 1/(sqrt(2) C^2) strictly below 1/sqrt(2)
        c_emp = math.sqrt(1.0 + 1e-6)
        c_clipped = False
        iterations = 0
        coupling = transport = audit = None
        for iterations in range(1, 13):
            scale = SQRT2 * c_emp * c_emp
            kappa_scaled = kappa * scale
            if kappa_scaled > kappa_max:
                raise AdmissionError(
                    f"pipeline gate: scaled tail norm {kappa_scaled:.6g} exceeds "
                    f"kappa_max {kappa_max:.6g} (source kappa {kappa:.6g}, "
                    f"scale {scale:.6g})"
                )
            scaled = S.scaled(scale)
            coupling = build_density_coupling(scaled, nu=nu, kappa_max=kappa_max)
            audit = density_ratio_audit(coupling, half_width=half_range + 1.0)
            transport = bobkov_transport(
                coupling, n_knots=n_knots, half_range=half_range, audit=audit
            )
            c_new = max(math.sqrt(transport.lipschitz_certificate), math.sqrt(1.0 + 1e-6))
            if c_new > c_cap:
                c_new = c_cap
                c_clipped = True
            # on the last pass keep c_emp as the constant actually built with
            if abs(c_new - c_emp) <= 1e-6 * c_emp or iterations == 12:
                break
            c_emp = c_new
        self.c_emp = c_emp
        self.scale = SQRT2 * c_emp * c_emp
        self.coupling: DensityCoupling = coupling
        self.transport: TransportMap1D = transport
        self.audit = audit
        L = transport.lipschitz_certificate
        self.lipschitz = L
        c2 = c_emp * c_emp
        self.plan = NormalizationPlan(
            tau1=L / (2.0 * SQRT2 * c2),
            tau2=L / (2.0 * SQRT2 * c2),
            tau3=1.0 / (SQRT2 * c2),
        )
        self.tables = GradientTables(
            transport, cfg.steps, cfg.quadrature_nodes, cfg.terminal_clamp
        )
        self.report = PipelineReport(
            scale=self.scale,
            c_emp=c_emp,
            lipschitz=L,
            tau1=self.plan.tau1,
            tau3=self.plan.tau3,
            c_low=audit.c_low,
            c_high=audit.c_high,
            kappa_scaled=kappa * self.scale,
            iterations=iterations,
            c_clipped=c_clipped,
        )

    def sample_arrays(self, n: int, rng: RandomSource, threads: int = 1):
        """(G1, G2, G3, s, error) arrays for n joint draws."""
        n = int(n)
        h, gp, gpp = ito_pair_decomposition(
            self.transport, self.cfg, rng, n_paths=n, tables=self.tables,
            threads=threads,
        )
        t = self.transport(h)
        s_scaled = sample_atoms_given_sums(self.coupling, t, rng.stream(1 << 20))
        g = s_scaled - t
        G1, G2, G3 = normalization_triple(
            self.plan, gp, gpp, g, rng.stream(1 << 21)
        )
        s = s_scaled / self.scale
        err = np.abs(G1 + G2 + G3 - s)
        return G1, G2, G3, s, err


def three_gaussians_sampler(
    S: DiscreteDistribution1D,
    cfg: ItoConfig,
    rng: RandomSource,
    batch: int = 4096,
    **pipeline_kwargs,
):
    """Infinite stream of TripleSample draws (batched internally)."""
    pipe = ThreeGaussiansPipeline(S, cfg, **pipeline_kwargs)
    block = 0
    while True:
        # blocks are spaced so their derived substreams never overlap
        G1, G2, G3, s, err = pipe.sample_arrays(batch, rng.stream(block << 22))
        for i in range(batch):
            yield TripleSample(float(G1[i]), float(G2[i]), float(G3[i]),
                               float(s[i]), float(err[i]))
        block += 1
