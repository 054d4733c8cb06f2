"""The certification battery behind `gsum suite` and the acceptance tests.

Each criterion function runs one block of checks at manifest-controlled
sizes and returns a deterministic Report fragment: metrics plus verdicts
tied to explicit thresholds.  Wall-clock time is never recorded in reports
(reports must be byte-stable); runtime limits are asserted by the callers
that care about them.
"""

from __future__ import annotations

import math

import numpy as np

from .coupling1d import (
    build_density_coupling,
    density_ratio_audit,
    g_marginal_density,
    sample_coupled_pair,
    sum_density_cdf,
)
from .dists import DiscreteDistribution1D
from .geometry import (
    EllipsoidSpec,
    HalfSpace,
    ellipsoid_game,
    gaussian_measure_ellipsoid,
    neighborhood_measure_check,
    steinhaus_interval,
)
from .highdim import bessel_identity_check, estimate_cd, mss_partition, simplex_vectors
from .ito import (
    ItoConfig,
    NormalizationPlan,
    ThreeGaussiansPipeline,
    ito_pair_decomposition,
    linear_map_decomposition,
    normalization_triple,
)
from .metrics import empirical_tv_to_dist, ks_distance
from .normal import std_normal_cdf, std_normal_quantile
from .orderstats import (
    all_gaussian_family,
    analytic_tail_integral,
    anchor_spread_check,
    orderstats_moment_sum,
    per_index_lower_tail_moment,
)
from .reports import Report
from .rng import RandomSource
from .transport import TransportMap1D

TEST_DISTRIBUTIONS = {
    "delta0": [(0.0, 1.0)],
    "uniform_pm005": [(-0.05, 0.5), (0.05, 0.5)],
    "uniform_tri005": [(-0.05, 1.0 / 3.0), (0.0, 1.0 / 3.0), (0.05, 1.0 / 3.0)],
}

DEFAULT_MANIFEST = {
    "seed": 20260807,
    "three_gaussians": {
        "distributions": list(TEST_DISTRIBUTIONS),
        "samples": 1_000_000,
        "steps": [1024, 4096],
    },
    "coupling": {"distributions": list(TEST_DISTRIBUTIONS), "samples": 1_000_000},
    "ito": {"samples_ks": 1_000_000, "samples_rms": 100_000, "steps": [1024, 4096]},
    "exact_couplings": {"samples": 1_000_000},
    "bessel": {"dims": [2, 4, 8, 16, 32, 64], "samples": 1_000_000},
    "partition": {"instances": 50},
    "minimax": {"instances": 100},
    "orderstats": {
        "growth_pair": [128, 8192],
        "domination_n": [64, 1024],
        "reps_small": 200,
        "reps_large": 100,
    },
    "geometry": {"samples": 200_000, "dims": [1, 2, 4, 8]},
}


def reduced_manifest() -> dict:
    """Shrunk manifest for fast determinism checks (same code paths)."""
    m = {k: (dict(v) if isinstance(v, dict) else v) for k, v in DEFAULT_MANIFEST.items()}
    m["three_gaussians"].update(samples=60_000, steps=[256, 1024])
    m["coupling"].update(samples=50_000)
    m["ito"].update(samples_ks=50_000, samples_rms=20_000, steps=[256, 1024])
    m["exact_couplings"].update(samples=100_000)
    m["bessel"].update(dims=[2, 4, 8], samples=100_000)
    m["partition"].update(instances=6)
    m["minimax"].update(instances=15)
    m["orderstats"].update(growth_pair=[128, 1024], domination_n=[64], reps_small=150)
    m["geometry"].update(samples=50_000, dims=[1, 2, 4])
    return m


def hash_stream(*parts) -> int:
    """Small deterministic stream id from string/int labels."""
    acc = 0
    for p in parts:
        for ch in str(p):
            acc = (acc * 131 + ord(ch)) % (1 << 31)
    return acc


def _dist(name: str) -> DiscreteDistribution1D:
    return DiscreteDistribution1D(TEST_DISTRIBUTIONS[name])


# ---------------------------------------------------------------------------
# criterion 1: the three-Gaussian pipeline
# ---------------------------------------------------------------------------

DEGENERATE_ERR_FLOOR = 1e-8  # below this the identity is exact and the
                             # step-halving comparison is vacuous


def criterion_three_gaussians(report: Report, cfg: dict, seed: int, threads: int = 1):
    samples = int(cfg["samples"])
    steps_list = [int(s) for s in cfg["steps"]]
    for name in cfg["distributions"]:
        S = _dist(name)
        errs = {}
        for steps in steps_list:
            pipe = ThreeGaussiansPipeline(S, ItoConfig(steps=steps))
            rng = RandomSource(seed, stream_id=hash_stream(name, steps))
            G1, G2, G3, s, err = pipe.sample_arrays(samples, rng, threads=threads)
            errs[steps] = float(err.mean())
            if steps == steps_list[-1]:
                for label, G in (("g1", G1), ("g2", G2), ("g3", G3)):
                    ks = ks_distance(np.sort(G), std_normal_cdf)
                    report.add_metric(f"three/{name}/ks_{label}", ks)
                    report.add_verdict(
                        f"three/{name}/ks_{label}", ks <= 0.01,
                        f"three/{name}/ks_{label}", 0.01,
                    )
                tv = empirical_tv_to_dist(s, S)
                report.add_metric(f"three/{name}/tv_s", tv)
                report.add_verdict(
                    f"three/{name}/tv_s", tv <= 0.003, f"three/{name}/tv_s", 0.003
                )
        lo, hi = steps_list[0], steps_list[-1]
        report.add_metric(f"three/{name}/mean_err_{lo}", errs[lo])
        report.add_metric(f"three/{name}/mean_err_{hi}", errs[hi])
        if errs[lo] <= DEGENERATE_ERR_FLOOR and errs[hi] <= DEGENERATE_ERR_FLOOR:
            # reconstruction already exact at both step counts
            drop_ok = True
            drop = 1.0
        else:
            drop = 1.0 - errs[hi] / errs[lo]
            drop_ok = drop >= 0.30
        report.add_metric(f"three/{name}/err_drop", drop)
        report.add_verdict(
            f"three/{name}/err_drop", drop_ok, f"three/{name}/err_drop", 0.30, ">="
        )


# ---------------------------------------------------------------------------
# criterion 2: the density coupling
# ---------------------------------------------------------------------------

RATIO_REGRESSION_BOUND = 1e4  # frozen bound for c_high/c_low at half width 6


def criterion_coupling(report: Report, cfg: dict, seed: int):
    samples = int(cfg["samples"])
    grid = np.linspace(-8.0, 8.0, 3201)
    for name in cfg["distributions"]:
        S = _dist(name)
        c = build_density_coupling(S)
        resid = abs(c.balance_residual())
        report.add_metric(f"couple/{name}/balance_residual", resid)
        report.add_verdict(
            f"couple/{name}/balance_residual", resid <= 1e-9,
            f"couple/{name}/balance_residual", 1e-9,
        )
        gdev = float(np.max(np.abs(
            g_marginal_density(c, grid) - np.exp(-grid * grid / 2) / math.sqrt(2 * math.pi)
        )))
        report.add_metric(f"couple/{name}/g_marginal_dev", gdev)
        report.add_verdict(
            f"couple/{name}/g_marginal_dev", gdev <= 1e-8,
            f"couple/{name}/g_marginal_dev", 1e-8,
        )
        audit = density_ratio_audit(c, half_width=6.0)
        report.add_metric(f"couple/{name}/c_low", audit.c_low)
        report.add_metric(f"couple/{name}/c_high", audit.c_high)
        report.add_metric(f"couple/{name}/ratio", audit.ratio)
        report.add_verdict(
            f"couple/{name}/c_low_positive", audit.c_low > 0,
            f"couple/{name}/c_low", 0.0, ">",
        )
        report.add_verdict(
            f"couple/{name}/ratio_bound", audit.ratio <= RATIO_REGRESSION_BOUND,
            f"couple/{name}/ratio", RATIO_REGRESSION_BOUND,
        )
        s, g = sample_coupled_pair(c, RandomSource(seed, hash_stream("couple", name)), samples)
        ks_g = ks_distance(np.sort(g), std_normal_cdf)
        report.add_metric(f"couple/{name}/ks_g", ks_g)
        report.add_verdict(
            f"couple/{name}/ks_g", ks_g <= 0.005, f"couple/{name}/ks_g", 0.005
        )
        ks_sum = ks_distance(np.sort(s + g), lambda t: sum_density_cdf(c, t))
        report.add_metric(f"couple/{name}/ks_sum", ks_sum)
        report.add_verdict(
            f"couple/{name}/ks_sum", ks_sum <= 0.005, f"couple/{name}/ks_sum", 0.005
        )


# ---------------------------------------------------------------------------
# criterion 3: pair decomposition
# ---------------------------------------------------------------------------

def criterion_ito(report: Report, cfg: dict, seed: int, threads: int = 1):
    steps_list = [int(s) for s in cfg["steps"]]
    # identity: the degenerate split is exact, bitwise
    Fid = TransportMap1D.identity()
    h, x, y = ito_pair_decomposition(
        Fid, ItoConfig(steps=steps_list[0]), RandomSource(seed, hash_stream("ito", "id")),
        n_paths=min(int(cfg["samples_rms"]), 100_000), threads=threads,
    )
    res = Fid(h) - Fid.mean_under_gamma - Fid.lipschitz_certificate * (x + y) / 2.0
    max_res = float(np.max(np.abs(res)))
    report.add_metric("ito/identity/max_residual", max_res)
    report.add_verdict(
        "ito/identity/exact", max_res == 0.0, "ito/identity/max_residual", 0.0
    )
    # tanh: exact marginals, self-converging residual
    Ft = TransportMap1D.tabulate(np.tanh)
    h, x, y = ito_pair_decomposition(
        Ft, ItoConfig(steps=steps_list[0]), RandomSource(seed, hash_stream("ito", "ks")),
        n_paths=int(cfg["samples_ks"]), threads=threads,
    )
    for label, arr in (("x", x), ("y", y)):
        ks = ks_distance(np.sort(arr), std_normal_cdf)
        report.add_metric(f"ito/tanh/ks_{label}", ks)
        report.add_verdict(
            f"ito/tanh/ks_{label}", ks <= 0.005, f"ito/tanh/ks_{label}", 0.005
        )
    rms = {}
    for steps in steps_list:
        h, x, y = ito_pair_decomposition(
            Ft, ItoConfig(steps=steps), RandomSource(seed, hash_stream("ito", "rms", steps)),
            n_paths=int(cfg["samples_rms"]), threads=threads,
        )
        res = Ft(h) - Ft.mean_under_gamma - Ft.lipschitz_certificate * (x + y) / 2.0
        rms[steps] = float(np.sqrt(np.mean(res * res)))
        report.add_metric(f"ito/tanh/rms_{steps}", rms[steps])
    drop = 1.0 - rms[steps_list[-1]] / rms[steps_list[0]]
    # steps quadruple between the manifest's endpoints
    report.add_metric("ito/tanh/rms_drop", drop)
    report.add_verdict("ito/tanh/rms_drop", drop >= 0.30, "ito/tanh/rms_drop", 0.30, ">=")


# ---------------------------------------------------------------------------
# criterion 4: exact couplings (linear map, variance padding)
# ---------------------------------------------------------------------------

def criterion_exact_couplings(report: Report, cfg: dict, seed: int):
    n = int(cfg["samples"])
    g = RandomSource(seed, hash_stream("lin", "g")).generator().standard_normal(n)
    x, y = linear_map_decomposition(
        np.array([[0.6]]), g[:, None], RandomSource(seed, hash_stream("lin", "w"))
    )
    x, y = x[:, 0], y[:, 0]
    ident = float(np.max(np.abs((x + y) / 2.0 - 0.6 * g)))
    report.add_metric("linmap/identity_residual", ident)
    report.add_verdict("linmap/identity_residual", ident <= 1e-12, "linmap/identity_residual", 1e-12)
    for label, arr in (("x", x), ("y", y)):
        v = float(arr.var())
        report.add_metric(f"linmap/var_{label}", v)
        report.add_verdict(
            f"linmap/var_{label}", abs(v - 1.0) <= 0.005, f"linmap/var_{label}", "1 +- 0.005"
        )
    cov = float(np.mean(x * y) - x.mean() * y.mean())
    report.add_metric("linmap/cov_xy", cov)
    report.add_verdict("linmap/cov_xy", abs(cov + 0.28) <= 0.01, "linmap/cov_xy", "-0.28 +- 0.01")

    plan = NormalizationPlan(1.0 / (2.0 * math.sqrt(2.0)), 1.0 / (2.0 * math.sqrt(2.0)), 0.5)
    gs = [
        RandomSource(seed, hash_stream("norm", i)).generator().standard_normal(n)
        for i in range(3)
    ]
    G1, G2, G3 = normalization_triple(plan, *gs, RandomSource(seed, hash_stream("norm", "w")))
    target = plan.tau1 * gs[0] + plan.tau2 * gs[1] + plan.tau3 * gs[2]
    nres = float(np.max(np.abs(G1 + G2 + G3 - target)))
    report.add_metric("normalize/sum_residual", nres)
    report.add_verdict("normalize/sum_residual", nres <= 1e-12, "normalize/sum_residual", 1e-12)
    for label, arr in (("G1", G1), ("G2", G2), ("G3", G3)):
        v = float(arr.var())
        report.add_metric(f"normalize/var_{label}", v)
        report.add_verdict(
            f"normalize/var_{label}", abs(v - 1.0) <= 0.005,
            f"normalize/var_{label}", "1 +- 0.005",
        )


# ---------------------------------------------------------------------------
# criterion 5: simplex / region construction
# ---------------------------------------------------------------------------

C2_CLOSED_FORM = math.sqrt(2.0 / math.pi) / math.sqrt(math.log(2.0) / 2.0)


def criterion_bessel(report: Report, cfg: dict, seed: int):
    for d in cfg["dims"]:
        sc = simplex_vectors(int(d))
        c_d, se = estimate_cd(sc, int(cfg["samples"]), RandomSource(seed, hash_stream("cd", d)))
        report.add_metric(f"bessel/d{d}/c_d", c_d)
        report.add_metric(f"bessel/d{d}/c_d_stderr", se)
        report.add_verdict(
            f"bessel/d{d}/c_d_range", 0.1 < c_d < 10.0, f"bessel/d{d}/c_d", "(0.1, 10)"
        )
        if d == 2:
            dev_sigmas = abs(c_d - C2_CLOSED_FORM) / se
            report.add_metric("bessel/d2/closed_form_sigmas", dev_sigmas)
            report.add_verdict(
                "bessel/d2/closed_form", dev_sigmas <= 3.0,
                "bessel/d2/closed_form_sigmas", 3.0,
            )
        chk = bessel_identity_check(sc, int(cfg["samples"]), RandomSource(seed, hash_stream("bes", d)))
        report.add_metric(f"bessel/d{d}/freq_max_sigmas", chk.freq_max_sigmas)
        report.add_verdict(
            f"bessel/d{d}/frequencies_uniform", chk.frequencies_uniform_3sigma,
            f"bessel/d{d}/freq_max_sigmas", 3.0,
        )
        report.add_metric(f"bessel/d{d}/y_mean_max_sigmas", chk.y_mean_max_sigmas)
        report.add_verdict(
            f"bessel/d{d}/y_centered", chk.y_mean_centered_3sigma,
            f"bessel/d{d}/y_mean_max_sigmas", 3.0,
        )
        report.add_metric(f"bessel/d{d}/e_norm2_y", chk.e_norm2_y)


# ---------------------------------------------------------------------------
# criterion 6: certified partitions
# ---------------------------------------------------------------------------

def random_partition_instance(gen, max_m: int = 12, max_n: int = 4):
    """Random admissible (vectors, k): norms <= 1 and mean Gram <= I/k."""
    k = int(gen.integers(2, 4))
    n = int(gen.integers(2, max_n + 1))
    m = int(gen.integers(2 * k, max_m + 1))
    for _ in range(1000):
        v = gen.normal(size=(m, n))
        v /= np.linalg.norm(v, axis=1)[:, None]
        v *= 0.9 * min(1.0, math.sqrt(n / k))
        lam = float(np.linalg.eigvalsh(v.T @ v / m)[-1])
        if lam <= 1.0 / k - 1e-9:
            return v, k
        v *= 0.9
        if float(np.linalg.eigvalsh(v.T @ v / m)[-1]) <= 1.0 / k - 1e-9:
            return v, k
    raise RuntimeError("instance generator failed")


def criterion_partition(report: Report, cfg: dict, seed: int):
    gen = RandomSource(seed, hash_stream("mss")).generator()
    instances = int(cfg["instances"])
    all_ok = True
    roundtrips_ok = True
    worst_norm_slack = math.inf
    for i in range(instances):
        v, k = random_partition_instance(gen)
        res = mss_partition(v, k, strategy="exhaustive")
        sizes_ok = all(s > k / 3.0 for s in res.sizes)
        norms_ok = all(nrm <= 50.0 / k for nrm in res.per_part_norm)
        worst_norm_slack = min(
            worst_norm_slack, 50.0 / k - max(res.per_part_norm)
        )
        all_ok = all_ok and sizes_ok and norms_ok and res.certified()
        rt = res.from_json(res.to_json())
        roundtrips_ok = roundtrips_ok and rt == res and rt.verify(v)
    report.add_metric("partition/instances", instances)
    report.add_metric("partition/worst_norm_slack", worst_norm_slack)
    report.add_verdict("partition/certified", all_ok, "partition/instances", "all certified")
    report.add_verdict(
        "partition/roundtrip", roundtrips_ok, "partition/instances", "bit-exact reverify"
    )


# ---------------------------------------------------------------------------
# criterion 7: minimax game
# ---------------------------------------------------------------------------

def brute_force_game_2d(points: np.ndarray, tau: float, n_theta: int = 1440):
    """Grid maximization of min_s s^T Q s over trace-tau PSD 2x2 matrices.

    Eigenbasis angle on a grid; for each angle the inner problem
    max_t min_s [t q1_s + (tau - t) q2_s] is a concave piecewise-linear 1D
    program solved exactly at constraint crossings, so only the angle grid
    contributes discretization error.
    """
    def value_at(theta):
        ct, st = math.cos(theta), math.sin(theta)
        q1 = (points @ np.array([ct, st])) ** 2
        q2 = (points @ np.array([-st, ct])) ** 2
        slopes = q1 - q2
        candidates = [0.0, tau]
        for i in range(slopes.size):
            for j in range(i + 1, slopes.size):
                ds = slopes[i] - slopes[j]
                if ds != 0.0:
                    t = tau * (q2[j] - q2[i]) / ds
                    if 0.0 < t < tau:
                        candidates.append(float(t))
        ts = np.asarray(candidates)
        vals = np.min(ts[:, None] * slopes[None, :] + tau * q2[None, :], axis=1)
        return float(vals.max())

    thetas = np.linspace(0.0, math.pi, n_theta, endpoint=False)
    vals = [value_at(t) for t in thetas]
    best_idx = int(np.argmax(vals))
    best = vals[best_idx]
    center = thetas[best_idx]
    width = math.pi / n_theta
    for _ in range(3):
        local = np.linspace(center - width, center + width, 41)
        lv = [value_at(t) for t in local]
        i = int(np.argmax(lv))
        best = max(best, lv[i])
        center = local[i]
        width /= 20.0
    return best


def random_symmetric_set(gen, max_n: int = 3, max_points: int = 20):
    n = int(gen.integers(1, max_n + 1))
    pairs = int(gen.integers(1, max_points // 2 + 1))
    reps = gen.normal(size=(pairs, n)) * gen.uniform(0.3, 2.0)
    return np.vstack([reps, -reps])


def criterion_minimax(report: Report, cfg: dict, seed: int):
    gen = RandomSource(seed, hash_stream("minimax")).generator()
    instances = int(cfg["instances"])
    worst_gap = 0.0
    duality_ok = True
    brute_worst = 0.0
    brute_checked = 0
    for i in range(instances):
        pts = random_symmetric_set(gen)
        tau = float(gen.uniform(0.5, 2.0))
        sol = ellipsoid_game(pts, tau)
        worst_gap = max(worst_gap, sol.gap)
        duality_ok = duality_ok and sol.primal_value <= sol.dual_value + 1e-9
        if pts.shape[1] == 2 and brute_checked < 10:
            brute = brute_force_game_2d(pts, tau)
            brute_worst = max(brute_worst, abs(brute - sol.primal_value))
            brute_checked += 1
    report.add_metric("minimax/worst_gap", worst_gap)
    report.add_verdict("minimax/gap", worst_gap <= 1e-6, "minimax/worst_gap", 1e-6)
    report.add_verdict(
        "minimax/weak_duality", duality_ok, "minimax/worst_gap", "primal <= dual + 1e-9"
    )
    report.add_metric("minimax/brute_force_dev", brute_worst)
    report.add_verdict(
        "minimax/brute_force", brute_worst <= 1e-3, "minimax/brute_force_dev", 1e-3
    )
    sol = ellipsoid_game(np.array([[1.0, 0.0], [-1.0, 0.0]]), 1.0)
    exact = sol.primal_value == 1.0 and sol.dual_value == 1.0
    report.add_metric("minimax/pm_e1_primal", sol.primal_value)
    report.add_metric("minimax/pm_e1_dual", sol.dual_value)
    report.add_verdict(
        "minimax/pm_e1_exact", exact, "minimax/pm_e1_primal", "primal = dual = 1 exactly"
    )


# ---------------------------------------------------------------------------
# criterion 8: order statistics
# ---------------------------------------------------------------------------

def criterion_orderstats(report: Report, cfg: dict, seed: int):
    n_lo, n_hi = (int(v) for v in cfg["growth_pair"])
    reps_small = int(cfg["reps_small"])
    reps_large = int(cfg["reps_large"])
    rep_lo = orderstats_moment_sum(
        all_gaussian_family(n_lo), reps_small, RandomSource(seed, hash_stream("os", n_lo))
    )
    rep_hi = orderstats_moment_sum(
        all_gaussian_family(n_hi),
        reps_small if n_hi <= 1024 else reps_large,
        RandomSource(seed, hash_stream("os", n_hi)),
    )
    growth = rep_hi.moment_sum / rep_lo.moment_sum
    report.add_metric("orderstats/moment_low", rep_lo.moment_sum)
    report.add_metric("orderstats/moment_high", rep_hi.moment_sum)
    report.add_metric("orderstats/growth", growth)
    report.add_verdict("orderstats/growth", growth <= 1.9, "orderstats/growth", 1.9)
    spread_ok = all(anchor_spread_check(n) for n in (n_lo, n_hi, 64, 1024))
    report.add_metric("orderstats/anchor_spread_ok", spread_ok)
    report.add_verdict(
        "orderstats/anchor_spread", spread_ok, "orderstats/anchor_spread_ok", "exact"
    )
    violations = 0
    checked = 0
    for n in cfg["domination_n"]:
        n = int(n)
        idx = list(range(1, n // 2 + 1))
        mc, se = per_index_lower_tail_moment(
            all_gaussian_family(n), idx,
            reps_small if n <= 1024 else reps_large,
            RandomSource(seed, hash_stream("osdom", n)),
        )
        for ii, m_val, s_val in zip(idx, mc, se):
            bound = 2.0 * analytic_tail_integral(n, ii)
            checked += 1
            if m_val > bound + 3.0 * s_val:
                violations += 1
    report.add_metric("orderstats/domination_checked", checked)
    report.add_metric("orderstats/domination_violations", violations)
    report.add_verdict(
        "orderstats/domination", violations == 0, "orderstats/domination_violations", 0
    )


# ---------------------------------------------------------------------------
# criterion 9: geometry measures
# ---------------------------------------------------------------------------

def criterion_geometry(report: Report, cfg: dict, seed: int):
    a = std_normal_quantile(2.0 / 3.0)
    delta = steinhaus_interval([(-a, math.inf)])
    dev = abs(delta - 2.0 * a)
    report.add_metric("geometry/steinhaus_delta", delta)
    report.add_metric("geometry/steinhaus_dev", dev)
    report.add_verdict("geometry/steinhaus", dev <= 1e-6, "geometry/steinhaus_dev", 1e-6)

    samples = int(cfg["samples"])
    measure_ok = True
    worst_margin = math.inf
    for n in cfg["dims"]:
        n = int(n)
        for spread in range(1, n + 1):
            q = np.zeros((n, n))
            for i in range(spread):
                q[i, i] = 0.1 / spread
            est, se = gaussian_measure_ellipsoid(
                EllipsoidSpec(q), samples, RandomSource(seed, hash_stream("ell", n, spread))
            )
            margin = est - (0.5 - 3.0 * se)
            worst_margin = min(worst_margin, margin)
            measure_ok = measure_ok and margin >= 0.0
    report.add_metric("geometry/ellipsoid_worst_margin", worst_margin)
    report.add_verdict(
        "geometry/ellipsoid_half", measure_ok, "geometry/ellipsoid_worst_margin", 0.0, ">="
    )

    neigh_ok = True
    for D in (1.0, 2.0, 3.0):
        rep = neighborhood_measure_check(
            HalfSpace(np.array([1.0, 0.0]), 0.0), D, samples,
            RandomSource(seed, hash_stream("nbhd", D)),
        )
        report.add_metric(f"geometry/neighborhood_D{D}", rep.estimate)
        neigh_ok = neigh_ok and rep.passed
    report.add_verdict(
        "geometry/neighborhood", neigh_ok, "geometry/neighborhood_D1.0",
        "estimate >= 1 - 2 exp(-D^2/2) - 3 stderr",
    )


# ---------------------------------------------------------------------------
# the suite
# ---------------------------------------------------------------------------

def run_suite(manifest: dict | None = None, threads: int = 1) -> Report:
    """Run the battery; `threads` is an execution detail and never appears
    in the report, so worker counts cannot affect the bytes written."""
    manifest = manifest or DEFAULT_MANIFEST
    manifest = {k: v for k, v in manifest.items() if k != "threads"}
    seed = int(manifest.get("seed", DEFAULT_MANIFEST["seed"]))
    report = Report(command="suite", config=manifest, seed=seed)
    criterion_three_gaussians(report, manifest["three_gaussians"], seed, threads)
    criterion_coupling(report, manifest["coupling"], seed)
    criterion_ito(report, manifest["ito"], seed, threads)
    criterion_exact_couplings(report, manifest["exact_couplings"], seed)
    criterion_bessel(report, manifest["bessel"], seed)
    criterion_partition(report, manifest["partition"], seed)
    criterion_minimax(report, manifest["minimax"], seed)
    criterion_orderstats(report, manifest["orderstats"], seed)
    criterion_geometry(report, manifest["geometry"], seed)
    return report
