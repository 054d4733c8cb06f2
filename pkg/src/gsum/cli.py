"""Batch command-line front end.

Every command validates inputs, dispatches to the library, and writes one
deterministic JSON report (plus CSV where tabular data is natural).  Exit
codes: 0 when every verdict passes, 1 when any verdict fails or a certified
construction could not be realized, 2 on usage or input validation errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import battery
from .coupling1d import (
    build_density_coupling,
    density_ratio_audit,
    g_marginal_density,
    sample_coupled_pair,
    sum_density_cdf,
)
from .dists import DiscreteDistribution1D, DiscreteDistributionVec
from .errors import DomainError, GsumError
from .geometry import EllipsoidSpec, ellipsoid_game, gaussian_measure_ellipsoid, steinhaus_interval
from .highdim import bessel_identity_check, estimate_cd, mss_partition, normcov_factorize, simplex_vectors
from .ito import ItoConfig, ThreeGaussiansPipeline, TransportMap1D, ito_pair_decomposition
from .metrics import empirical_tv_to_dist, ks_distance
from .normal import std_normal_cdf, std_normal_pdf
from .orderstats import all_gaussian_family, orderstats_moment_sum, quantile_strip_family
from .reports import Report, atomic_write_text, csv_text, write_report
from .rng import RandomSource


def _int_arg(text: str) -> int:
    """Integer argument, accepting scientific notation like 1e6."""
    value = float(text)
    if value != int(value):
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    return int(value)


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, int(args.threads))
    env = os.environ.get("GSUM_THREADS")
    return max(1, int(env)) if env else 1


def _load_dist_1d(path: str) -> DiscreteDistribution1D:
    with open(path) as handle:
        return DiscreteDistribution1D.from_json(handle.read())


def _load_dist_vec(path: str) -> DiscreteDistributionVec:
    with open(path) as handle:
        return DiscreteDistributionVec.from_json(handle.read())


def _load_matrix_csv(path: str) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise DomainError(f"{path}: {exc}") from exc
    return data


def _steps_list(text: str):
    try:
        steps = [int(s) for s in text.split(",") if s]
    except ValueError as exc:
        raise DomainError(f"bad steps list {text!r}") from exc
    if not steps:
        raise DomainError("steps list is empty")
    return steps


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_couple(args) -> Report:
    S = _load_dist_1d(args.dist)
    report = Report("couple", {
        "dist": args.dist, "nu": args.nu, "audit_halfwidth": args.audit_halfwidth,
        "samples": args.samples, "kappa_max": args.kappa_max,
    }, seed=args.seed)
    c = build_density_coupling(S, nu=args.nu, kappa_max=args.kappa_max)
    report.add_metric("y0", c.y0)
    report.add_metric("nu", c.nu)
    report.add_metric("case", "B" if c.case_b_split else "A")
    if c.case_b_split:
        report.add_metric("case_b_p_prime", c.case_b_split[1])
    report.add_metric("kappa", c.kappa)
    report.add_metric("atoms_x", c.xs)
    report.add_metric("atoms_p", c.ps)
    report.add_metric("alpha", c.alpha)
    report.add_metric("beta_minus", c.beta_minus)
    report.add_metric("beta_plus", c.beta_plus)
    resid = abs(c.balance_residual())
    report.add_metric("balance_residual", resid)
    report.add_verdict("balance", resid <= 1e-9, "balance_residual", 1e-9)
    grid = np.linspace(-8.0, 8.0, 3201)
    gdev = float(np.max(np.abs(g_marginal_density(c, grid) - std_normal_pdf(grid))))
    report.add_metric("g_marginal_dev", gdev)
    report.add_verdict("g_marginal", gdev <= 1e-8, "g_marginal_dev", 1e-8)
    audit = density_ratio_audit(c, half_width=args.audit_halfwidth)
    report.add_metric("c_low", audit.c_low)
    report.add_metric("c_high", audit.c_high)
    report.add_metric("ratio", audit.ratio)
    report.add_verdict("c_low_positive", audit.c_low > 0.0, "c_low", 0.0, ">")
    report.add_verdict("ratio_bound", audit.ratio <= battery.RATIO_REGRESSION_BOUND,
                       "ratio", battery.RATIO_REGRESSION_BOUND)
    if args.samples > 0:
        s, g = sample_coupled_pair(c, RandomSource(args.seed), args.samples)
        ks_g = ks_distance(np.sort(g), std_normal_cdf)
        tv = empirical_tv_to_dist(s, S)
        ks_sum = ks_distance(np.sort(s + g), lambda t: sum_density_cdf(c, t))
        report.add_metric("ks_g", ks_g)
        report.add_metric("tv_s", tv)
        report.add_metric("ks_sum", ks_sum)
        report.add_verdict("ks_g", ks_g <= 0.005, "ks_g", 0.005)
        report.add_verdict("tv_s", tv <= 0.003, "tv_s", 0.003)
        report.add_verdict("ks_sum", ks_sum <= 0.005, "ks_sum", 0.005)
    return report


def cmd_decompose(args) -> Report:
    S = _load_dist_1d(args.dist)
    steps_list = _steps_list(args.steps)
    report = Report("decompose", {
        "dist": args.dist, "steps": steps_list, "samples": args.samples,
    }, seed=args.seed)
    threads = _threads(args)
    errs = {}
    for steps in steps_list:
        pipe = ThreeGaussiansPipeline(S, ItoConfig(steps=steps))
        G1, G2, G3, s, err = pipe.sample_arrays(
            args.samples, RandomSource(args.seed, battery.hash_stream("dec", steps)),
            threads=threads,
        )
        errs[steps] = float(err.mean())
        report.add_metric(f"steps{steps}/mean_err", errs[steps])
        report.add_metric(f"steps{steps}/err_q50", float(np.quantile(err, 0.5)))
        report.add_metric(f"steps{steps}/err_q99", float(np.quantile(err, 0.99)))
        report.add_metric(f"steps{steps}/c_emp", pipe.c_emp)
        report.add_metric(f"steps{steps}/lipschitz", pipe.lipschitz)
        report.add_metric(f"steps{steps}/c_clipped", pipe.report.c_clipped)
        if steps == steps_list[-1]:
            for label, G in (("g1", G1), ("g2", G2), ("g3", G3)):
                ks = ks_distance(np.sort(G), std_normal_cdf)
                report.add_metric(f"ks_{label}", ks)
                report.add_verdict(f"ks_{label}", ks <= 0.01, f"ks_{label}", 0.01)
            tv = empirical_tv_to_dist(s, S)
            report.add_metric("tv_s", tv)
            report.add_verdict("tv_s", tv <= 0.003, "tv_s", 0.003)
    if len(steps_list) >= 2:
        lo, hi = steps_list[0], steps_list[-1]
        if errs[lo] <= battery.DEGENERATE_ERR_FLOOR and errs[hi] <= battery.DEGENERATE_ERR_FLOOR:
            drop, drop_ok = 1.0, True
        else:
            drop = 1.0 - errs[hi] / errs[lo]
            drop_ok = drop >= 0.30
        report.add_metric("err_drop", drop)
        report.add_verdict("err_drop", drop_ok, "err_drop", 0.30, ">=")
    return report


def cmd_verify_ito(args) -> Report:
    steps_list = _steps_list(args.steps)
    if args.fn == "identity":
        F = TransportMap1D.identity()
    elif args.fn == "tanh":
        F = TransportMap1D.tabulate(np.tanh)
    else:
        raise DomainError(f"unknown test function {args.fn!r}")
    report = Report("verify-ito", {
        "fn": args.fn, "steps": steps_list, "samples": args.samples,
    }, seed=args.seed)
    threads = _threads(args)
    rms = {}
    for steps in steps_list:
        h, x, y = ito_pair_decomposition(
            F, ItoConfig(steps=steps),
            RandomSource(args.seed, battery.hash_stream("vito", steps)),
            n_paths=args.samples, threads=threads,
        )
        res = F(h) - F.mean_under_gamma - F.lipschitz_certificate * (x + y) / 2.0
        rms[steps] = float(np.sqrt(np.mean(res * res)))
        report.add_metric(f"steps{steps}/rms", rms[steps])
        if steps == steps_list[-1]:
            report.add_metric("ks_x", ks_distance(np.sort(x), std_normal_cdf))
            report.add_metric("ks_y", ks_distance(np.sort(y), std_normal_cdf))
            report.add_verdict("ks_x", report.metrics["ks_x"] <= 0.005, "ks_x", 0.005)
            report.add_verdict("ks_y", report.metrics["ks_y"] <= 0.005, "ks_y", 0.005)
            if args.fn == "identity":
                max_res = float(np.max(np.abs(res)))
                report.add_metric("max_residual", max_res)
                report.add_verdict("exact_residual", max_res == 0.0, "max_residual", 0.0)
    if len(steps_list) >= 2 and args.fn != "identity":
        drop = 1.0 - rms[steps_list[-1]] / rms[steps_list[0]]
        report.add_metric("rms_drop", drop)
        report.add_verdict("rms_drop", drop >= 0.30, "rms_drop", 0.30, ">=")
    return report


def cmd_bessel(args) -> Report:
    report = Report("bessel", {"d": args.d, "samples": args.samples}, seed=args.seed)
    sc = simplex_vectors(args.d)
    c_d, se = estimate_cd(sc, args.samples, RandomSource(args.seed, 1))
    report.add_metric("c_d", c_d)
    report.add_metric("c_d_stderr", se)
    report.add_verdict("c_d_range", 0.1 < c_d < 10.0, "c_d", "(0.1, 10)")
    if args.d == 2:
        dev = abs(c_d - battery.C2_CLOSED_FORM) / se
        report.add_metric("closed_form_sigmas", dev)
        report.add_verdict("closed_form", dev <= 3.0, "closed_form_sigmas", 3.0)
    chk = bessel_identity_check(sc, args.samples, RandomSource(args.seed, 2))
    report.add_metric("freq_max_sigmas", chk.freq_max_sigmas)
    report.add_metric("y_mean_max_sigmas", chk.y_mean_max_sigmas)
    report.add_metric("e_norm2_y", chk.e_norm2_y)
    report.add_verdict("frequencies_uniform", chk.frequencies_uniform_3sigma,
                       "freq_max_sigmas", 3.0)
    report.add_verdict("y_centered", chk.y_mean_centered_3sigma, "y_mean_max_sigmas", 3.0)
    return report


def cmd_partition(args) -> Report:
    vectors = _load_matrix_csv(args.vectors)
    report = Report("partition", {
        "vectors": args.vectors, "k": args.k, "strategy": args.strategy,
    }, seed=args.seed)
    res = mss_partition(vectors, args.k, strategy=args.strategy,
                        rng=RandomSource(args.seed))
    report.add_metric("parts", [list(p) for p in res.parts])
    report.add_metric("sizes", list(res.sizes))
    report.add_metric("per_part_norm", list(res.per_part_norm))
    report.add_metric("norm_bound", 50.0 / args.k)
    report.add_verdict("certified", res.certified(), "per_part_norm",
                       f"sizes in (k/3, 5050k), norms <= 50/k")
    rt = res.from_json(res.to_json())
    report.add_verdict("roundtrip", rt == res and rt.verify(vectors),
                       "parts", "bit-exact reverify")
    return report


def cmd_factorize(args) -> Report:
    X = _load_dist_vec(args.dist)
    report = Report("factorize", {
        "dist": args.dist, "lambda": args.lam, "c0": args.c0,
    }, seed=args.seed)
    plan = normcov_factorize(X, args.lam, c0=args.c0, rng=RandomSource(args.seed))
    report.add_metric("n_parts", len(plan.parts.parts))
    report.add_metric("part_sizes", list(plan.parts.sizes))
    report.add_metric("operator_norms", list(plan.operator_norms))
    report.add_metric("part_mean_norms", [float(np.linalg.norm(m)) for m in plan.part_means])
    exact = True
    for j, part in enumerate(plan.sigma):
        for col in range(len(part)):
            if not np.array_equal(plan.apply_to_scaled_basis(j, col), plan.atoms[part[col]]):
                exact = False
    report.add_verdict("reconstruction_exact", exact, "n_parts", "atoms reproduced bit-exactly")
    report.add_verdict("map_norms", max(plan.operator_norms) <= args.c0,
                       "operator_norms", args.c0)
    report.add_verdict("partition_certified", plan.parts.certified(), "part_sizes",
                       "sizes in (k/3, 5050k), norms <= 50/k")
    return report


def cmd_minimax(args) -> Report:
    points = _load_matrix_csv(args.points)
    report = Report("minimax", {
        "points": args.points, "trace": args.trace, "tol": args.tol,
    }, seed=args.seed)
    sol = ellipsoid_game(points, args.trace, gap_tol=args.tol)
    report.add_metric("primal_value", sol.primal_value)
    report.add_metric("dual_value", sol.dual_value)
    report.add_metric("gap", sol.gap)
    report.add_metric("q_star", sol.q_star.q_matrix)
    report.add_metric("mu_star", sol.mu_star)
    report.add_verdict("gap", sol.gap <= args.tol and sol.converged, "gap", args.tol)
    report.add_verdict("weak_duality", sol.primal_value <= sol.dual_value + 1e-9,
                       "gap", "primal <= dual + 1e-9")
    return report


def cmd_steinhaus(args) -> Report:
    with open(args.intervals) as handle:
        data = json.load(handle)
    try:
        intervals = [(float(a), float(b)) for a, b in data["intervals"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed intervals JSON: {exc}") from exc
    report = Report("steinhaus", {"intervals": intervals}, seed=args.seed)
    delta = steinhaus_interval(intervals)
    report.add_metric("delta", "inf" if math.isinf(delta) else delta)
    report.add_verdict("positive_radius", delta > 0.0, "delta", 0.0, ">")
    return report


def cmd_ellipsoid_measure(args) -> Report:
    q = _load_matrix_csv(args.q)
    spec = EllipsoidSpec(q)
    report = Report("ellipsoid-measure", {
        "q": args.q, "samples": args.samples, "trace": spec.trace,
    }, seed=args.seed)
    est, se = gaussian_measure_ellipsoid(spec, args.samples, RandomSource(args.seed))
    report.add_metric("estimate", est)
    report.add_metric("stderr", se)
    if spec.trace <= 0.1 + 1e-12:
        report.add_verdict("measure_at_least_half", est >= 0.5 - 3.0 * se,
                           "estimate", "0.5 - 3 stderr", ">=")
    return report


def cmd_orderstats(args) -> Report:
    if args.family == "gaussian":
        family = all_gaussian_family(args.n)
    elif args.family == "strips":
        family = quantile_strip_family(args.n)
    else:
        raise DomainError(f"unknown family {args.family!r}")
    report = Report("orderstats", {
        "n": args.n, "family": args.family, "reps": args.reps,
    }, seed=args.seed)
    res = orderstats_moment_sum(family, args.reps, RandomSource(args.seed))
    report.add_metric("moment_sum", res.moment_sum)
    report.add_metric("stderr", res.stderr)
    report.add_metric("ratio", res.ratio)
    report.add_verdict("finite", math.isfinite(res.moment_sum), "moment_sum", "finite")
    if args.out and args.out.endswith(".csv"):
        text = csv_text(
            ["n", "reps", "moment_sum", "stderr", "ratio"],
            [[res.n, res.reps, res.moment_sum, res.stderr, res.ratio]],
        )
        atomic_write_text(args.out, text)
        args.out = os.path.splitext(args.out)[0] + ".json"
    return report


def cmd_suite(args) -> Report:
    if args.manifest:
        with open(args.manifest) as handle:
            manifest = json.load(handle)
    else:
        manifest = battery.DEFAULT_MANIFEST
    report = run_suite_with_progress(manifest, threads=_threads(args), quiet=args.quiet)
    return report


def run_suite_with_progress(manifest: dict, threads: int = 1, quiet: bool = False) -> Report:
    report = battery.run_suite(manifest, threads=threads)
    if not quiet:
        for name, verdict in sorted(report.verdicts.items()):
            print(f"{verdict['status'].upper():13s} {name}")
    return report


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsum",
        description="Gaussian-sum couplings, decompositions and their certification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_default=0):
        p.add_argument("--seed", type=int, default=seed_default)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (GSUM_THREADS fallback; results identical)")

    p = sub.add_parser("couple", help="build and audit a density coupling")
    p.add_argument("--dist", required=True)
    p.add_argument("--nu", type=float, default=0.1)
    p.add_argument("--audit-halfwidth", type=float, default=6.0)
    p.add_argument("--kappa-max", type=float, default=0.05)
    p.add_argument("--samples", type=_int_arg, default=200_000)
    common(p, 7)
    p.set_defaults(handler=cmd_couple)

    p = sub.add_parser("decompose", help="run the three-Gaussian pipeline")
    p.add_argument("--dist", required=True)
    p.add_argument("--steps", type=str, default="4096")
    p.add_argument("--samples", type=_int_arg, default=1_000_000)
    common(p, 42)
    p.set_defaults(handler=cmd_decompose)

    p = sub.add_parser("verify-ito", help="check the pair decomposition on a test map")
    p.add_argument("--fn", choices=["identity", "tanh"], default="tanh")
    p.add_argument("--steps", type=str, default="1024,4096")
    p.add_argument("--samples", type=_int_arg, default=100_000)
    common(p, 11)
    p.set_defaults(handler=cmd_verify_ito)

    p = sub.add_parser("bessel", help="simplex region construction checks")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--samples", type=_int_arg, default=1_000_000)
    common(p, 3)
    p.set_defaults(handler=cmd_bessel)

    p = sub.add_parser("partition", help="certified vector partition")
    p.add_argument("--vectors", required=True, help="CSV, one vector per row")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--strategy", choices=["auto", "exhaustive", "randomized"],
                   default="auto")
    common(p)
    p.set_defaults(handler=cmd_partition)

    p = sub.add_parser("factorize", help="norm-vs-covariance factorization plan")
    p.add_argument("--dist", required=True, help="vector distribution JSON")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--c0", type=float, default=10.0)
    common(p)
    p.set_defaults(handler=cmd_factorize)

    p = sub.add_parser("minimax", help="trace-constrained ellipsoid game")
    p.add_argument("--points", required=True, help="CSV, one point per row")
    p.add_argument("--trace", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-6)
    common(p)
    p.set_defaults(handler=cmd_minimax)

    p = sub.add_parser("steinhaus", help="largest centered interval in A + A")
    p.add_argument("--intervals", required=True, help='JSON {"intervals": [[a, b], ...]}')
    common(p)
    p.set_defaults(handler=cmd_steinhaus)

    p = sub.add_parser("ellipsoid-measure", help="Gaussian measure of an ellipsoid")
    p.add_argument("--q", required=True, help="CSV matrix")
    p.add_argument("--samples", type=_int_arg, default=1_000_000)
    common(p)
    p.set_defaults(handler=cmd_ellipsoid_measure)

    p = sub.add_parser("orderstats", help="sorted-sample moment audit")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--family", choices=["gaussian", "strips"], default="gaussian")
    p.add_argument("--reps", type=_int_arg, default=200)
    common(p, 11)
    p.set_defaults(handler=cmd_orderstats)

    p = sub.add_parser("suite", help="run the full certification battery")
    p.add_argument("--manifest", type=str, default=None)
    p.add_argument("--quiet", action="store_true")
    common(p, 20260807)
    p.set_defaults(handler=cmd_suite)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.handler(args)
    except (DomainError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GsumError as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return 1
    out = args.out or f"{report.command.replace('-', '_')}_report.json"
    write_report(report, out)
    statuses = [v["status"] for v in report.verdicts.values()]
    if any(s == "fail" for s in statuses):
        return 1
    if any(s == "indeterminate" for s in statuses):
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
