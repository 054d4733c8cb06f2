"""Coupling a small discrete variable S with a Gaussian partner G.

The construction splits each shifted normal density phi(. - x_j) into a
"shaved" piece g_{j,0} (a nu-multiple of phi(. - y0) on a half-line) and a
remainder g_{j,1} > 0, with per-atom masses

    alpha_j = integral g_{j,0},
    beta_{j,-} = integral of g_{j,1} left of x_j,
    beta_{j,+} = integral of g_{j,1} right of x_j,

so alpha_j + beta_{j,-} + beta_{j,+} = 1 per atom.  The anchor y0 in [-1, 1]
is chosen so the mass-balance equation

    sum_j p_j beta_{j,+}  =  sum_{atoms <= y0} p_j (1 - alpha_j)

holds; the balance residual is continuous and strictly decreasing in y0
between atoms and jumps down across them, so either a root lies strictly
between atoms (case A) or the crossing happens at an atom, which is then split
into two bookkeeping copies with masses p' and p - p' (case B).  Conditional
samplers (half-normal for the shaved piece, mixture-with-rejection for the
remainders) then produce pairs (s, g) with s ~ S exactly, g ~ N(0,1) exactly,
and the sum s + g distributed with an explicit closed-form density f that is
pinched between multiples of phi(. - y0).

All densities and CDFs here are exact finite combinations of phi and Phi; no
quadrature enters the construction itself (tests cross-check against
independent quadrature).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dists import DiscreteDistribution1D, subgaussian_norm
from .errors import AdmissionError, DomainError, InternalError
from .normal import std_normal_cdf, std_normal_pdf, std_normal_sf
from .rng import RandomSource
from .transport import TransportMap1D

DEFAULT_NU = 0.1
DEFAULT_KAPPA_MAX = 0.05
CENTER_TOL = 1e-10
BALANCE_TOL = 1e-9
NU_FLOOR = 1e-6


@dataclass(frozen=True)
class DensityCoupling:
    """Immutable coupling plan for one source distribution.

    Working arrays live on the (possibly case-B duplicated) atom system:
    `xs`, `ps` are the working atoms; `i_y0` counts the atoms in the left
    group (atoms <= y0, with the p' copy on the left side).
    """

    source: DiscreteDistribution1D
    y0: float
    nu: float
    case_b_split: tuple | None      # (working index of the p' copy, p')
    xs: np.ndarray                  # working atom positions (sorted)
    ps: np.ndarray                  # working atom masses (sum 1)
    alpha: np.ndarray
    beta_minus: np.ndarray
    beta_plus: np.ndarray
    gamma_minus: float
    gamma_plus: float
    i_y0: int
    kappa: float

    @property
    def in_window(self) -> np.ndarray:
        return np.abs(self.xs) <= 1.0

    @property
    def left_branch(self) -> np.ndarray:
        """Atoms whose shaved piece sits on (-inf, y0] (x_j <= y0)."""
        return self.xs <= self.y0

    @property
    def left_group(self) -> np.ndarray:
        """Membership in the left balance group (first i_y0 working atoms)."""
        mask = np.zeros(self.xs.size, dtype=bool)
        mask[: self.i_y0] = True
        return mask

    def balance_residual(self) -> float:
        lhs = float(np.dot(self.ps, self.beta_plus))
        rhs = float(np.dot(self.ps[: self.i_y0], 1.0 - self.alpha[: self.i_y0]))
        return lhs - rhs


@dataclass(frozen=True)
class DensityAudit:
    """Measured pinch ratio of the sum density against phi(. - y0)."""

    c_low: float
    c_high: float
    grid: np.ndarray
    y0: float

    @property
    def ratio(self) -> float:
        return self.c_high / self.c_low


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _alpha_beta(xs, y0, nu):
    """Per-atom (alpha, beta_minus, beta_plus) for anchor y0.

    Outside [-1, 1] the split is trivial (alpha 0, betas 1/2); inside, the
    betas are closed forms in Phi depending on which side of y0 the atom sits.
    """
    xs = np.asarray(xs, dtype=float)
    inw = np.abs(xs) <= 1.0
    alpha = np.where(inw, nu / 2.0, 0.0)
    phi_rel = std_normal_cdf(xs - y0)
    left = xs <= y0
    beta_minus = np.where(left, 0.5 - nu * phi_rel, 0.5 - nu * (phi_rel - 0.5))
    beta_plus = np.where(left, 0.5 - nu * (0.5 - phi_rel), 0.5 - nu * (1.0 - phi_rel))
    beta_minus = np.where(inw, beta_minus, 0.5)
    beta_plus = np.where(inw, beta_plus, 0.5)
    return alpha, beta_minus, beta_plus


def _residual(xs, ps, y0, nu):
    """Balance residual sum p beta_plus - sum_{x<=y0} p (1-alpha) at y0."""
    alpha, _, beta_plus = _alpha_beta(xs, y0, nu)
    left = xs <= y0
    return float(np.dot(ps, beta_plus) - np.dot(ps[left], 1.0 - alpha[left]))


def _find_anchor(xs, ps, nu):
    """Locate the balancing anchor: (y0, None) or (y0 == atom, p')."""
    resid = lambda y: _residual(xs, ps, y, nu)
    r_start = resid(-1.0)
    if r_start < 0.0:
        raise InternalError("balance residual negative at the left endpoint")
    interior = [float(a) for a in xs if -1.0 < a <= 1.0]
    prev = -1.0
    r_prev = r_start
    for a in interior:
        r_lo = resid(np.nextafter(a, -np.inf))
        if r_lo <= 0.0:
            if r_prev == 0.0:
                return prev, None
            root = brentq(resid, prev, np.nextafter(a, -np.inf), xtol=1e-14)
            return float(root), None
        r_at = resid(a)
        if r_at <= 0.0:
            # crossing happens at the atom itself: split its mass
            alpha, _, beta_plus = _alpha_beta(xs, a, nu)
            strictly_below = xs < a
            j = int(np.searchsorted(xs, a))
            lhs = float(np.dot(ps, beta_plus))
            below = float(np.dot(ps[strictly_below], 1.0 - alpha[strictly_below]))
            p_prime = (lhs - below) / (1.0 - alpha[j])
            if not (0.0 < p_prime < ps[j]):
                # residual limits bracket 0, so p' must lie inside (0, p_j);
                # hitting the closed endpoints means the root is the segment
                # endpoint itself, a measure-zero case handled as case A
                if abs(p_prime) <= 1e-13:
                    return float(np.nextafter(a, -np.inf)), None
                raise InternalError(f"case-B split mass {p_prime!r} outside (0, p_j)")
            return float(a), float(p_prime)
        prev, r_prev = a, r_at
    r_end = resid(1.0)
    if r_end <= 0.0:
        if r_prev == 0.0:
            return prev, None
        root = brentq(resid, prev, 1.0, xtol=1e-14)
        return float(root), None
    raise InternalError("no balancing anchor in [-1, 1]")


def build_density_coupling(
    S: DiscreteDistribution1D,
    nu: float = DEFAULT_NU,
    kappa_max: float = DEFAULT_KAPPA_MAX,
) -> DensityCoupling:
    """Build the coupling plan for a centered, small-tail-norm variable.

    nu is halved (down to a floor) whenever the positivity check g_{j,1} > 0
    fails on its grid; with the default nu = 0.1 the analytic bound
    nu * exp(2) < 1 already guarantees positivity for anchors in [-1, 1].
    """
    if not isinstance(S, DiscreteDistribution1D):
        raise DomainError("source must be a DiscreteDistribution1D")
    if abs(S.mean()) > CENTER_TOL:
        raise AdmissionError(f"source mean {S.mean()!r} exceeds centering tolerance")
    cert = subgaussian_norm(S)
    if cert.kappa > kappa_max:
        raise AdmissionError(
            f"tail norm {cert.kappa:.6g} exceeds admission threshold {kappa_max:.6g}"
        )
    if not (0.0 < nu < 0.5):
        raise DomainError("nu must lie in (0, 1/2)")

    while nu >= NU_FLOOR:
        y0, p_prime = _find_anchor(S.xs, S.ps, nu)
        if p_prime is None:
            xs_w, ps_w = S.xs.copy(), S.ps.copy()
            case_b = None
            i_y0 = int(np.searchsorted(xs_w, y0, side="right"))
        else:
            j = int(np.searchsorted(S.xs, y0))
            xs_w = np.insert(S.xs, j, S.xs[j])
            ps_w = np.insert(S.ps, j, p_prime)
            ps_w[j + 1] = S.ps[j] - p_prime
            case_b = (j, p_prime)
            i_y0 = j + 1
        alpha, beta_minus, beta_plus = _alpha_beta(xs_w, y0, nu)
        if _positivity_ok(xs_w, y0, nu):
            coupling = DensityCoupling(
                source=S,
                y0=y0,
                nu=nu,
                case_b_split=case_b,
                xs=xs_w,
                ps=ps_w,
                alpha=alpha,
                beta_minus=beta_minus,
                beta_plus=beta_plus,
                gamma_minus=float(np.dot(ps_w, beta_minus)),
                gamma_plus=float(np.dot(ps_w, beta_plus)),
                i_y0=i_y0,
                kappa=cert.kappa,
            )
            residual = abs(coupling.balance_residual())
            if residual > BALANCE_TOL:
                raise InternalError(f"balance residual {residual:.3e} above tolerance")
            return coupling
        nu *= 0.5
    raise InternalError("no admissible nu: remainder densities not positive")


def _positivity_ok(xs, y0, nu, lo=-8.0, hi=8.0, step=1e-3):
    """Grid check that g_{j,1} > 0 for every atom inside [-1, 1]."""
    grid = np.arange(lo, hi + step, step)
    for xj in xs[np.abs(xs) <= 1.0]:
        if xj <= y0:
            pts = grid[grid <= y0]
        else:
            pts = grid[grid >= y0]
        g1 = std_normal_pdf(pts - xj) - nu * std_normal_pdf(pts - y0)
        if g1.size and float(g1.min()) <= 0.0:
            return False
    return True


# ---------------------------------------------------------------------------
# densities (closed forms)
# ---------------------------------------------------------------------------

def component_densities(c: DensityCoupling, j: int, x):
    """(g_{j,0}(x), g_{j,1}(x)) for the j-th working atom; sum is phi(x-x_j)."""
    if not 0 <= j < c.xs.size:
        raise DomainError(f"atom index {j} out of range")
    x = np.asarray(x, dtype=float)
    xj = c.xs[j]
    base = std_normal_pdf(x - xj)
    if abs(xj) > 1.0:
        g0 = np.zeros_like(base)
    else:
        side = (x <= c.y0) if xj <= c.y0 else (x >= c.y0)
        g0 = c.nu * std_normal_pdf(x - c.y0) * side
    g1 = base - g0
    if np.ndim(g0) == 0:
        return float(g0), float(g1)
    return g0, g1


def _g1_mixture(c: DensityCoupling, v):
    """psi(v) = sum_i p_i g_{i,1}(v + x_i): the recentred remainder mixture."""
    v = np.asarray(v, dtype=float)
    out = std_normal_pdf(v)
    for xi, pi, inw, left in zip(c.xs, c.ps, c.in_window, c.left_branch):
        if not inw:
            continue
        u = v + xi
        side = (u <= c.y0) if left else (u >= c.y0)
        out = out - c.nu * pi * std_normal_pdf(u - c.y0) * side
    return out


def _g1_mixture_cdf(c: DensityCoupling, w):
    """Integral of psi over (-inf, w], exact in Phi."""
    w = np.asarray(w, dtype=float)
    out = std_normal_cdf(w)
    for xi, pi, inw, left in zip(c.xs, c.ps, c.in_window, c.left_branch):
        if not inw:
            continue
        shifted = std_normal_cdf(w + xi - c.y0)
        if left:
            mass = np.minimum(shifted, 0.5)
        else:
            mass = np.maximum(shifted - 0.5, 0.0)
        out = out - c.nu * pi * mass
    return out


def sum_density(c: DensityCoupling, t):
    """Density f(t) of s + g under the coupling, as the exact three-term sum."""
    t = np.asarray(t, dtype=float)
    inw, left = c.in_window, c.left_branch
    p_left = float(np.dot(c.ps, inw & left))
    p_right = float(np.dot(c.ps, inw & ~left))
    shaved = std_normal_pdf(t - c.y0) * c.nu * (
        p_left * (t <= c.y0) + p_right * (t >= c.y0)
    )
    out = np.asarray(shaved, dtype=float)
    group_left = c.left_group
    for j in range(c.xs.size):
        coef = c.ps[j] * (1.0 - c.alpha[j])
        rel = t - c.xs[j]
        if group_left[j]:
            out = out + (coef / c.gamma_plus) * _g1_mixture(c, rel) * (rel >= 0)
        else:
            out = out + (coef / c.gamma_minus) * _g1_mixture(c, rel) * (rel < 0)
    return float(out) if out.ndim == 0 else out


def sum_density_cdf(c: DensityCoupling, t):
    """CDF of s + g, exact in Phi (no quadrature)."""
    t = np.asarray(t, dtype=float)
    inw, left = c.in_window, c.left_branch
    p_left = float(np.dot(c.ps, inw & left))
    p_right = float(np.dot(c.ps, inw & ~left))
    out = c.nu * (
        p_left * std_normal_cdf(np.minimum(t, c.y0) - c.y0)
        + p_right * np.maximum(std_normal_cdf(t - c.y0) - 0.5, 0.0)
    )
    out = np.asarray(out, dtype=float)
    psi0 = float(_g1_mixture_cdf(c, 0.0))
    group_left = c.left_group
    for j in range(c.xs.size):
        coef = c.ps[j] * (1.0 - c.alpha[j])
        rel = t - c.xs[j]
        if group_left[j]:
            out = out + (coef / c.gamma_plus) * np.maximum(
                _g1_mixture_cdf(c, rel) - psi0, 0.0
            )
        else:
            out = out + (coef / c.gamma_minus) * _g1_mixture_cdf(c, np.minimum(rel, 0.0))
    return float(out) if out.ndim == 0 else out


def sum_density_sf(c: DensityCoupling, t):
    """Survival function of s + g, exact in Phi (tail-accurate)."""
    t = np.asarray(t, dtype=float)
    inw, left = c.in_window, c.left_branch
    p_left = float(np.dot(c.ps, inw & left))
    p_right = float(np.dot(c.ps, inw & ~left))
    out = c.nu * (
        p_left * np.maximum(std_normal_sf(t - c.y0) - 0.5, 0.0)
        + p_right * np.minimum(std_normal_sf(t - c.y0), 0.5)
    )
    out = np.asarray(out, dtype=float)
    psi0 = float(_g1_mixture_cdf(c, 0.0))
    group_left = c.left_group
    for j in range(c.xs.size):
        coef = c.ps[j] * (1.0 - c.alpha[j])
        rel = t - c.xs[j]
        if group_left[j]:
            out = out + (coef / c.gamma_plus) * _g1_mixture_sf(c, np.maximum(rel, 0.0))
        else:
            out = out + (coef / c.gamma_minus) * np.maximum(
                psi0 - _g1_mixture_cdf(c, rel), 0.0
            )
    return float(out) if out.ndim == 0 else out


def _g1_mixture_sf(c: DensityCoupling, w):
    """Integral of psi over [w, inf), computed without cancellation."""
    w = np.asarray(w, dtype=float)
    out = std_normal_sf(w)
    for xi, pi, inw, left in zip(c.xs, c.ps, c.in_window, c.left_branch):
        if not inw:
            continue
        shifted = std_normal_sf(w + xi - c.y0)
        if left:
            mass = np.maximum(shifted - 0.5, 0.0)
        else:
            mass = np.minimum(shifted, 0.5)
        out = out - c.nu * pi * mass
    return out


def g_marginal_density(c: DensityCoupling, x):
    """Density of the Gaussian partner g assembled from the three branches.

    Equals phi exactly when the balance equation holds; the assembly below
    does not assume it, so comparing against phi audits the balance.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x, dtype=float)
    for j in range(c.xs.size):
        if not c.in_window[j]:
            continue
        u = x + c.xs[j]
        side = (u <= c.y0) if c.left_branch[j] else (u >= c.y0)
        out = out + c.ps[j] * c.nu * std_normal_pdf(u - c.y0) * side
    group_left = c.left_group
    mass_left = float(np.dot(c.ps[group_left], 1.0 - c.alpha[group_left]))
    mass_right = float(np.dot(c.ps[~group_left], 1.0 - c.alpha[~group_left]))
    psi = _g1_mixture(c, x)
    out = out + (mass_right / c.gamma_minus) * psi * (x < 0)
    out = out + (mass_left / c.gamma_plus) * psi * (x >= 0)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# audit / transport
# ---------------------------------------------------------------------------

def density_ratio_audit(
    c: DensityCoupling, half_width: float = 6.0, grid_step: float = 1e-3
) -> DensityAudit:
    """Min/max of f(x) / phi(x - y0) over a grid around the anchor."""
    if half_width < 4.0:
        raise DomainError("audit half width must be at least 4")
    grid = c.y0 + np.arange(-half_width, half_width + grid_step, grid_step)
    f = sum_density(c, grid)
    if np.any(f <= 0.0):
        raise InternalError("nonpositive sum density on the audit grid")
    ratio = f / std_normal_pdf(grid - c.y0)
    return DensityAudit(float(ratio.min()), float(ratio.max()), grid, c.y0)


def bobkov_transport(
    c: DensityCoupling,
    n_knots: int = 4097,
    half_range: float = 8.0,
    audit: DensityAudit | None = None,
    slope_tol: float = 0.05,
) -> TransportMap1D:
    """Monotone map F = Q_f o Phi pushing N(0,1) to the sum density f.

    Quantiles come from the exact CDF (bracket grid + Newton refinement).
    The stored Lipschitz certificate (max finite-difference slope) is checked
    against the pinch-ratio bound c_high/c_low within `slope_tol`.
    """
    if audit is None:
        audit = density_ratio_audit(c, half_width=half_range + 1.0)
    knots = np.linspace(-half_range, half_range, n_knots)
    # pinching around phi(. - y0) makes knot + y0 a global starting point;
    # log-space Newton keeps full relative accuracy in both tails
    lower = knots <= 0.0
    t = knots + c.y0
    log_p = np.where(
        lower,
        np.log(std_normal_cdf(knots)),
        np.log(std_normal_sf(knots)),
    )
    for _ in range(8):
        mass = np.where(lower, sum_density_cdf(c, t), sum_density_sf(c, t))
        mass = np.maximum(mass, 1e-300)
        sign = np.where(lower, 1.0, -1.0)
        step = sign * mass * (np.log(mass) - log_p) / sum_density(c, t)
        t = t - np.clip(step, -2.0, 2.0)
    if np.any(np.diff(t) < 0):
        raise InternalError("quantile table is not monotone")
    transport = TransportMap1D.from_table(knots, t)
    bound = audit.ratio * (1.0 + slope_tol)
    if transport.lipschitz_certificate > bound:
        raise InternalError(
            f"slope certificate {transport.lipschitz_certificate:.6g} exceeds "
            f"pinch-ratio bound {bound:.6g}"
        )
    return transport


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

_REJECTION_CAP = 1000


def sample_coupled_pair(c: DensityCoupling, rng: RandomSource, n: int = 1):
    """n joint draws (s, g): s ~ S exactly, g ~ N(0,1) exactly, s+g ~ f.

    Vectorized; the remainder branch uses exact rejection against half-normal
    proposals (acceptance at least 1 - nu per proposal).
    """
    gen = rng.generator()
    n = int(n)
    ps = c.ps / c.ps.sum()
    idx = gen.choice(c.xs.size, size=n, p=ps)
    s = c.xs[idx]
    shaved = gen.random(n) < c.alpha[idx]
    g = np.empty(n)

    # shaved branch: half-normal on the atom's side of y0
    sh = np.nonzero(shaved)[0]
    if sh.size:
        z = np.abs(gen.standard_normal(sh.size))
        sign = np.where(c.left_branch[idx[sh]], -1.0, 1.0)
        g[sh] = (c.y0 + sign * z) - c.xs[idx[sh]]

    # remainder branch: left group draws from the right mixture and vice versa;
    # the mixture component is independent of which atom the sample sits at
    rem = np.nonzero(~shaved)[0]
    if rem.size:
        is_left_group = idx[rem] < c.i_y0
        for side, rows in (("+", rem[is_left_group]), ("-", rem[~is_left_group])):
            if rows.size:
                g[rows] = _draw_remainder_mixture(c, gen, rows.size, side)
    return s, g


def _draw_remainder_mixture(c: DensityCoupling, gen, n: int, side: str):
    """Draw n values of g from the mixture W_{side} (side '+' or '-')."""
    if side == "+":
        weights = c.ps * c.beta_plus / c.gamma_plus
        sign = 1.0
    else:
        weights = c.ps * c.beta_minus / c.gamma_minus
        sign = -1.0
    weights = weights / weights.sum()
    comp = gen.choice(c.xs.size, size=n, p=weights)
    out = np.empty(n)
    pending = np.arange(n)
    for _ in range(_REJECTION_CAP):
        if pending.size == 0:
            return out
        xi = c.xs[comp[pending]]
        u = xi + sign * np.abs(gen.standard_normal(pending.size))
        inw = c.in_window[comp[pending]]
        left = c.left_branch[comp[pending]]
        active = np.where(left, u <= c.y0, u >= c.y0) & inw
        ratio = np.where(
            active, c.nu * std_normal_pdf(u - c.y0) / std_normal_pdf(u - xi), 0.0
        )
        accept = gen.random(pending.size) >= ratio
        out[pending[accept]] = u[accept] - xi[accept]
        pending = pending[~accept]
    raise InternalError("rejection sampler exceeded its iteration cap")


def conditional_atom_given_sum(c: DensityCoupling, t: float) -> np.ndarray:
    """P[S = x_j | s + g = t] over the source atoms (case-B copies merged)."""
    weights = _conditional_weights(c, np.asarray([float(t)]))[0]
    total = weights.sum()
    if total <= 0.0:
        raise DomainError(f"sum density vanishes at t={t!r}")
    working = weights / total
    return _merge_working_to_source(c, working)


def _conditional_weights(c: DensityCoupling, ts: np.ndarray) -> np.ndarray:
    """Unnormalized Bayes weights over working atoms; rows sum to f(t)."""
    ts = np.asarray(ts, dtype=float)
    K = c.xs.size
    out = np.zeros((ts.size, K))
    group_left = c.left_group
    for j in range(K):
        xj = c.xs[j]
        g0 = np.zeros_like(ts)
        if c.in_window[j]:
            side = (ts <= c.y0) if c.left_branch[j] else (ts >= c.y0)
            g0 = c.nu * std_normal_pdf(ts - c.y0) * side
        rel = ts - xj
        coef = c.ps[j] * (1.0 - c.alpha[j])
        if group_left[j]:
            w = (coef / c.gamma_plus) * _g1_mixture(c, rel) * (rel >= 0)
        else:
            w = (coef / c.gamma_minus) * _g1_mixture(c, rel) * (rel < 0)
        out[:, j] = c.ps[j] * g0 + w
    return out


def _merge_working_to_source(c: DensityCoupling, working: np.ndarray) -> np.ndarray:
    if c.case_b_split is None:
        return working
    j, _ = c.case_b_split
    merged = np.concatenate([working[:j], [working[j] + working[j + 1]], working[j + 2 :]])
    return merged


def sample_atoms_given_sums(c: DensityCoupling, ts: np.ndarray, rng: RandomSource):
    """Vectorized draw of s | (s + g = t) for an array of sums."""
    gen = rng.generator()
    ts = np.asarray(ts, dtype=float)
    out = np.empty(ts.size)
    chunk = 1 << 16
    for start in range(0, ts.size, chunk):
        block = ts[start : start + chunk]
        w = _conditional_weights(c, block)
        totals = w.sum(axis=1, keepdims=True)
        if np.any(totals <= 0.0):
            raise InternalError("sum density vanished at a sampled point")
        cum = np.cumsum(w / totals, axis=1)
        u = gen.random(block.size)
        idx = (cum < u[:, None]).sum(axis=1)
        idx = np.minimum(idx, c.xs.size - 1)
        out[start : start + chunk] = c.xs[idx]
    return out


# ---------------------------------------------------------------------------
# quantization of general sources
# ---------------------------------------------------------------------------

def quantize_quantiles(quantile_fn, n_atoms: int = 512, recenter: bool = True):
    """Atomize a continuous law at quantile-equispaced points.

    Returns (distribution, w1_error_estimate); the estimate integrates
    |Q(u) - atom(u)| over a fine probability grid.
    """
    if n_atoms < 1:
        raise DomainError("need at least one atom")
    u_atoms = (np.arange(n_atoms) + 0.5) / n_atoms
    xs = np.asarray([float(quantile_fn(u)) for u in u_atoms])
    ps = np.full(n_atoms, 1.0 / n_atoms)
    if recenter:
        xs = xs - float(np.dot(xs, ps))
    dist = DiscreteDistribution1D.from_arrays(xs, ps)
    fine = (np.arange(16 * n_atoms) + 0.5) / (16 * n_atoms)
    q_fine = np.asarray([float(quantile_fn(u)) for u in fine])
    if recenter:
        q_fine = q_fine - np.mean(q_fine)
    atom_idx = np.minimum((fine * n_atoms).astype(int), n_atoms - 1)
    w1 = float(np.mean(np.abs(q_fine - xs[atom_idx])))
    return dist, w1
