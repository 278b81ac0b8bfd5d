"""Continuation in eps and quantitative checks of the asymptotic laws.

Everything here is a pure function of report data plus the module oracles,
so re-running a diagnostic on a persisted report reproduces its output
bit for bit.  The asymptotic laws are checked as trend/stabilization
criteria: discretization plus finite eps keeps the exact limits out of
reach at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bubbles, constants, riesz, solver, spectral
from .errors import (DegenerateStrip, EmptyInterior, MissingRobin, OutOfRange,
                     QuadratureFailure, SampleTooClose)
from .grids import DomainSpec, GridField
from .model import Params, Regime, exponents
from .solver import SolutionRecord, SolveOptions, Seed


@dataclass
class ContinuationReport:
    params: Params
    domain: DomainSpec
    eps_list: list
    records: list            # SolutionRecord per eps, in order
    derived: list            # per-record dict of diagnostics
    strip_margin: float

    def to_dict(self):
        return {
            "n": self.params.n,
            "s": self.params.s,
            "mu": self.params.mu,
            "regime": self.params.regime.value,
            "domain": {
                "kind": self.domain.kind.value,
                "bounds": list(self.domain.bounds),
                "grid": self.domain.n_grid,
            },
            "eps_list": list(self.eps_list),
            "strip_margin": self.strip_margin,
            "records": [r.to_dict() for r in self.records],
            "derived": self.derived,
        }


def _with_eps(params: Params, eps):
    return Params(n=params.n, s=params.s, mu=params.mu, eps=float(eps),
                  regime=params.regime)


def _strip_quantities(rec: SolutionRecord, margin):
    dom = rec.grid.domain
    interior = dom.interior_mask(margin)
    strip = ~interior
    # exclude the boundary nodes themselves (zero by construction)
    vals = rec.grid.values
    w = dom.node_weights()
    strip_sup = float(np.max(vals[strip])) if np.any(strip) else 0.0
    interior_l1 = float(np.sum((w * vals)[interior]))
    return strip_sup, interior_l1


def _rate_lhs(params: Params, eps, sup):
    n, s = params.n, params.s
    if params.regime is Regime.BREZIS_NIRENBERG:
        return eps * sup ** ((2.0 * n - 8.0 * s) / (n - 2.0 * s))
    return ((n - 2.0 * s) ** 2
            / (2.0 * (n + 2.0 * s - eps * (n - 2.0 * s)))) * eps * sup ** 2


def continuation(params: Params, domain: DomainSpec, eps_list, opts=None,
                 basis=None, weights=None, window=3.0, strip_cells=10,
                 profile_points=241) -> ContinuationReport:
    """Warm-started solves over a strictly decreasing eps schedule."""
    eps_list = [float(e) for e in eps_list]
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise OutOfRange("eps_list must be strictly decreasing")
    if any(e <= 0.0 for e in eps_list):
        raise OutOfRange("eps values must be positive")
    report = ContinuationReport(params=params, domain=domain, eps_list=eps_list,
                                records=[], derived=[],
                                strip_margin=strip_cells * max(domain.spacings()))
    if not eps_list:
        return report
    opts = opts or SolveOptions()
    if basis is None:
        basis = spectral.build_basis(domain, domain.n_grid // 4)
    p_terms_mu = (params.n - 2.0 * params.s
                  if params.regime is Regime.SUBCRITICAL_HARTREE else params.mu)
    if weights is None:
        weights = riesz.build_weights(domain, p_terms_mu)
    solve = (solver.solve_subcritical
             if params.regime is Regime.SUBCRITICAL_HARTREE else solver.solve_bn)
    seed = opts.seed
    for eps in eps_list:
        p_eps = _with_eps(params, eps)
        step_opts = SolveOptions(strategy=opts.strategy, theta=opts.theta,
                                 max_iter=opts.max_iter,
                                 residual_tol=opts.residual_tol,
                                 normalization=opts.normalization, seed=seed,
                                 positivity_tol=opts.positivity_tol)
        rec = solve(p_eps, domain, basis, weights, step_opts)
        seed = Seed.warm_start(rec.grid)
        report.records.append(rec)
        v = bubbles.rescale(rec.grid, rec.sup_norm, rec.argmax, p_eps,
                            window=window, m_out=profile_points)
        pdist = bubbles.profile_distance(v, p_eps, window)
        strip_sup, interior_l1 = _strip_quantities(rec, report.strip_margin)
        report.derived.append({
            "eps": eps,
            "mu_eps": rec.mu_eps,
            "mu_eps_pow_eps": rec.mu_eps ** eps,
            "x_eps": list(rec.argmax),
            "profile_distance": pdist,
            "boundary_strip_sup": strip_sup,
            "interior_l1": interior_l1,
            "rate_lhs": _rate_lhs(p_eps, eps, rec.sup_norm),
            "sup_norm": rec.sup_norm,
            "sup_norm_interp": rec.sup_norm_interp,
            "domination_c": _domination_constant(v, p_eps, window),
            "residual": rec.residual,
            "quotient": rec.quotient,
        })
    return report


def _domination_constant(v: GridField, params: Params, window):
    """Empirical smallest c with v <= c W[0,1] on the rescaled window."""
    from . import constants as cst
    alpha = cst.alpha_nmus(params.n, params.n - 2.0 * params.s, params.s)
    e = (params.n - 2.0 * params.s) / 2.0
    axes = v.domain.axes()
    if v.domain.dim == 1:
        r2 = axes[0] ** 2
    else:
        gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
        r2 = gx ** 2 + gy ** 2
    w_ref = alpha * (1.0 / (1.0 + r2)) ** e
    return float(np.max(np.maximum(v.values, 0.0) / w_ref))


# --------------------------------------------------------------------------
# scalar sequence checks
# --------------------------------------------------------------------------

def mu_power_check(report: ContinuationReport):
    """Sequence mu_eps^eps, plus whether |mu^eps - 1| decreases lately."""
    if not report.records:
        raise OutOfRange("mu_power_check needs a nonempty report")
    seq = [(d["eps"], d["mu_eps_pow_eps"]) for d in report.derived]
    last = [abs(v - 1.0) for _, v in seq[-3:]]
    decreasing = all(b < a for a, b in zip(last, last[1:]))
    return seq, decreasing


def eps_bound_check(report: ContinuationReport):
    """eps * mu_eps^{2 + (4s - (n-2s)eps) eps / s}, with a boundedness flag."""
    if not report.records:
        raise OutOfRange("eps_bound_check needs a nonempty report")
    n, s = report.params.n, report.params.s
    seq = []
    for d in report.derived:
        eps, mu = d["eps"], d["mu_eps"]
        expo = 2.0 + (4.0 * s - (n - 2.0 * s) * eps) * eps / s
        seq.append((eps, eps * mu ** expo))
    vals = [v for _, v in seq]
    bounded = (max(vals) / max(min(vals), 1e-300)) < 1e2
    return seq, bounded


def rate_law_subcritical(report: ContinuationReport, robin_at_x0):
    """lhs(eps) sequence of the blow-up rate law and its constants-built rhs."""
    if robin_at_x0 is None:
        raise MissingRobin("rate_law_subcritical needs the Robin value at x0")
    p = report.params
    n, s = p.n, p.s
    lhs = [(d["eps"], d["rate_lhs"]) for d in report.derived]
    gam = constants.gamma_ns(n, s)
    b = constants.small_b_ns(n, s)
    alpha = constants.alpha_nmus(n, n - 2.0 * s, s)
    beta = constants.beta_tilde_nmus(n, n - 2.0 * s, s)
    big_b = constants.b_big_ns(n, s)
    big_m = constants.m_big_ns(n, s)
    kap = constants.kappa_s(s)
    rhs = ((n - 2.0 * s) ** 2 * gam * b ** 2
           / (2.0 * kap * alpha ** 2 * beta * big_b)) * big_m * abs(robin_at_x0)
    return lhs, rhs


def rate_law_bn(report: ContinuationReport, robin_at_x0):
    """Brezis-Nirenberg rate law: lhs sequence and rhs constant."""
    if robin_at_x0 is None:
        raise MissingRobin("rate_law_bn needs the Robin value at x0")
    p = report.params
    if p.regime is not Regime.BREZIS_NIRENBERG:
        raise OutOfRange("rate_law_bn applies to the Brezis-Nirenberg regime")
    n, s = p.n, p.s
    lhs = [(d["eps"], d["rate_lhs"]) for d in report.derived]
    gam = constants.gamma_ns(n, s)
    d_c = constants.d_ns(n, p.mu, s)
    big_m = constants.m_big_ns(n, s)
    big_f = constants.f_big_ns(n, s)
    kap = constants.kappa_s(s)
    rhs = ((n - 2.0 * s) ** 2 * gam * d_c ** 2 * big_m * abs(robin_at_x0)
           / (2.0 * s * kap * big_f))
    return lhs, rhs


def green_limit_check(record: SolutionRecord, basis, s, x0, sample_points):
    """Pointwise table sup_norm * u(x) against b_ns G(x, x0)."""
    dom = record.grid.domain
    h = max(dom.spacings())
    rows = []
    b = constants.small_b_ns(record.params.n, record.params.s)
    axes = dom.axes()
    for x in sample_points:
        pt = (float(x),) if np.isscalar(x) else tuple(float(v) for v in x)
        dist = math.sqrt(sum((a - b0) ** 2 for a, b0 in zip(pt, x0)))
        if dist < 4.0 * h:
            raise SampleTooClose(
                f"sample {pt} is {dist:.4g} from x0; need >= 4 grid cells ({4*h:.4g})")
        if dom.dim == 1:
            u_x = float(np.interp(pt[0], axes[0], record.grid.values))
        else:
            from scipy.interpolate import RegularGridInterpolator
            itp = RegularGridInterpolator((axes[0], axes[1]), record.grid.values)
            u_x = float(itp(pt))
        g = spectral.green(basis, s, pt, tuple(x0))
        lhs = record.sup_norm * u_x
        rhs = b * g
        rows.append((pt, lhs, rhs, lhs / rhs if rhs != 0 else math.inf))
    median = float(np.median([r[3] for r in rows]))
    return rows, median


# --------------------------------------------------------------------------
# integral identities
# --------------------------------------------------------------------------

def symmetrization_check(f: GridField, mu, weights):
    """Both sides of the dilation-moment symmetrization identity.

    lhsA = INT INT x.(x-t) |x-t|^{-(mu+2)} f(t) f(x) dt dx
    lhsB = (1/2) INT INT |x-t|^{-mu} f(t) f(x) dt dx
    computed by independent quadratures; residual |lhsA/lhsB - 1|.
    """
    if np.any(f.values < 0.0):
        raise OutOfRange("symmetrization_check expects f >= 0")
    dom = f.domain
    if weights.domain != dom:
        raise OutOfRange("weights grid does not match the field")
    w = dom.node_weights()
    conv = riesz.convolve(weights, f)
    lhs_b = 0.5 * float(np.sum(w * f.values * conv.values))
    if dom.dim == 1:
        x = dom.axes()[0]
        a_m = riesz.moment_weights_1d(dom, mu)
        vals = f.values
        t1 = np.array([a_m[i] @ (vals - vals[i]) for i in range(len(x))])
        term1 = float(np.sum(w * x * vals * t1))
        g = x * vals * vals
        term2 = float(weights.matrix[-1] @ g - weights.matrix[0] @ g) / mu
        lhs_a = term1 + term2
    else:
        lhs_a = _moment_double_2d(f, mu)
    if lhs_b == 0.0:
        return 0.0, 0.0, 0.0
    residual = abs(lhs_a / lhs_b - 1.0)
    if not math.isfinite(residual):
        raise QuadratureFailure(f"moment quadrature returned {lhs_a!r}")
    return lhs_a, lhs_b, residual


def _moment_double_2d(f: GridField, mu):
    """Midpoint-table evaluation of the 2-D moment double integral.

    The diagonal cell is dropped (PV symmetry); documented O(h) accuracy.
    """
    from scipy.signal import fftconvolve
    dom = f.domain
    n = dom.n_grid
    hx, hy = dom.spacings()
    offs = np.arange(-(n - 1), n)
    dx = offs[:, None] * hx
    dy = offs[None, :] * hy
    r = np.hypot(dx, dy)
    with np.errstate(divide="ignore", invalid="ignore"):
        kx = np.where(r > 0, dx * r ** (-(mu + 2.0)), 0.0) * hx * hy
        ky = np.where(r > 0, dy * r ** (-(mu + 2.0)), 0.0) * hx * hy
    w = dom.node_weights()
    xs, ys = dom.axes()
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    cx = fftconvolve(f.values, kx, mode="same")
    cy = fftconvolve(f.values, ky, mode="same")
    return float(np.sum(w * f.values * (gx * cx + gy * cy)))


def pohozaev_balance(record: SolutionRecord, params: Params, basis, weights,
                     r, q=None):
    """Interior Pohozaev term against its computable majorants.

    interior = (n/p - (n-2s)/2) INT_{M(r/2) x Omega} kernel u^p u^p;
    the remainder tuple holds the strip q-norm term, the squared interior
    L1 term, the strip energy term, and the dilation-moment term.  The
    extension-surface integrals are deliberately replaced by these
    computable majorants; the returned gap is interior / max(sum, floor).
    """
    dom = record.grid.domain
    n, s = params.n, params.s
    p = exponents(params).p_sub if params.regime is Regime.SUBCRITICAL_HARTREE \
        else exponents(params).two_star
    if q is None:
        q = math.floor(n / s) + 1
    interior_mask = dom.interior_mask(r / 2.0)
    if not np.any(interior_mask):
        raise EmptyInterior(f"M(Omega, {r/2}) contains no grid nodes")
    strip_mask = ~dom.interior_mask(2.0 * r)
    w = dom.node_weights()
    u = np.maximum(record.grid.values, 0.0)
    up = u ** p
    conv = riesz.convolve(weights, GridField(dom, up)).values
    coeff = n / p - (n - 2.0 * s) / 2.0
    interior = coeff * float(np.sum((w * conv * up)[interior_mask]))
    g1 = float(np.sum((w * np.abs(conv * u ** (p - 1.0)) ** q)[strip_mask])) ** (2.0 / q)
    g2 = float(np.sum((w * np.abs(conv * u ** (p - 1.0)))[interior_mask])) ** 2
    g3 = float(np.sum((w * np.abs(conv * up))[strip_mask]))
    if dom.dim == 1:
        # outer x over M(r/2) only, where the PV row value is finite
        x = dom.axes()[0]
        a_mat = riesz.moment_weights_1d(dom, weights.mu)
        a0, b0 = dom.bounds
        g4 = 0.0
        for i in np.nonzero(interior_mask)[0]:
            inner = a_mat[i] @ (up - up[i])
            inner += up[i] * ((b0 - x[i]) ** (-weights.mu)
                              - (x[i] - a0) ** (-weights.mu)) / weights.mu
            g4 += w[i] * x[i] * up[i] * inner
    else:
        g4 = _moment_double_2d(GridField(dom, up), weights.mu)
    remainder = (g1, g2, g3, abs(g4))
    floor = 1e-300
    gap = interior / max(sum(remainder), floor)
    return interior, remainder, gap


def pohozaev_free_space_gap(params: Params):
    """Test hook: the exact-bubble Pohozaev balance in free space.

    At the critical exponent the interior coefficient (n-2s)mu/(2(2n-mu))
    times the double Riesz integral must equal (mu/2p) times it, the moment
    term collapsing through the symmetrization identity.  The two sides are
    computed by independent quadrature routes; returns |A/B - 1|.
    """
    exp = exponents(params)
    p = exp.two_star
    n, s, mu = params.n, params.s, params.mu
    bub = bubbles.Bubble(bubbles.BubbleFamily.HARTREE_W, (0.0,) * n, 1.0, params)
    prof = bubbles.radial_profile(bub)
    # route 1: closed-constant chain for the double integral
    from scipy.integrate import quad
    amp = bub.amplitude

    def g(rr):
        return rr ** (n - 1) * prof(rr) ** exp.two_sharp

    head, _ = quad(g, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=400)
    tail, _ = quad(lambda t: g(t / (1.0 - t)) / (1.0 - t) ** 2, 0.5, 1.0,
                   epsabs=1e-14, epsrel=1e-12, limit=400)
    d_chain = (constants.beta_tilde_nmus(n, mu, s)
               * constants.sigma_n(n) * (head + tail))
    # route 2: nested radial quadrature of the same double integral

    def f(rr):
        return prof(rr) ** p

    def conv_at(rho):
        return riesz.riesz_radial(f, rho, params)

    big = 50.0
    part1, _ = quad(lambda rho: constants.sigma_n(n) * rho ** (n - 1)
                    * conv_at(rho) * f(rho), 0.0, big,
                    epsabs=1e-11, epsrel=1e-9, limit=200)
    part2, _ = quad(lambda t: constants.sigma_n(n) * (1.0 / t) ** (n - 1)
                    * conv_at(1.0 / t) * f(1.0 / t) / t ** 2, 1e-9, 1.0 / big,
                    epsabs=1e-11, epsrel=1e-9, limit=200)
    d_quad = part1 + part2
    lhs = (n / p - (n - 2.0 * s) / 2.0) * d_chain
    rhs = (mu / (2.0 * p)) * d_quad
    return abs(lhs / rhs - 1.0)


def boundary_bounds(report: ContinuationReport, r):
    """Per-eps boundary-strip sup and interior L1 mass over M(Omega, r).

    The flag records the upper-bound content of the boundary theorems: both
    quantities stay within 2x of their values at the largest eps while the
    sup norm grows by at least 10x.
    """
    if r <= 0.0:
        raise DegenerateStrip(f"strip radius must be positive, got {r}")
    dom = report.domain
    b = dom.bounds
    inradius = (0.5 * (b[1] - b[0]) if dom.dim == 1
                else 0.5 * min(b[1] - b[0], b[3] - b[2]))
    if r >= inradius:
        raise DegenerateStrip(
            f"strip radius {r} reaches the inradius {inradius}; M(Omega, r) empty")
    rows = []
    for rec in report.records:
        strip_sup, interior_l1 = _strip_quantities_with_margin(rec, r)
        rows.append((rec.eps, strip_sup, interior_l1))
    if len(rows) <= 1:
        return rows, True
    s0 = rows[0][1] if rows[0][1] > 0 else 1e-300
    l0 = rows[0][2] if rows[0][2] > 0 else 1e-300
    within = all(v[1] <= 2.0 * s0 and v[2] <= 2.0 * l0 for v in rows)
    sup_growth = report.records[-1].sup_norm / report.records[0].sup_norm
    return rows, bool(within and sup_growth >= 10.0)


def _strip_quantities_with_margin(rec: SolutionRecord, margin):
    dom = rec.grid.domain
    interior = dom.interior_mask(margin)
    strip = ~interior
    vals = rec.grid.values
    w = dom.node_weights()
    strip_sup = float(np.max(vals[strip])) if np.any(strip) else 0.0
    interior_l1 = float(np.sum((w * vals)[interior]))
    return strip_sup, interior_l1
