"""Closed-form extremal bubbles, their algebraic identities and quotients.

The two families share the profile (lambda/(1+lambda^2|x-xi|^2))^{(n-2s)/2}
and differ only in the amplitude constant: c_ns for the Sobolev extremal,
alpha_nmus for the Hartree extremal.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import constants, riesz
from .errors import (DegenerateScale, EmptyWindow, EvaluationAtOrigin,
                     OutOfRange)
from .grids import DomainKind, DomainSpec, GridField, interval, rectangle
from .model import Params, exponents


class BubbleFamily(enum.Enum):
    SOBOLEV_U = "U"
    HARTREE_W = "W"


@dataclass(frozen=True)
class Bubble:
    family: BubbleFamily
    xi: tuple
    lam: float
    params: Params

    def __post_init__(self):
        if not self.lam > 0.0:
            raise OutOfRange(f"bubble scale lambda must be positive, got {self.lam}")
        if len(self.xi) != self.params.n:
            raise OutOfRange(
                f"center has {len(self.xi)} coordinates for dimension {self.params.n}")

    @property
    def amplitude(self):
        p = self.params
        if self.family is BubbleFamily.SOBOLEV_U:
            return constants.c_ns(p.n, p.s)
        return constants.alpha_nmus(p.n, p.mu, p.s)


def eval_bubble(bubble: Bubble, x):
    """amplitude * (lambda/(1+lambda^2 |x-xi|^2))^{(n-2s)/2}; vectorized.

    x is a point (length-n sequence) or an array whose last axis has length n.
    """
    p = bubble.params
    x = np.asarray(x, dtype=float)
    if x.shape == () and p.n == 1:
        x = x.reshape(1)
    xi = np.asarray(bubble.xi)
    r2 = np.sum((x - xi) ** 2, axis=-1)
    lam = bubble.lam
    return bubble.amplitude * (lam / (1.0 + lam * lam * r2)) ** ((p.n - 2.0 * p.s) / 2.0)


def radial_profile(bubble: Bubble):
    """r -> bubble value at distance r from the center."""
    p = bubble.params
    amp = bubble.amplitude
    lam = bubble.lam
    ex = (p.n - 2.0 * p.s) / 2.0

    def f(r):
        return amp * (lam / (1.0 + lam * lam * r * r)) ** ex

    return f


def kelvin(f, params: Params):
    """Kelvin transform x |-> |x|^{-(n-2s)} f(x/|x|^2) of a point function."""
    n, s = params.n, params.s

    def g(x):
        x = np.asarray(x, dtype=float)
        if x.shape == () and n == 1:
            x = x.reshape(1)
        r2 = np.sum(x ** 2, axis=-1)
        if np.any(r2 == 0.0):
            raise EvaluationAtOrigin("Kelvin transform is undefined at the origin")
        return r2 ** (-(n - 2.0 * s) / 2.0) * f(x / r2[..., None])

    return g


def convolution_identity_lhs_rhs(bubble: Bubble, x):
    """Quadrature LHS (|.|^{-mu} * W^{2*})(x) and closed-form RHS at one point."""
    if bubble.family is not BubbleFamily.HARTREE_W:
        raise OutOfRange("the convolution identity is stated for the W family")
    p = bubble.params
    exp = exponents(p)
    rho = float(np.sqrt(np.sum((np.asarray(x, dtype=float) - np.asarray(bubble.xi)) ** 2)))
    prof = radial_profile(bubble)

    def f(r):
        return prof(r) ** exp.two_star

    lhs = riesz.riesz_radial(f, rho, p)
    beta = constants.beta_tilde_nmus(p.n, p.mu, p.s)
    rhs = beta * prof(rho) ** (exp.two_sharp - exp.two_star)
    return lhs, rhs


def convolution_identity_residual(bubble: Bubble, x):
    """|LHS/RHS - 1| of the Riesz convolution identity at the point x."""
    lhs, rhs = convolution_identity_lhs_rhs(bubble, x)
    return abs(lhs / rhs - 1.0)


def hls_quotient(bubble: Bubble):
    """The bubble's value of the HLS energy quotient.

    Uses the Euler-Lagrange identity to express the gradient norm as the
    double Riesz integral D = beta~ * INT W^{2#}, so the quotient is
    D^{1 - 1/2*}.  The integral is evaluated by radial quadrature of the
    actual (xi, lambda) profile, so translation/dilation invariance is a
    numerical statement, not a shortcut.
    """
    if bubble.family is not BubbleFamily.HARTREE_W:
        raise OutOfRange("hls_quotient is defined for the W family")
    p = bubble.params
    if p.eps != 0.0:
        raise OutOfRange("hls_quotient requires eps = 0")
    exp = exponents(p)
    prof = radial_profile(bubble)
    from .constants import sigma_n
    from scipy.integrate import quad

    def g(r):
        return r ** (p.n - 1) * prof(r) ** exp.two_sharp

    head, _ = quad(g, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=400)
    tail, _ = quad(lambda t: g(t / (1.0 - t)) / (1.0 - t) ** 2, 0.5, 1.0,
                   epsabs=1e-14, epsrel=1e-12, limit=400)
    integral = sigma_n(p.n) * (head + tail)
    d_val = constants.beta_tilde_nmus(p.n, p.mu, p.s) * integral
    return d_val ** (1.0 - 1.0 / exp.two_star)


def hls_tail_bound(bubble: Bubble, radius=None):
    """Crude bound on the truncated-tail mass of INT W^{2#} beyond a radius.

    W^{2#} ~ r^{-2n}, so the tail beyond R is below sigma_n amp^{2#}
    lam^{-n} R^{-n} / n; reported by the CLI next to the quotient.
    """
    p = bubble.params
    exp = exponents(p)
    r = radius if radius is not None else 1.0e4
    amp = bubble.amplitude
    from .constants import sigma_n
    return sigma_n(p.n) * amp ** exp.two_sharp * bubble.lam ** (-p.n) * r ** (-p.n) / p.n


def _centered_domain(params: Params, window, m):
    if params.n == 1:
        return interval(-window, window, m)
    if params.n == 2:
        return rectangle(-window, window, -window, window, m)
    raise OutOfRange("rescaling to a grid supports n in (1, 2)")


def rescale(u: GridField, sup_norm, argmax, params: Params,
            window=3.0, m_out=241) -> GridField:
    """Blow-up rescaling of a solution sample around its maximum.

    v(x) = u(scale * x + argmax) / mu_eps with mu_eps = sup_norm / alpha_ns
    and scale = mu_eps^{-(2# - 2 - eps)/(2s)}, sampled on a centered window
    grid by linear interpolation; v(0) = alpha_ns by construction.
    """
    if not sup_norm > 0.0:
        raise DegenerateScale(f"sup_norm must be positive, got {sup_norm}")
    exp = exponents(params)
    alpha = constants.alpha_nmus(params.n, params.n - 2.0 * params.s, params.s)
    mu_eps = sup_norm / alpha
    scale = mu_eps ** (-(exp.two_sharp - 2.0 - params.eps) / (2.0 * params.s))
    out_dom = _centered_domain(params, window, m_out)
    axes = u.domain.axes()
    if params.n == 1:
        xi = out_dom.axes()[0]
        xx = scale * xi + argmax[0]
        xx = np.clip(xx, axes[0][0], axes[0][-1])
        vals = np.interp(xx, axes[0], u.values) / mu_eps
    else:
        xo = out_dom.axes()[0]
        xx = np.clip(scale * xo + argmax[0], axes[0][0], axes[0][-1])
        yy = np.clip(scale * xo + argmax[1], axes[1][0], axes[1][-1])
        from scipy.interpolate import RegularGridInterpolator
        itp = RegularGridInterpolator((axes[0], axes[1]), u.values)
        gx, gy = np.meshgrid(xx, yy, indexing="ij")
        vals = itp(np.stack([gx, gy], axis=-1)) / mu_eps
    return GridField(out_dom, vals)


def profile_distance(v: GridField, params: Params, window) -> float:
    """sup over grid points |x| <= window of |v - W[0,1]|."""
    dom = v.domain
    axes = dom.axes()
    alpha = constants.alpha_nmus(params.n, params.n - 2.0 * params.s, params.s)
    e = (params.n - 2.0 * params.s) / 2.0
    if dom.dim == 1:
        x = axes[0]
        mask = np.abs(x) <= window
        if not np.any(mask):
            raise EmptyWindow(f"no grid points with |x| <= {window}")
        w_ref = alpha * (1.0 / (1.0 + x[mask] ** 2)) ** e
        return float(np.max(np.abs(v.values[mask] - w_ref)))
    gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
    r2 = gx ** 2 + gy ** 2
    mask = r2 <= window * window
    if not np.any(mask):
        raise EmptyWindow(f"no grid points with |x| <= {window}")
    w_ref = alpha * (1.0 / (1.0 + r2[mask])) ** e
    return float(np.max(np.abs(v.values[mask] - w_ref)))
