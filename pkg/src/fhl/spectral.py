"""Dirichlet sine eigenbasis, the spectral fractional Laplacian, and the
Green/Robin functions of supported domains.

Interval Green values complete the truncated mode sum with an analytic
summation-by-parts tail (four terms), which is what keeps the singularity
subtraction in `robin` usable at small offsets; the magnitude of the
completion is the recorded truncation-tail estimate.  Rectangle sums carry
a Gaussian spectral mollifier at the eigenvalue cutoff instead: the raw
sorted-mode partial sums of the 2-D series do not converge at desk-scale
truncations, while the mollified sum is accurate down to offsets of a few
multiples of the cutoff length 1/sqrt(lambda_K).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import constants
from .errors import (DiagonalEvaluation, ExtrapolationDiverged,
                     NoCriticalPoint, OutOfRange, UnderResolved)
from .grids import DomainKind, DomainSpec, GridField

_MAX_SAMPLED = 1 << 25   # cap on K*N entries for the sampled mode table
_MOLL_C = 8.0            # Gaussian mollifier strength exp(-c (lam/lamK)^2)
_FLOOR_C = 22.0          # resolution floor of the mollified 2-D sum


@dataclass
class EigenBasis:
    """Dirichlet eigenpairs of -Laplace on the domain, sorted by eigenvalue."""

    domain: DomainSpec
    K: int
    lambdas: np.ndarray               # sorted ascending
    modes: np.ndarray                 # (K,) k indices or (K,2) (kx,ky) pairs
    _phi_grid: np.ndarray | None = field(default=None, repr=False)
    _sine_tables: tuple | None = field(default=None, repr=False)

    @property
    def dim(self):
        return self.domain.dim

    def phi_grid(self):
        """Sampled eigenfunctions on the grid; K x N (interval only)."""
        if self.dim != 1:
            raise OutOfRange("sampled mode matrix is materialized per axis in 2-D")
        if self._phi_grid is None:
            n = self.domain.n_grid
            if self.K * n > _MAX_SAMPLED:
                raise OutOfRange(
                    f"sampled mode table K*N = {self.K * n} exceeds the cap; "
                    "use series evaluation instead")
            a, b = self.domain.bounds
            length = b - a
            x = self.domain.axes()[0]
            k = self.modes.astype(float)
            self._phi_grid = math.sqrt(2.0 / length) * np.sin(
                np.outer(k, (x - a)) * math.pi / length)
        return self._phi_grid

    def sine_tables(self):
        """Per-axis 1-D sine tables (K_axis x N) for separable transforms."""
        if self._sine_tables is None:
            axes = self.domain.axes()
            tables = []
            for d in range(self.dim):
                a = self.domain.bounds[2 * d]
                length = self.domain.sides[d]
                kmax = int(self.modes[:, d].max()) if self.dim == 2 else int(self.modes.max())
                k = np.arange(1, kmax + 1, dtype=float)
                tables.append(math.sqrt(2.0 / length) * np.sin(
                    np.outer(k, (axes[d] - a)) * math.pi / length))
            self._sine_tables = tuple(tables)
        return self._sine_tables

    def phi_at(self, point):
        """phi_k(point) for all K modes at one interior point; O(K)."""
        if self.dim == 1:
            a, b = self.domain.bounds
            length = b - a
            k = self.modes.astype(float)
            return math.sqrt(2.0 / length) * np.sin(k * math.pi * (point[0] - a) / length)
        ax, bx, ay, by = self.domain.bounds
        lx, ly = bx - ax, by - ay
        kx = self.modes[:, 0].astype(float)
        ky = self.modes[:, 1].astype(float)
        return (math.sqrt(2.0 / lx) * np.sin(kx * math.pi * (point[0] - ax) / lx)
                * math.sqrt(2.0 / ly) * np.sin(ky * math.pi * (point[1] - ay) / ly))


@dataclass
class SpectralField:
    basis: EigenBasis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.basis.K,):
            raise OutOfRange(f"expected {self.basis.K} coefficients, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise OutOfRange("coefficients must be finite")
        self.coeffs = c

    def l2_norm(self):
        return float(np.sqrt(np.sum(self.coeffs ** 2)))


def build_basis(domain: DomainSpec, K) -> EigenBasis:
    """Sine modes sorted by eigenvalue with stable index tie-breaking.

    K counts modes in total; the resolvability precondition is K <= N/2
    per axis (total K <= (N/2)^2 on a rectangle).
    """
    K = int(K)
    n = domain.n_grid
    if domain.dim == 1:
        if K > n // 2:
            raise UnderResolved(f"K = {K} exceeds N/2 = {n // 2} resolvable modes")
        k = np.arange(1, K + 1)
        length = domain.sides[0]
        lam = (k * math.pi / length) ** 2
        return EigenBasis(domain=domain, K=K, lambdas=lam.astype(float), modes=k)
    per_axis = n // 2
    if K > per_axis * per_axis:
        raise UnderResolved(
            f"K = {K} exceeds (N/2)^2 = {per_axis * per_axis} resolvable tensor modes")
    lx, ly = domain.sides
    kx, ky = np.meshgrid(np.arange(1, per_axis + 1), np.arange(1, per_axis + 1),
                         indexing="ij")
    lam = (kx * math.pi / lx) ** 2 + (ky * math.pi / ly) ** 2
    flat = lam.ravel()
    order = np.argsort(flat, kind="stable")[:K]
    modes = np.stack([kx.ravel()[order], ky.ravel()[order]], axis=1)
    return EigenBasis(domain=domain, K=K, lambdas=flat[order].astype(float),
                      modes=modes)


# --------------------------------------------------------------------------
# transforms
# --------------------------------------------------------------------------

def synthesis(f: SpectralField) -> GridField:
    basis = f.basis
    if basis.dim == 1:
        return GridField(basis.domain, basis.phi_grid().T @ f.coeffs)
    sx, sy = basis.sine_tables()
    kx_max, ky_max = sx.shape[0], sy.shape[0]
    amat = np.zeros((kx_max, ky_max))
    amat[basis.modes[:, 0] - 1, basis.modes[:, 1] - 1] = f.coeffs
    return GridField(basis.domain, sx.T @ amat @ sy)


def analysis(basis: EigenBasis, u: GridField) -> SpectralField:
    if u.domain != basis.domain:
        raise OutOfRange("field grid does not match the basis domain")
    if basis.dim == 1:
        w = basis.domain.trap_weights()[0]
        return SpectralField(basis, basis.phi_grid() @ (w * u.values))
    wx, wy = basis.domain.trap_weights()
    sx, sy = basis.sine_tables()
    amat = sx @ (wx[:, None] * u.values * wy[None, :]) @ sy.T
    return SpectralField(basis, amat[basis.modes[:, 0] - 1, basis.modes[:, 1] - 1])


def apply_As(f: SpectralField, s) -> SpectralField:
    """Coefficients a_k lambda_k^s."""
    return SpectralField(f.basis, f.coeffs * f.basis.lambdas ** s)


def solve_As(rhs: SpectralField, s) -> SpectralField:
    """Coefficients b_k / lambda_k^s; exact inverse of apply_As."""
    return SpectralField(rhs.basis, rhs.coeffs / rhs.basis.lambdas ** s)


def gram_defect(basis: EigenBasis):
    """Max |Gram - I| entry of the sampled modes under the trapezoid product."""
    if basis.dim == 1:
        phi = basis.phi_grid()
        w = basis.domain.trap_weights()[0]
        g = phi @ (w[:, None] * phi.T)
    else:
        sx, sy = basis.sine_tables()
        wx, wy = basis.domain.trap_weights()
        gx = sx @ (wx[:, None] * sx.T)
        gy = sy @ (wy[:, None] * sy.T)
        kx = basis.modes[:, 0] - 1
        ky = basis.modes[:, 1] - 1
        g = gx[np.ix_(kx, kx)] * gy[np.ix_(ky, ky)]
    return float(np.max(np.abs(g - np.eye(basis.K))))


# --------------------------------------------------------------------------
# Green function
# --------------------------------------------------------------------------

def _cos_tail(theta, K, s, length, terms=4):
    """Analytic completion of sum_{k>K} (k pi/L)^{-2s} cos(k theta).

    Summation by parts around the geometric series; accurate once
    K|theta| >> 1, with the remainder shrinking by ~1/(K|theta|) per term.
    """
    z = complex(math.cos(theta), math.sin(theta))
    if abs(1.0 - z) < 1e-9:
        raise DiagonalEvaluation("tail completion undefined on the diagonal direction")
    ks = np.arange(K + 1, K + 2 + terms, dtype=float)
    avals = (ks * math.pi / length) ** (-2.0 * s)
    diffs = [avals]
    for _ in range(terms):
        diffs.append(np.diff(diffs[-1]))
    acc = 0.0j
    for m in range(terms):
        acc += diffs[m][0] * z ** m / (1.0 - z) ** (m + 1)
    return (z ** (K + 1) * acc).real


def _green_interval(basis: EigenBasis, s, x, y):
    a, b = basis.domain.bounds
    length = b - a
    k = basis.modes.astype(float)
    amp = (k * math.pi / length) ** (-2.0 * s)
    tm = math.pi * (x - y) / length
    tp = math.pi * ((x - a) + (y - a)) / length
    val = float(np.sum(amp * (np.cos(k * tm) - np.cos(k * tp)))) / length
    tail_m = _cos_tail(tm, basis.K, s, length)
    tail_p = _cos_tail(tp, basis.K, s, length)
    correction = (tail_m - tail_p) / length
    return val + correction, abs(correction)


def _green_rectangle(basis: EigenBasis, s, p, q):
    lam = basis.lambdas
    lam_k = lam[-1]
    prod = basis.phi_at(p) * basis.phi_at(q) / lam ** s
    w8 = np.exp(-_MOLL_C * (lam / lam_k) ** 2)
    w16 = w8 * w8
    v8 = float(np.sum(w8 * prod))
    v16 = float(np.sum(w16 * prod))
    return v8, abs(v8 - v16)


def _as_point(x, dim):
    if np.isscalar(x):
        return (float(x),) if dim == 1 else None
    return tuple(float(v) for v in x)


def green_detail(basis: EigenBasis, s, x, y):
    """(value, truncation-tail estimate) of the Green function at (x, y)."""
    dim = basis.dim
    p = _as_point(x, dim)
    q = _as_point(y, dim)
    if p is None or q is None or len(p) != dim or len(q) != dim:
        raise OutOfRange("green expects points matching the domain dimension")
    if p == q:
        raise DiagonalEvaluation(
            "green is singular on the diagonal; use robin for the regular part")
    _require_interior(basis.domain, p)
    _require_interior(basis.domain, q)
    if dim == 1:
        return _green_interval(basis, s, p[0], q[0])
    return _green_rectangle(basis, s, p, q)


def green(basis: EigenBasis, s, x, y):
    return green_detail(basis, s, x, y)[0]


def _require_interior(domain, p, strict=True):
    b = domain.bounds
    if domain.dim == 1:
        inside = b[0] < p[0] < b[1]
    else:
        inside = b[0] < p[0] < b[1] and b[2] < p[1] < b[3]
    if not inside:
        raise OutOfRange(f"point {p} is not interior to the domain {b}")


# --------------------------------------------------------------------------
# Robin function
# --------------------------------------------------------------------------

def resolution_floor(basis: EigenBasis):
    """Smallest pair distance the truncated/mollified series can resolve."""
    if basis.dim == 1:
        # the SBP completion needs K * pi * d / L >> 1
        length = basis.domain.sides[0]
        return 10.0 * length / (math.pi * basis.K)
    return _FLOOR_C / math.sqrt(basis.lambdas[-1])


def robin_detail(basis: EigenBasis, s, x, delta0=None):
    """(value, extrapolation spread, offsets) of the Robin function at x.

    H(x, y) = gamma_ns |x-y|^{-(n-2s)} - G(x, y) is evaluated at symmetric
    offsets delta, delta/2, delta/4 along each axis (odd terms cancel in
    the average) and Richardson-extrapolated on the even powers.
    """
    dim = basis.dim
    p = _as_point(x, dim)
    _require_interior(basis.domain, p)
    n = dim
    if not 0.0 < n - 2.0 * s < n:
        raise OutOfRange(f"robin requires 0 < n - 2s < n, got n = {n}, s = {s}")
    gam = constants.gamma_ns(n, s)
    floor = resolution_floor(basis)
    b = basis.domain.bounds
    if dim == 1:
        dist = min(p[0] - b[0], b[1] - p[0])
    else:
        dist = min(p[0] - b[0], b[1] - p[0], p[1] - b[2], b[3] - p[1])
    d0 = delta0 if delta0 is not None else max(
        4.2 * floor, 0.04 * min(basis.domain.sides))
    d0 = min(d0, 0.9 * dist)
    if d0 < floor:
        raise OutOfRange(
            f"offset {d0:.3e} below the series resolution floor {floor:.3e}; "
            "the point is too close to the boundary for this mode count")
    if d0 / 4.0 < floor:
        levels = 2 if d0 / 2.0 >= floor else 1
    else:
        levels = 3

    def averaged(d):
        vals = []
        for axis in range(dim):
            for sign in (+1.0, -1.0):
                q = list(p)
                q[axis] += sign * d
                vals.append(gam * d ** (-(n - 2.0 * s))
                            - green(basis, s, p, tuple(q)))
        return float(np.mean(vals))

    deltas = [d0 / 2 ** j for j in range(levels)]
    e_vals = [averaged(d) for d in deltas]
    if levels == 1:
        return e_vals[0], float("nan"), tuple(deltas)
    r1 = (4.0 * e_vals[1] - e_vals[0]) / 3.0
    if levels == 2:
        return r1, abs(e_vals[1] - e_vals[0]), tuple(deltas)
    r2 = (4.0 * e_vals[2] - e_vals[1]) / 3.0
    val = (16.0 * r2 - r1) / 15.0
    spread = abs(r2 - r1)
    if spread > max(0.05 * abs(val), 1e-9):
        raise ExtrapolationDiverged(
            f"Richardson levels differ by {spread:.3e} for robin value {val:.6e}")
    return val, spread, tuple(deltas)


def robin(basis: EigenBasis, s, x, delta0=None):
    return robin_detail(basis, s, x, delta0)[0]


def critical_points_from_values(grids_axes, phi_values):
    """Grid points where the centered-difference gradient changes sign in
    every axis; ties broken by smallest gradient magnitude."""
    if len(grids_axes) == 1:
        x = np.asarray(grids_axes[0])
        phi = np.asarray(phi_values)
        g = np.gradient(phi, x)
        flags = np.zeros(len(x), dtype=bool)
        sign_change = g[:-1] * g[1:] <= 0.0
        flags[:-1] |= sign_change
        flags[1:] |= sign_change
        idx = np.nonzero(flags)[0]
        if len(idx) == 0:
            raise NoCriticalPoint("gradient has no sign change on the grid")
        order = np.argsort(np.abs(g[idx]), kind="stable")
        return [(float(x[i]),) for i in idx[order]]
    xa, ya = (np.asarray(g) for g in grids_axes)
    phi = np.asarray(phi_values)
    gx = np.gradient(phi, xa, axis=0)
    gy = np.gradient(phi, ya, axis=1)
    fx = np.zeros(phi.shape, dtype=bool)
    sc = gx[:-1, :] * gx[1:, :] <= 0.0
    fx[:-1, :] |= sc
    fx[1:, :] |= sc
    fy = np.zeros(phi.shape, dtype=bool)
    sc = gy[:, :-1] * gy[:, 1:] <= 0.0
    fy[:, :-1] |= sc
    fy[:, 1:] |= sc
    flags = fx & fy
    ii, jj = np.nonzero(flags)
    if len(ii) == 0:
        raise NoCriticalPoint("gradient has no sign change on the grid")
    mag = np.abs(gx[ii, jj]) + np.abs(gy[ii, jj])
    order = np.argsort(mag, kind="stable")
    return [(float(xa[i]), float(ya[j])) for i, j in zip(ii[order], jj[order])]


def robin_critical_points(basis: EigenBasis, s, grid_axes, delta0=None):
    """Critical points of the Robin function phi(x) = H(x, x) on a grid.

    grid_axes: per-axis arrays of interior evaluation points.
    """
    if basis.dim == 1:
        xs = np.asarray(grid_axes[0])
        phi = np.array([robin(basis, s, (x,), delta0) for x in xs])
        return critical_points_from_values((xs,), phi)
    xs, ys = (np.asarray(g) for g in grid_axes)
    phi = np.array([[robin(basis, s, (x, y), delta0) for y in ys] for x in xs])
    return critical_points_from_values((xs, ys), phi)
