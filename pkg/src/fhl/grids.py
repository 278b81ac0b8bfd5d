"""Domain specifications and sampled fields on uniform grids.

Grids include both endpoints; node spacing is h = side/(N-1) per axis.
With interior sine modes vanishing at the endpoints, the trapezoid inner
product reproduces discrete sine orthogonality exactly, which is what makes
the spectral Gram matrix the identity to rounding.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, OutOfRange


class DomainKind(enum.Enum):
    INTERVAL = "interval"
    RECTANGLE = "rectangle"


@dataclass(frozen=True)
class DomainSpec:
    """A supported domain with its grid resolution.

    bounds: (a, b) for an interval, (ax, bx, ay, by) for a rectangle.
    n_grid: nodes per axis, endpoints included; at least 16.
    """

    kind: DomainKind
    bounds: tuple
    n_grid: int

    def __post_init__(self):
        if self.n_grid < 16:
            raise OutOfRange(f"grid resolution N >= 16 required, got {self.n_grid}")
        b = self.bounds
        if self.kind is DomainKind.INTERVAL:
            if len(b) != 2 or not b[1] > b[0]:
                raise OutOfRange(f"interval requires b > a, got {b}")
        elif self.kind is DomainKind.RECTANGLE:
            if len(b) != 4 or not (b[1] > b[0] and b[3] > b[2]):
                raise OutOfRange(f"rectangle requires bx > ax and by > ay, got {b}")
        else:  # pragma: no cover
            raise OutOfRange(f"unknown domain kind {self.kind!r}")

    @property
    def dim(self):
        return 1 if self.kind is DomainKind.INTERVAL else 2

    @property
    def sides(self):
        b = self.bounds
        if self.dim == 1:
            return (b[1] - b[0],)
        return (b[1] - b[0], b[3] - b[2])

    def axes(self):
        """Per-axis node arrays, endpoints included."""
        b = self.bounds
        if self.dim == 1:
            return (np.linspace(b[0], b[1], self.n_grid),)
        return (np.linspace(b[0], b[1], self.n_grid),
                np.linspace(b[2], b[3], self.n_grid))

    def spacings(self):
        return tuple(side / (self.n_grid - 1) for side in self.sides)

    def trap_weights(self):
        """Per-axis trapezoid weights (endpoint halves)."""
        out = []
        for h in self.spacings():
            w = np.full(self.n_grid, h)
            w[0] = w[-1] = h / 2.0
            out.append(w)
        return tuple(out)

    def node_weights(self):
        """Full tensor-product quadrature weights matching values' shape."""
        w = self.trap_weights()
        if self.dim == 1:
            return w[0]
        return w[0][:, None] * w[1][None, :]

    def interior_mask(self, margin):
        """Boolean mask of nodes at distance >= margin from the boundary."""
        axes = self.axes()
        b = self.bounds
        if self.dim == 1:
            x = axes[0]
            return (x - b[0] >= margin) & (b[1] - x >= margin)
        X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
        dist = np.minimum.reduce([X - b[0], b[1] - X, Y - b[2], b[3] - Y])
        return dist >= margin


@dataclass
class GridField:
    """Sampled real values on the nodes of a DomainSpec."""

    domain: DomainSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        shape = ((self.domain.n_grid,) if self.domain.dim == 1
                 else (self.domain.n_grid, self.domain.n_grid))
        if vals.shape != shape:
            raise GridMismatch(
                f"values shape {vals.shape} does not match grid {shape}")
        if not np.all(np.isfinite(vals)):
            raise OutOfRange("field values must be finite")
        self.values = vals

    def integral(self):
        return float(np.sum(self.domain.node_weights() * self.values))

    def inner(self, other: "GridField"):
        if other.domain != self.domain:
            raise GridMismatch("fields live on different grids")
        return float(np.sum(self.domain.node_weights() * self.values * other.values))

    def l2_norm(self):
        return float(np.sqrt(np.sum(self.domain.node_weights() * self.values ** 2)))

    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    def argmax_point(self):
        """Grid node where the field attains its maximum."""
        axes = self.domain.axes()
        if self.domain.dim == 1:
            return (float(axes[0][int(np.argmax(self.values))]),)
        i, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return (float(axes[0][i]), float(axes[1][j]))


def interval(a, b, n_grid) -> DomainSpec:
    return DomainSpec(DomainKind.INTERVAL, (float(a), float(b)), int(n_grid))


def rectangle(ax, bx, ay, by, n_grid) -> DomainSpec:
    return DomainSpec(DomainKind.RECTANGLE,
                      (float(ax), float(bx), float(ay), float(by)), int(n_grid))
