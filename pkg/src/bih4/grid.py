"""Weighted quadrature grids representing L^2(R) on a truncated interval.

A grid is a set of nodes/weights on [-L, L], symmetric under x -> -x so that
parity of functions is representable exactly.  Composite Gauss panels (order 8)
are the workhorse; a trapezoid rule and a geometrically graded Gauss layout
(for slowly decaying potentials) are also provided.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError

GAUSS_PANEL_ORDER = 8

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_PANEL_ORDER)


@dataclass(frozen=True)
class WeightedGrid:
    """Quadrature nodes and weights on [-half_width, half_width].

    Invariants (validated at construction): nodes strictly increasing and
    inside [-L, L], weights positive summing to 2L, and the node/weight sets
    symmetric under reflection.
    """

    nodes: np.ndarray
    weights: np.ndarray
    half_width: float
    rule: str
    panel_edges: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        nodes.setflags(write=False)
        weights.setflags(write=False)
        if self.panel_edges is not None:
            edges = np.asarray(self.panel_edges, dtype=float)
            edges.setflags(write=False)
            object.__setattr__(self, "panel_edges", edges)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(np.abs(nodes) > self.half_width * (1 + 1e-12)):
            raise ValueError("nodes must lie in [-L, L]")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        if not np.allclose(nodes, -nodes[::-1], rtol=0, atol=1e-12 * self.half_width):
            raise ValueError("grid must be symmetric under x -> -x")
        if not np.allclose(weights, weights[::-1], rtol=1e-12, atol=0):
            raise ValueError("weights must be symmetric under x -> -x")

    @property
    def count(self) -> int:
        return self.nodes.size

    def __eq__(self, other):
        return self is other or (
            isinstance(other, WeightedGrid)
            and self.rule == other.rule
            and self.nodes.shape == other.nodes.shape
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.rule, self.count, float(self.half_width)))


@dataclass(frozen=True)
class GridFunction:
    """Complex samples of a function at the grid nodes."""

    grid: WeightedGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.count,):
            raise ValueError("value vector length must match grid.count")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __add__(self, other):
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return GridFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__


def _check_same_grid(f, g):
    if f.grid is not g.grid and f.grid != g.grid:
        raise GridMismatchError("grid mismatch between grid functions")


def _panels_from_edges(edges):
    """Gauss nodes/weights for the panels delimited by `edges`."""
    edges = np.asarray(edges, dtype=float)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def build_grid(half_width: float, count: int, rule: str = "composite_gauss") -> WeightedGrid:
    """Build a symmetric quadrature grid on [-half_width, half_width].

    rule="composite_gauss" uses uniform panels of an order-8 Gauss rule, so
    `count` must be a multiple of 8.  rule="trapezoid" uses `count` uniformly
    spaced nodes including the endpoints.
    """
    if half_width <= 0:
        raise ValueError("half_width must be positive")
    if count < 2 or (rule == "composite_gauss" and count < 8):
        raise ValueError("count too small for the requested rule")
    if rule == "composite_gauss":
        if count % GAUSS_PANEL_ORDER:
            raise ValueError(
                f"composite_gauss requires count divisible by {GAUSS_PANEL_ORDER}"
            )
        n_panels = count // GAUSS_PANEL_ORDER
        edges = np.linspace(-half_width, half_width, n_panels + 1)
        nodes, weights = _panels_from_edges(edges)
        return WeightedGrid(nodes, weights, half_width, rule, panel_edges=edges)
    if rule == "trapezoid":
        nodes = np.linspace(-half_width, half_width, count)
        h = nodes[1] - nodes[0]
        weights = np.full(count, h)
        weights[0] = weights[-1] = h / 2
        return WeightedGrid(nodes, weights, half_width, rule, panel_edges=nodes.copy())
    raise ValueError(f"unknown quadrature rule {rule!r}")


def _subdivided_edges(skeleton, target_h):
    """Refine a positive edge skeleton so no panel exceeds target_h."""
    edges = [skeleton[0]]
    for a, b in zip(skeleton[:-1], skeleton[1:]):
        m = max(1, int(round((b - a) / target_h)))
        edges.extend(np.linspace(a, b, m + 1)[1:])
    return np.asarray(edges)


def panelled_gauss_grid(half_width: float, count_target: int, breakpoints=(),
                        inner_width: float | None = None) -> WeightedGrid:
    """Symmetric Gauss grid whose panel edges include the given breakpoints.

    Breakpoints are positive abscissae where integrands lose smoothness
    (sign changes of V put square-root kinks into v = |V|^(1/2)); aligning
    panel edges there keeps the composite rule at full order.  With
    inner_width set, panels grow geometrically beyond it (for slowly
    decaying potentials needing a large truncation radius).  The node count
    is the closest multiple of 16 compatible with the skeleton.
    """
    if half_width <= 0:
        raise ValueError("half_width must be positive")
    bps = sorted({float(b) for b in breakpoints if 0 < b < half_width})
    per_side = max(2, count_target // (2 * GAUSS_PANEL_ORDER))
    if inner_width is None:
        skeleton = np.asarray([0.0] + bps + [half_width])
        pos_edges = _subdivided_edges(skeleton, half_width / per_side)
    else:
        if any(b >= inner_width for b in bps):
            inner_width = max(bps) * 1.25
        n_outer = max(6, per_side // 2)
        n_inner = max(2, per_side - n_outer)
        skeleton = np.asarray([0.0] + bps + [inner_width])
        inner_edges = _subdivided_edges(skeleton, inner_width / n_inner)
        outer_edges = np.geomspace(inner_width, half_width, n_outer + 1)[1:]
        pos_edges = np.concatenate([inner_edges, outer_edges])
    edges = np.concatenate([-pos_edges[::-1], pos_edges[1:]])
    nodes, weights = _panels_from_edges(edges)
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    rule = "graded_gauss" if inner_width is not None else "composite_gauss"
    return WeightedGrid(nodes, weights, half_width, rule, panel_edges=edges)


def graded_gauss_grid(half_width: float, count: int, inner_width: float = 2.0,
                      breakpoints=()) -> WeightedGrid:
    """Composite Gauss grid with geometrically growing panels beyond inner_width.

    Meant for potentials with slow polynomial decay, where moment integrals
    need a large truncation radius but most structure sits near the origin.
    """
    if half_width <= inner_width:
        return build_grid(half_width, count, "composite_gauss")
    return panelled_gauss_grid(half_width, count, breakpoints, inner_width)


def from_callable(grid: WeightedGrid, fn) -> GridFunction:
    return GridFunction(grid, np.asarray(fn(grid.nodes), dtype=complex))


def inner_product(f: GridFunction, g: GridFunction) -> complex:
    """Weighted inner product sum_i w_i f(x_i) conj(g(x_i))."""
    _check_same_grid(f, g)
    return complex(np.sum(f.grid.weights * f.values * np.conj(g.values)))


def norm(f: GridFunction) -> float:
    return float(np.sqrt(abs(inner_product(f, f))))


def integrate(grid: WeightedGrid, values) -> complex:
    return complex(np.sum(grid.weights * np.asarray(values)))


def grid_hash(grid: WeightedGrid) -> str:
    """Short content hash used for report provenance."""
    h = hashlib.sha256()
    h.update(grid.nodes.tobytes())
    h.update(grid.weights.tobytes())
    h.update(grid.rule.encode())
    return h.hexdigest()[:16]
