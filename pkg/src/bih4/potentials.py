"""Analytic potential families with known zero-energy threshold behavior.

Each family carries an exact evaluator (fourth derivatives done symbolically
by hand, never by finite differences) plus the polynomial decay rate beta.
The resonance/eigenvalue families are built from a generating function phi
with V = -phi''''/phi, so H phi = 0 holds by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import WeightedGrid, build_grid, graded_gauss_grid, panelled_gauss_grid


@dataclass(frozen=True)
class PotentialSpec:
    """A real potential V with metadata and an exact evaluator.

    breakpoints lists positive abscissae where V (and hence v = |V|^(1/2))
    loses smoothness; grids align panel edges there.
    """

    form: str
    parameters: dict = field(compare=False)
    decay_beta: float = math.inf
    evaluator: callable = field(default=None, compare=False, repr=False)
    phi: callable = field(default=None, compare=False, repr=False)
    phi4: callable = field(default=None, compare=False, repr=False)
    is_even: bool = True
    breakpoints: tuple = ()

    def __call__(self, x):
        return self.evaluator(x)


def gaussian(amplitude: float = 0.1, width: float = 1.0) -> PotentialSpec:
    """V(x) = amplitude * exp(-(x/width)^2); super-polynomial decay."""

    def ev(x):
        return amplitude * np.exp(-((np.asarray(x, dtype=float) / width) ** 2))

    return PotentialSpec("gaussian", {"amplitude": amplitude, "width": width},
                         math.inf, ev)


def bump(amplitude: float = 0.5, width: float = 2.0) -> PotentialSpec:
    """Compactly supported C-infinity bump amplitude * e^{-1/(1-(x/w)^2)}."""

    def ev(x):
        u = np.asarray(x, dtype=float) / width
        # clamping the denominator sends the exponent to -inf outside |u| < 1
        expo = -1.0 / np.maximum(1.0 - u**2, 1e-300)
        return amplitude * np.exp(expo)

    return PotentialSpec("bump", {"amplitude": amplitude, "width": width},
                         math.inf, ev)


def _quintic_coeffs(c: float, d: float):
    # p(u) = b0 + b2 u^2 + b4 u^4 + b5 u^5 matched to c*u + d at u=1 in value
    # and first three derivatives (C^3 glue keeps phi'''' free of deltas)
    return d + 0.3 * c, c, -0.5 * c, 0.2 * c


def make_remark16_resonance(c: float, d: float = 1.0, interior_bump: float = 0.0) -> PotentialSpec:
    """Compactly supported potential whose H has a zero resonance.

    Generated by phi equal to c|x| + d outside [-1, 1] and an even quintic
    inside, glued in C^3 so that V = -phi''''/phi is bounded with support in
    [-1, 1].  c > 0 gives phi ~ c|x| (first-kind threshold); c = 0 with a
    nonzero interior_bump gives phi -> d (second-kind).  interior_bump adds
    A (1 - x^2)^4, which vanishes to fourth order at the glue points.
    """
    if c < 0:
        raise ValueError("need c >= 0 so that c|x| + d stays positive")
    if c == 0 and interior_bump == 0:
        raise ValueError("c = 0 requires a nonzero interior_bump (else V = 0)")
    if d <= 0:
        raise ValueError("need d > 0")
    a_bump = float(interior_bump)
    if a_bump < 0:
        raise ValueError("interior_bump must be nonnegative")
    b0, b2, b4, b5 = _quintic_coeffs(c, d)

    def phi(x):
        u = np.abs(np.asarray(x, dtype=float))
        inner = b0 + b2 * u**2 + b4 * u**4 + b5 * u**5 + a_bump * (1 - u**2) ** 4
        return np.where(u <= 1.0, inner, c * u + d)

    def phi4(x):
        u = np.abs(np.asarray(x, dtype=float))
        inner = 24 * b4 + 120 * b5 * u + a_bump * (144 - 1440 * u**2 + 1680 * u**4)
        return np.where(u <= 1.0, inner, 0.0)

    probe = np.linspace(0, 1, 2001)
    if np.any(phi(probe) <= 0):
        raise ValueError("interior interpolant lost positivity")

    def ev(x):
        u = np.abs(np.asarray(x, dtype=float))
        vals = np.where(u <= 1.0, -phi4(x) / phi(x), 0.0)
        return vals

    # sign changes of V = zeros of phi'''' on (0, 1): square-root kinks of v
    poly = [1680 * a_bump, 0.0, -1440 * a_bump, 24 * c, 144 * a_bump - 12 * c]
    roots = np.roots(poly) if any(poly[:-1]) else np.array([])
    bps = sorted({1.0} | {
        float(r.real) for r in roots
        if abs(r.imag) < 1e-12 and 1e-9 < r.real < 1 - 1e-12
    })
    return PotentialSpec(
        "remark16_resonance",
        {"c": c, "d": d, "interior_bump": a_bump},
        math.inf,
        ev,
        phi=phi,
        phi4=phi4,
        breakpoints=tuple(bps),
    )


def resonance_slope_family(c: float, d: float = 1.0, interior_bump: float = 0.5) -> PotentialSpec:
    """One-parameter family interpolating first-kind (c > 0) to second-kind (c = 0)."""
    return make_remark16_resonance(c, d, interior_bump=interior_bump)


def make_remark16_eigenvalue(s: float) -> PotentialSpec:
    """Slowly decaying potential with zero an eigenvalue: phi = (1+x^2)^{-s}.

    Requires s > 1/4 (else phi is not square integrable); V decays like
    |x|^{-4}, so decay_beta = 4.
    """
    if s <= 0.25:
        raise ValueError("need s > 1/4 for phi in L^2")
    c2 = 12 * s * (s + 1)
    c3 = 48 * s * (s + 1) * (s + 2)
    c4 = 16 * s * (s + 1) * (s + 2) * (s + 3)

    def phi(x):
        return (1.0 + np.asarray(x, dtype=float) ** 2) ** (-s)

    def phi4(x):
        x = np.asarray(x, dtype=float)
        w = 1.0 + x**2
        return c2 * w ** (-s - 2) - c3 * x**2 * w ** (-s - 3) + c4 * x**4 * w ** (-s - 4)

    def ev(x):
        x = np.asarray(x, dtype=float)
        w = 1.0 + x**2
        return -c2 * w**-2 + c3 * x**2 * w**-3 - c4 * x**4 * w**-4

    # zeros of V: quadratic in X = x^2 from -c2 w^2 + c3 x^2 w - c4 x^4 = 0
    roots = np.roots([-c2 + c3 - c4, -2 * c2 + c3, -c2])
    bps = tuple(sorted(float(math.sqrt(r.real)) for r in roots
                       if abs(r.imag) < 1e-12 and r.real > 0))
    return PotentialSpec("remark16_eigenvalue", {"s": s}, 4.0, ev, phi=phi,
                         phi4=phi4, breakpoints=bps)


def power_law(amplitude: float, beta: float) -> PotentialSpec:
    """V(x) = amplitude (1+x^2)^{-beta/2}; exposes a decay-rate sweep."""
    if beta <= 0:
        raise ValueError("beta must be positive")

    def ev(x):
        return amplitude * (1.0 + np.asarray(x, dtype=float) ** 2) ** (-beta / 2)

    return PotentialSpec("power_law", {"amplitude": amplitude, "beta": beta}, beta, ev)


def scaled(base: PotentialSpec, c: float) -> PotentialSpec:
    def ev(x):
        return c * base.evaluator(x)

    return PotentialSpec(f"scaled({base.form})", {"c": c, **base.parameters},
                         base.decay_beta, ev, is_even=base.is_even,
                         breakpoints=base.breakpoints)


def grid_for_potential(potential: PotentialSpec | None, count: int = 512,
                       half_width: float = 12.0) -> WeightedGrid:
    """Grid policy: breakpoint-aligned panels; graded layout for slow decay.

    Compactly supported resonance families get a tight window; potentials
    with decay_beta <= 8 get a large graded truncation radius so the x^k v
    moment tails converge.
    """
    if potential is None:
        return build_grid(half_width, count)
    bps = getattr(potential, "breakpoints", ())
    if getattr(potential, "decay_beta", math.inf) <= 8:
        return graded_gauss_grid(max(half_width, 2000.0), count, inner_width=4.0,
                                 breakpoints=bps)
    if potential.form == "remark16_resonance":
        return panelled_gauss_grid(min(half_width, 8.0), count, bps)
    if bps:
        return panelled_gauss_grid(half_width, count, bps)
    return build_grid(half_width, count)


def from_samples(x_samples, v_samples, decay_beta: float | None = None) -> PotentialSpec:
    """Potential from tabulated (x, V) pairs: cubic interpolation, zero outside."""
    from scipy.interpolate import CubicSpline

    x = np.asarray(x_samples, dtype=float)
    v = np.asarray(v_samples, dtype=float)
    if x.ndim != 1 or x.shape != v.shape or x.size < 4:
        raise ValueError("need matching 1-d sample arrays with at least 4 points")
    order = np.argsort(x)
    x, v = x[order], v[order]
    spline = CubicSpline(x, v)
    lo, hi = x[0], x[-1]

    def ev(pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros_like(pts, dtype=float)
        inside = (pts >= lo) & (pts <= hi)
        out[inside] = spline(pts[inside])
        return out

    even = bool(np.allclose(v, v[::-1], atol=1e-12 * max(1.0, np.abs(v).max())))
    return PotentialSpec("file", {"n_samples": x.size, "range": (float(lo), float(hi))},
                         decay_beta if decay_beta is not None else math.inf, ev,
                         is_even=even)


def load_potential_file(path) -> PotentialSpec:
    data = np.loadtxt(path)
    if data.ndim != 2 or data.shape[1] < 2:
        raise ValueError("potential file must have two whitespace-separated columns")
    return from_samples(data[:, 0], data[:, 1])


DECAY_THRESHOLDS = (13.0, 17.0, 25.0)


def decay_report(V: PotentialSpec, grid: WeightedGrid) -> dict:
    """Fit the tail decay exponent of |V| on the grid and flag the regimes.

    Returns {"beta_fit": float, "thresholds_met": {"beta>13": bool, ...}}.
    Compact or super-polynomially decaying tails report beta_fit = inf.
    """
    x = grid.nodes
    absv = np.abs(V.evaluator(x))
    peak = absv.max()
    if peak == 0:
        raise ValueError("potential vanishes identically on the grid")
    tail = np.abs(x) > max(1.0, 0.25 * grid.half_width)
    xt, vt = np.abs(x[tail]), absv[tail]
    keep = vt > peak * 1e-250
    beta_fit = math.inf
    if keep.sum() >= 8:
        # envelope fit: bin by log|x| and take per-bin maxima
        lx, lv = np.log(1.0 + xt[keep]), np.log(vt[keep])
        slope = np.polyfit(lx, lv, 1)[0]
        beta_fit = float(-slope)
        if beta_fit > 200:
            beta_fit = math.inf
    flags = {f"beta>{int(th)}": bool(beta_fit > th) for th in DECAY_THRESHOLDS}
    return {"beta_fit": beta_fit, "thresholds_met": flags}
