"""Dyadic partition of unity and a quartic-phase oscillatory integrator.

The integrator targets integrals int e^{-i t mu^4} g(mu) dmu on a finite
interval of (0, inf): it slices the interval so each Gauss panel sees a
bounded amount of phase (quartic plus an optional known linear rate carried
by g), then doubles the panel count until two consecutive refinements agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

_PANEL_NODES, _PANEL_WEIGHTS = np.polynomial.legendre.leggauss(16)

# ~1.5 phase cycles per 16-node panel => >= 10 nodes per oscillation
_CYCLES_PER_PANEL = 1.5


def _poly_smooth_ramp(u):
    """C^4 ramp: 0 at u<=0, 1 at u>=1 (9th-degree smoothstep)."""
    u = np.clip(u, 0.0, 1.0)
    return u**5 * (126 + u * (-420 + u * (540 + u * (-315 + 70 * u))))


def _exp_smooth_ramp(u):
    """C-infinity ramp built from the standard e^{-1/u} mollifier."""
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.maximum(1 - u, 1e-300)), 0.0)
    return a / (a + b)


_RAMPS = {"poly_smooth": _poly_smooth_ramp, "exp_smooth": _exp_smooth_ramp}


@dataclass(frozen=True)
class DyadicPartition:
    """Smooth dyadic partition sum_N phi_N = 1 with supp phi_N in [2^(N-2), 2^N]."""

    n_min: int
    n_max: int
    bump: str

    def phi(self, s):
        """Even cutoff: 1 on [-1/2, 1/2], 0 outside [-1, 1]."""
        ramp = _RAMPS[self.bump]
        a = np.abs(np.asarray(s, dtype=float))
        out = ramp(2.0 * (1.0 - a))
        return out if out.ndim else float(out)

    def phi0(self, s):
        return self.phi(s) - self.phi(2.0 * np.asarray(s, dtype=float))

    def phi_N(self, N: int, s):
        return self.phi0(np.asarray(s, dtype=float) / 2.0**N)

    def partition_sum(self, s):
        s = np.asarray(s, dtype=float)
        total = np.zeros_like(s)
        for N in range(self.n_min, self.n_max + 1):
            total = total + self.phi_N(N, s)
        return total if total.ndim else float(total)


def build_partition(n_min: int, n_max: int, bump: str = "poly_smooth") -> DyadicPartition:
    if n_min >= n_max:
        raise ValueError("need n_min < n_max")
    if bump not in _RAMPS:
        raise ValueError(f"bump must be one of {sorted(_RAMPS)}")
    return DyadicPartition(n_min, n_max, bump)


def _phase_edges(t: float, a: float, b: float, extra_freq: float, n_panels: int):
    """Panel edges equidistributing the phase t mu^4 + extra_freq * mu."""
    if t == 0 and extra_freq == 0:
        return np.linspace(a, b, n_panels + 1)
    # invert the cumulative phase on a fine monotone sample
    mu = np.linspace(a, b, 16 * n_panels + 1)
    phase = t * (mu**4 - a**4) + abs(extra_freq) * (mu - a)
    targets = np.linspace(0.0, phase[-1], n_panels + 1)
    edges = np.interp(targets, phase, mu)
    edges[0], edges[-1] = a, b
    return edges


def _panel_sum(t: float, g, edges: np.ndarray):
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    mu = (mid[:, None] + half[:, None] * _PANEL_NODES[None, :]).ravel()
    w = (half[:, None] * _PANEL_WEIGHTS[None, :]).ravel()
    gv = np.asarray(g(mu), dtype=complex)
    vals = np.exp(-1j * t * mu**4) * gv
    return complex(np.sum(w * vals)), float(np.sum(w * np.abs(gv)))


def oscillatory_integral(
    t: float,
    g,
    support,
    rel_tol: float = 1e-8,
    extra_freq: float = 0.0,
    max_nodes: int = 4_000_000,
) -> complex:
    """int_support e^{-i t mu^4} g(mu) dmu to the requested relative tolerance.

    g must be bounded and piecewise smooth on the support; `extra_freq` is an
    optional known bound on g's own phase rate (rad per unit mu) used to seed
    the panel layout.  Convergence is declared when two refinements agree to
    rel_tol of max(|value|, L^1 mass of g), the latter covering integrals
    driven to zero by cancellation.  Raises NumericalError with the achieved
    error estimate if the node budget is exhausted first.
    """
    a, b = float(support[0]), float(support[1])
    if not (0 <= a < b):
        raise ValueError("support must be an interval inside [0, inf)")
    t = float(t)
    cycles = (abs(t) * (b**4 - a**4) + abs(extra_freq) * (b - a)) / (2 * math.pi)
    n_panels = max(8, int(math.ceil(cycles / _CYCLES_PER_PANEL)))
    prev = None
    last_err = None
    while True:
        if 16 * n_panels > max_nodes:
            raise NumericalError(
                f"oscillatory integral did not converge within {max_nodes} nodes",
                achieved=last_err,
            )
        edges = _phase_edges(abs(t), a, b, extra_freq, n_panels)
        val, g_mass = _panel_sum(t, g, edges)
        if prev is not None:
            last_err = abs(val - prev)
            if last_err <= rel_tol * max(abs(val), g_mass, 1e-300):
                return val
        prev = val
        n_panels *= 2


def lemma21_bound_check(
    t: float,
    N: int,
    psi: float,
    phi_fn=None,
    bump: str = "poly_smooth",
    rel_tol: float = 1e-8,
) -> float:
    """Normalized block integral |K_N| * (1 + t 2^{4N})^{1/2}.

    K_N = int_0^inf e^{-i t 2^{4N} s^4} phi_0(s) e^{i 2^N s psi} Phi(2^N s) ds,
    integrated over the bump support [1/4, 1].  The statistic is bounded by a
    constant uniform in (t, N, psi).
    """
    if psi < 0:
        raise ValueError("psi must be nonnegative")
    part = build_partition(-1, 1, bump)
    scale = 2.0**N
    phi_big = (lambda u: np.ones_like(u)) if phi_fn is None else phi_fn

    def integrand(s):
        return part.phi0(s) * np.exp(1j * scale * s * psi) * np.asarray(
            phi_big(scale * s), dtype=complex
        )

    val = oscillatory_integral(
        t * scale**4, integrand, (0.25, 1.0), rel_tol=rel_tol, extra_freq=scale * psi
    )
    return float(abs(val) * math.sqrt(1 + abs(t) * scale**4))


def low_sum_check(t: float, alpha: float, n_range=(-60, 60)) -> float:
    """t^{(1+alpha)/4} * sum_N 2^{(1+alpha)N} (1 + t 2^{4N})^{-1/2}.

    Bounded uniformly in t for 0 <= alpha < 1; summed in ascending N for
    reproducibility.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    total = 0.0
    for N in range(int(n_range[0]), int(n_range[1]) + 1):
        total += 2.0 ** ((1 + alpha) * N) / math.sqrt(1 + t * 2.0 ** (4 * N))
    return total * t ** ((1 + alpha) / 4)
