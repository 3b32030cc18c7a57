"""Closed-form kernels for the fourth-order free operator in one dimension.

Covers the outgoing/incoming free resolvent kernel at energy mu^4, its small-mu
expansion kernels |x-y|^(3+k) with their complex coefficients, the free
propagator kernel evaluated on a rotated contour, and the Taylor-split
identities used to peel powers of mu off oscillatory kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class ResolventSign(Enum):
    """Boundary value taken in the limiting absorption principle."""

    PLUS = "plus"
    MINUS = "minus"

    @property
    def unit(self) -> complex:
        return 1j if self is ResolventSign.PLUS else -1j


PLUS = ResolventSign.PLUS
MINUS = ResolventSign.MINUS


def _sign_of(sign) -> ResolventSign:
    if isinstance(sign, ResolventSign):
        return sign
    return ResolventSign(sign)


def coefficient(k, sign=PLUS) -> complex:
    """Expansion coefficient for the mu^k term.

    `k="a"` (or k=-3) returns the leading (-1 +- i)/4; integer k returns
    ((+-i)^(k+4) + (-1)^(k+4)) / (4 (k+3)!).  Even k >= -2 with k+4 not a
    multiple of 4 vanish identically; k=0 and k=4 return 1 because their
    numeric factors (1/12 and 1/(2*7!)) are carried inside the kernels.
    """
    s = _sign_of(sign).unit
    if k == "a" or k == -3:
        return (-1 + s) / 4
    if not isinstance(k, (int, np.integer)):
        raise ValueError(f"unsupported coefficient index {k!r}")
    if k in (0, 4):
        return 1.0 + 0j
    if k < -3:
        raise ValueError(f"unsupported coefficient index {k!r}")
    return (s ** (k + 4) + (-1) ** (k + 4)) / (4 * math.factorial(k + 3))


_GK_POWERS = {-1: 2, 0: 3, 1: 4, 3: 6, 4: 7}


def eval_Gk(k: int, x, y):
    """Expansion kernel G_k(x, y).

    G_-1 = |x-y|^2, G_0 = |x-y|^3/12, G_1 = |x-y|^4, G_3 = |x-y|^6,
    G_4 = |x-y|^7/(2*7!), and G_k = |x-y|^(3+k) for k >= 5.
    """
    r = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    if k in _GK_POWERS:
        out = r ** _GK_POWERS[k]
        if k == 0:
            out = out / 12.0
        elif k == 4:
            out = out / (2.0 * math.factorial(7))
        return out if out.ndim else float(out)
    if isinstance(k, (int, np.integer)) and k >= 5:
        out = r ** (3 + k)
        return out if out.ndim else float(out)
    raise ValueError(f"unsupported expansion kernel index {k!r}")


def eval_R0(mu: float, x, y, sign=PLUS):
    """Free resolvent kernel (+-i e^{+-i mu|x-y|} - e^{-mu|x-y|}) / (4 mu^3)."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    s = _sign_of(sign).unit
    r = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    p = mu * r
    val = (s * np.exp(s * p) - np.exp(-p)) / (4 * mu**3)
    return val if np.ndim(val) else complex(val)


# Term menu of the small-mu expansion: mu powers in ascending order.  Even
# powers -2, 2, 6, ... are absent because their coefficients vanish.
EXPANSION_POWERS = (-3, -1, 0, 1, 3, 4, 5, 7, 8)


def expansion_partial_sum(mu: float, x, y, order: int, sign=PLUS):
    """Sum of expansion terms through mu^order (order in EXPANSION_POWERS)."""
    if order not in EXPANSION_POWERS:
        raise ValueError(f"order must be one of {EXPANSION_POWERS}")
    s = _sign_of(sign)
    r = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    total = np.zeros(np.shape(r), dtype=complex)
    for k in EXPANSION_POWERS:
        if k > order:
            break
        if k == -3:
            term = coefficient("a", s) / mu**3 * np.ones_like(r)
        else:
            term = coefficient(k, s) * mu**k * eval_Gk(k, x, y)
        total = total + term
    return total if total.ndim else complex(total)


def expansion_remainder(mu: float, x, y, order: int, sign=PLUS):
    """eval_R0 minus the expansion through mu^order.

    For small mu|x-y| the subtraction is done on the Taylor series of the
    kernel (the direct difference would cancel catastrophically).
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if order not in EXPANSION_POWERS:
        raise ValueError(f"order must be one of {EXPANSION_POWERS}")
    s = _sign_of(sign)
    u = s.unit
    r = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    out = np.empty(r.shape, dtype=complex)
    small = mu * r < 0.5
    if np.any(small):
        p = mu * r[small]
        acc = np.zeros(p.shape, dtype=complex)
        # series tail: sum_{k > order} a_k mu^k r^{k+3}, terms decay factorially
        for k in range(order + 1, order + 60):
            m = k + 3
            c = (u**(m + 1) + (-1) ** (m + 1)) / (4 * math.factorial(m))
            if c == 0:
                continue
            term = c * p**m
            acc += term
            if np.all(np.abs(term) < 1e-18 * (1 + np.abs(acc))):
                break
        out[small] = acc / mu**3
    if np.any(~small):
        out[~small] = eval_R0(mu, r[~small], 0.0, s) - expansion_partial_sum(
            mu, r[~small], 0.0, order, s
        )
    return complex(out[0]) if scalar else out


# -- free propagator --------------------------------------------------------

_ROT = np.exp(-1j * np.pi / 8)

_FREE_NODES, _FREE_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _rotated_batch(big_x: np.ndarray, alpha: float) -> np.ndarray:
    """Vectorized rotated-contour integral for a batch of comparable X >= 0."""
    top = float(big_x.max())
    growth = top * math.sin(math.pi / 8)
    s_max = 2.0
    while s_max**4 - growth * s_max < 42 and s_max < 60:
        s_max *= 1.25
    n_panels = max(8, int(top * s_max / 4) + 1)
    edges = np.linspace(0.0, s_max, n_panels + 1)
    if alpha:
        # s^alpha has an endpoint singularity: refine the first panel
        # geometrically so the composite rule keeps its order
        graded = edges[1] * 2.0 ** np.arange(-40, 0)
        edges = np.concatenate([[0.0], graded, edges[1:]])
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    s = (mid[:, None] + half[:, None] * _FREE_NODES[None, :]).ravel()
    w = (half[:, None] * _FREE_WEIGHTS[None, :]).ravel()
    damp = np.exp(-(s**4)) * (s**alpha if alpha else 1.0)
    vals = np.cos(np.multiply.outer(big_x, _ROT * s)) @ (w * damp)
    return np.exp(-1j * (1 + alpha) * np.pi / 8) / np.pi * vals


_SP_SWITCH = 46.0  # beyond this scaled |x| the rotated contour loses precision


def _stationary_phase_far(big_x: np.ndarray, alpha: float) -> np.ndarray:
    """Far-field asymptotics at the stationary point xi* = (X/4)^(1/3).

    Two-term stationary-phase expansion plus, for alpha > 0, the origin
    contribution radiated by the |xi|^alpha kink (~ X^{-1-alpha}).  Relative
    error ~2e-5 at the switch point, falling rapidly beyond.
    """
    xi_star = (big_x / 4.0) ** (1.0 / 3.0)
    phase = 3.0 * xi_star**4 - math.pi / 4
    amp = xi_star**alpha / (math.sqrt(24 * math.pi) * xi_star)
    corr = 1 + 1j * (-7.0 / 144 + alpha / 12 - alpha * (alpha - 1) / 24) / xi_star**4
    out = amp * np.exp(1j * phase) * corr
    if alpha:
        out = out - math.gamma(1 + alpha) * math.sin(math.pi * alpha / 2) \
            / math.pi * big_x ** (-1 - alpha)
    return out


def free_propagator(x, t: float, alpha: float = 0.0):
    """Kernel of the free fourth-order group, (1/2 pi) int |xi|^alpha e^{i x xi - i t xi^4} d xi.

    Evaluated on the contour xi -> e^{-i pi/8} s where the quartic phase
    becomes a real Gaussian-type decay; in the far field (scaled |x| beyond
    ~46, where the rotated integrand's interior peak exhausts double
    precision) a two-term stationary-phase expansion takes over.  Satisfies
    the exact scaling I0(x, t) = t^{-(1+alpha)/4} I0(x t^{-1/4}, 1).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    t_pow = t ** (-(1 + alpha) / 4)
    big = np.abs(xs) * t ** (-0.25)
    out = np.empty(xs.shape, dtype=complex)
    bounds = [0.0, 2.0, 4.0, 8.0, 16.0, 32.0, _SP_SWITCH]
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        mask = (big >= lo) & (big < hi)
        if np.any(mask):
            out[mask] = _rotated_batch(big[mask], alpha) * t_pow
    far = big >= _SP_SWITCH
    if np.any(far):
        out[far] = _stationary_phase_far(big[far], alpha) * t_pow
    return out if np.ndim(x) else complex(out[0])


def free_kernel_peak(alpha: float = 0.0) -> float:
    """|I0(0, 1)| = Gamma((1+alpha)/4) / (4 pi)."""
    return math.gamma((1 + alpha) / 4) / (4 * math.pi)


# -- Taylor-split identity ---------------------------------------------------


@dataclass(frozen=True)
class TaylorKernel:
    """F(p) together with its first three derivatives.

    corrected=True adds (1 +- i)/2 p^2, which flattens F'' at zero and makes
    the third-order split applicable.
    """

    sign: ResolventSign
    corrected: bool = False

    def f(self, p):
        u = self.sign.unit
        out = u * np.exp(u * p) - np.exp(-p)
        if self.corrected:
            out = out + (1 + u) / 2 * p**2
        return out

    def f1(self, p):
        u = self.sign.unit
        out = -np.exp(u * p) + np.exp(-p)
        if self.corrected:
            out = out + (1 + u) * p
        return out

    def f2(self, p):
        u = self.sign.unit
        out = -u * np.exp(u * p) - np.exp(-p)
        if self.corrected:
            out = out + (1 + u)
        return out

    def f3(self, p):
        u = self.sign.unit
        return np.exp(u * p) + np.exp(-p)


def taylor_kernel(sign=PLUS, corrected: bool = False) -> TaylorKernel:
    return TaylorKernel(_sign_of(sign), corrected)


_THETA_NODES, _THETA_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _theta_quadrature(fn, x: float, y: float):
    """Integrate fn(theta) over [0,1], splitting at the |x - theta y| kink."""
    breaks = [0.0, 1.0]
    if y != 0:
        star = x / y
        if 0 < star < 1:
            breaks = [0.0, star, 1.0]
    total = 0.0 + 0.0j
    for a, b in zip(breaks[:-1], breaks[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        theta = mid + half * _THETA_NODES
        total += half * np.sum(_THETA_WEIGHTS * fn(theta))
    return total


def taylor_split_check(F: TaylorKernel, mu: float, x: float, y: float, order: int) -> float:
    """|LHS - RHS| of the order-1/2/3 splitting of F(mu|x-y|) around y=0.

    The remainder integral over theta in [0,1] is evaluated by Gauss
    quadrature split at the kink of |x - theta y|.
    """
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    if order >= 2 and abs(F.f1(0.0)) > 1e-12:
        raise ValueError("order >= 2 requires F'(0) = 0")
    if order == 3 and abs(F.f2(0.0)) > 1e-12:
        raise ValueError("order 3 requires F''(0) = 0")
    lhs = F.f(mu * abs(x - y))
    ax = abs(x)
    sx = math.copysign(1.0, x) if x != 0 else 1.0
    if order == 1:
        rhs = F.f(mu * ax) - mu * y * _theta_quadrature(
            lambda th: np.sign(x - th * y) * F.f1(mu * np.abs(x - th * y)), x, y
        )
    elif order == 2:
        rhs = (
            F.f(mu * ax)
            - mu * y * sx * F.f1(mu * ax)
            + mu**2 * y**2
            * _theta_quadrature(lambda th: (1 - th) * F.f2(mu * np.abs(x - th * y)), x, y)
        )
    else:
        rhs = (
            F.f(mu * ax)
            - mu * y * sx * F.f1(mu * ax)
            + mu**2 * y**2 / 2 * F.f2(mu * ax)
            - mu**3 * y**3 / 2
            * _theta_quadrature(
                lambda th: (1 - th) ** 2 * np.sign(x - th * y) ** 3
                * F.f3(mu * np.abs(x - th * y)),
                x,
                y,
            )
        )
    return float(abs(lhs - rhs))
