"""The Birman-Schwinger operator M(mu) = U + v R0(mu^4) v and its inverse.

Provides direct inversion, the projection-cascade inversion mirroring the
zero-energy analysis (full space -> Q -> S0 -> S1 -> S2, as many stages as the
classified threshold type makes nontrivial), a fit of the leading singularity
order of ||M(mu)^{-1}|| as mu -> 0, and the perturbed resolvent kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularityError
from .kernels import PLUS, ResolventSign, coefficient, eval_R0
from .operators import Op, discretize_kernel, lift, multiplier, restrict
from .resonance import SChain, ThresholdData


def build_M(td: ThresholdData, mu: float, sign=PLUS) -> Op:
    """M(mu) = U + v R0^{sign}(mu^4) v in kernel convention."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    v_vals = np.real(td.v.values)
    vrv = discretize_kernel(
        td.grid,
        lambda a, b: eval_R0(mu, a, b, sign),
        diagonal_split=td.grid.rule != "trapezoid",
        symmetrize=True,
        left=v_vals, right=v_vals,
    )
    return Op(td.grid, td.U.mat + vrv.mat, "plain")


def _direct_inverse(m: Op, cond_cap: float) -> Op:
    tilde = m.tilde()
    cond = np.linalg.cond(tilde)
    if not np.isfinite(cond) or cond > cond_cap:
        raise SingularityError("M is numerically singular at this mu",
                               stage="direct", condition=float(cond))
    return Op(m.grid, np.linalg.inv(m.mat), "plain")


def chain_stage_names(chain: SChain) -> list:
    """Feshbach stages the cascade will execute for this threshold type."""
    stages = ["M1", "M2"]
    if chain.s1.dim > 0:
        stages.append("M3")
    if chain.s2.dim > 0:
        stages.append("M4")
    return stages


def _feshbach_cascade(m: Op, td: ThresholdData, chain: SChain, mu: float,
                      sign, cond_cap: float) -> Op:
    """Cascade inversion of M via nested projection formulas.

    Each stage works on its rescaled operator (M~, then M1~ on QL^2, M2~ on
    S0 L^2, ...), whose leading part at small mu is an O(1) invertible
    operator plus the next projector.  The mu-power prefactors are peeled off
    analytically; skipping them would feed O(mu^k) blocks into +S shifts and
    lose the small-mu digits to cancellation.
    """
    a_t = coefficient("a", sign) * td.norm_v_l1
    a_m1 = coefficient(-1, sign)
    a_1 = coefficient(1, sign)
    a_3 = coefficient(3, sign)
    subspaces = [td.Q, chain.s0]
    # prefactor of the stage-(level+1) Schur block in terms of its rescaling
    prefs = [a_m1 / a_t * mu**2, mu / a_m1]
    if chain.s1.dim > 0:
        subspaces.append(chain.s1)
        prefs.append(a_1 * mu)
    if chain.s2.dim > 0:
        subspaces.append(chain.s2)
        prefs.append(a_3 / a_1 * mu**2)

    def invert_on(op_mat: np.ndarray, level: int) -> np.ndarray:
        """Inverse (as a full matrix, supported on subspaces[level-1])."""
        sub = subspaces[level - 1] if level > 0 else None
        if level == len(subspaces):
            small = restrict(Op(m.grid, op_mat, "plain"), sub)
            cond = np.linalg.cond(small)
            if not np.isfinite(cond) or cond > cond_cap:
                raise SingularityError(
                    f"cascade stage M{level} singular", stage=f"M{level}",
                    condition=float(cond))
            return lift(sub, np.linalg.inv(small)).mat
        s_next = subspaces[level]
        p = s_next.projector.mat
        ap = op_mat + p
        if level == 0:
            cond = np.linalg.cond(ap)
            if not np.isfinite(cond) or cond > cond_cap:
                raise SingularityError("cascade stage M1 singular (A+Q)",
                                       stage="M1", condition=float(cond))
            ap_inv = np.linalg.inv(ap)
        else:
            small = restrict(Op(m.grid, ap, "plain"), sub)
            cond = np.linalg.cond(small)
            if not np.isfinite(cond) or cond > cond_cap:
                raise SingularityError(
                    f"cascade stage M{level} singular (A+S)", stage=f"M{level}",
                    condition=float(cond))
            ap_inv = lift(sub, np.linalg.inv(small)).mat
        b_scaled = (p - p @ ap_inv @ p) / prefs[level]
        b_inv = invert_on(b_scaled, level + 1) / prefs[level]
        return ap_inv + ap_inv @ b_inv @ ap_inv

    inv_tilde = invert_on(m.mat * (mu**3 / a_t), 0)
    return Op(m.grid, inv_tilde * (mu**3 / a_t), "plain")


def invert_M(m: Op, method: str = "direct", td: ThresholdData | None = None,
             chain: SChain | None = None, mu: float | None = None,
             sign=PLUS, cond_cap: float = 1e12) -> Op:
    """Inverse of M by direct dense inversion or the documented cascade.

    The cascade (`method="feshbach_chain"`) needs the threshold data, the
    S-chain and the mu the operator was built at; it executes only the stages
    the classified type makes nontrivial and agrees with the direct inverse.
    """
    if method == "direct":
        return _direct_inverse(m, cond_cap)
    if method == "feshbach_chain":
        if td is None or chain is None or mu is None:
            raise ValueError("feshbach_chain needs td, chain and mu")
        return _feshbach_cascade(m, td, chain, mu, sign, cond_cap)
    raise ValueError(f"unknown inversion method {method!r}")


@dataclass(frozen=True)
class SingularityFit:
    """Log-log fit of ||M(mu)^{-1}|| against mu on a small-mu window."""

    mus: np.ndarray
    norms: np.ndarray
    conds: np.ndarray
    used: np.ndarray
    exponent: float
    residual: float
    warnings: tuple


def singularity_order(td: ThresholdData, mu_range=(1e-4, 1e-1), samples: int = 16,
                      sign=PLUS, cond_cap: float = 1e12) -> SingularityFit:
    """Fit log ||M^{-1}|| ~ p log mu on a geometric mu-sample.

    ||M^{-1}|| is 1/sigma_min of the weighted matrix (no inversion), so every
    sample is computable; samples whose condition number exceeds cond_cap are
    excluded from the fit and reported in warnings.
    """
    mus = np.geomspace(mu_range[0], mu_range[1], samples)
    norms = np.empty(samples)
    conds = np.empty(samples)
    for i, mu in enumerate(mus):
        sv = np.linalg.svd(build_M(td, float(mu), sign).tilde(), compute_uv=False)
        norms[i] = 1.0 / sv[-1]
        conds[i] = sv[0] / sv[-1]
    used = conds <= cond_cap
    warnings = []
    if used.sum() < samples:
        warnings.append(
            f"{samples - int(used.sum())} samples above condition cap {cond_cap:g} excluded"
        )
    if used.sum() < 3:
        raise SingularityError("too few usable mu-samples below the condition cap",
                               stage="fit")
    coeffs, diag = np.polyfit(np.log(mus[used]), np.log(norms[used]), 1, full=True)[:2]
    residual = float(np.sqrt(diag[0] / used.sum())) if diag.size else 0.0
    return SingularityFit(mus, norms, conds, used, float(coeffs[0]), residual,
                          tuple(warnings))


def rv_kernel(td: ThresholdData, mu: float, sign=PLUS, method: str = "direct",
              chain: SChain | None = None, cond_cap: float = 1e12) -> Op:
    """Perturbed resolvent kernel R_V = R0 - R0 v M^{-1} v R0 at energy mu^4."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    r0 = discretize_kernel(
        td.grid, lambda a, b: eval_R0(mu, a, b, sign),
        diagonal_split=td.grid.rule != "trapezoid", symmetrize=True,
    )
    m = build_M(td, mu, sign)
    minv = invert_M(m, method, td=td, chain=chain, mu=mu, sign=sign,
                    cond_cap=cond_cap)
    vop = multiplier(td.grid, td.v.values)
    corr = r0 @ vop @ minv @ vop @ r0
    return Op(td.grid, r0.mat - corr.mat, "kernel")
