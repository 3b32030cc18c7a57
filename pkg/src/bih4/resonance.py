"""Zero-energy threshold machinery: projections, the S-chain, classification.

Everything here is real linear algebra at mu = 0.  The chain follows the
kernel characterizations

    S0 = ker Q vG_{-1}v Q on QL^2,    S1 = ker S0 T0 S0 on S0 L^2,
    S2 = ker T1 on S1 L^2,            S3 = ker T2 on S2 L^2,

with T1, T2 assembled literally (constants 6/||V||_1, 384, 8*6!, 5/2, 48*6!).
The first trivial stage decides the threshold type; S3 vectors correspond to
genuine square-integrable zero-energy solutions.

Stage detection is relative but each stage carries its own scale: T1 and T2
restrict to rank-<=2 forms whose natural size can vanish on families tuned to
a threshold, so thresholds are measured against the unprojected moment
vectors rather than the (possibly tiny) restricted spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ChainError, DegeneratePotentialError, SearchFailure
from .grid import GridFunction, WeightedGrid, from_callable, inner_product, norm
from .kernels import eval_Gk
from .operators import (Op, Subspace, complement, discretize_kernel, lift,
                        multiplier, projector_onto, restrict, split_spectrum,
                        subspace_from_columns)

_FACT6 = math.factorial(6)


@dataclass(frozen=True)
class ThresholdData:
    """Zero-energy Birman-Schwinger objects for one potential on one grid."""

    potential: object
    grid: WeightedGrid
    v: GridFunction
    U: Op
    T0: Op
    P: Subspace
    Q: Subspace
    v1: GridFunction
    norm_v_l1: float          # ||V||_{L^1} by quadrature
    xkv: tuple                # (v, xv, x^2 v, x^3 v) as GridFunctions
    g_ops: dict = field(repr=False)  # vG_k v for k in {-1, 1, 3}


def build_threshold(potential, grid: WeightedGrid) -> ThresholdData:
    """Sample V on the grid and build v, U, T0, P, Q, v1 and the vG_k v ops."""
    x = grid.nodes
    vvals_raw = np.asarray(potential.evaluator(x), dtype=float)
    norm_v_l1 = float(np.sum(grid.weights * np.abs(vvals_raw)))
    if norm_v_l1 <= 0 or np.max(np.abs(vvals_raw)) == 0:
        raise DegeneratePotentialError("potential is identically zero on the grid")
    v_vals = np.sqrt(np.abs(vvals_raw))
    # sgn(0) := 1 keeps U unitary where V vanishes (off the support the
    # Birman-Schwinger operator must act as the identity)
    u_vals = np.where(vvals_raw >= 0, 1.0, -1.0)
    v = GridFunction(grid, v_vals)
    U = multiplier(grid, u_vals)

    vg0v = discretize_kernel(
        grid, lambda a, b: eval_Gk(0, a, b),
        diagonal_split=grid.rule != "trapezoid", symmetrize=True,
        left=v_vals, right=v_vals,
    )
    T0 = Op(grid, U.mat + vg0v.mat, "plain")
    P = projector_onto([v])
    Q = complement(grid, [v])
    xv = GridFunction(grid, x * v_vals)
    x2v = GridFunction(grid, x**2 * v_vals)
    x3v = GridFunction(grid, x**3 * v_vals)
    v1 = xv - (inner_product(xv, v) / norm_v_l1) * v
    g_ops = {
        k: discretize_kernel(grid, lambda a, b, kk=k: eval_Gk(kk, a, b),
                             left=v_vals, right=v_vals)
        for k in (-1, 1, 3)
    }
    return ThresholdData(potential, grid, v, U, T0, P, Q, v1, norm_v_l1,
                         (v, xv, x2v, x3v), g_ops)


def _hermitian_stage(small: np.ndarray):
    """Eigen data of a (numerically) Hermitian stage matrix, |lambda| descending."""
    sym = 0.5 * (small + small.conj().T)
    lam, vec = np.linalg.eigh(sym)
    order = np.argsort(-np.abs(lam))
    return lam[order], vec[:, order]


def _null_split(lam_sorted, rel_tol, scale=None):
    sigma = np.abs(lam_sorted)
    return split_spectrum(sigma, rel_tol, scale=scale)


@dataclass(frozen=True)
class SChain:
    """Nested projections S0 >= S1 >= S2 >= S3 with per-stage spectra."""

    s0: Subspace
    s1: Subspace
    s2: Subspace
    s3: Subspace
    d0: Op                    # (QvG_{-1}vQ + S0)^{-1} on QL^2
    d1: Op | None             # (S0 T0 S0 + S1)^{-1} on S0 L^2
    d2: Op | None             # (T1 + S2)^{-1} on S1 L^2
    t1: Op | None             # T1 as a full-space operator (S1-sandwiched)
    t2: Op | None
    report: dict = field(repr=False)

    @property
    def dims(self):
        return {"S0": self.s0.dim, "S1": self.s1.dim,
                "S2": self.s2.dim, "S3": self.s3.dim}


def _empty_subspace(grid):
    return subspace_from_columns(grid, np.zeros((grid.count, 0), dtype=complex))


def _stage_report(name, lam, cut, scale):
    sig = np.abs(lam)
    lam_real = np.real(np.real_if_close(lam))
    return {
        "stage": name,
        "eigs_largest": [float(x) for x in lam_real[: min(4, lam.size)]],
        "eigs_smallest": [float(x) for x in lam_real[max(0, lam.size - 8):][::-1]],
        "sigma_min_kept": float(sig[cut - 1]) if cut > 0 else None,
        "sigma_max_null": float(sig[cut]) if cut < sig.size else None,
        "null_dim": int(sig.size - cut),
        "scale": float(scale),
    }


def build_s_chain(td: ThresholdData, rel_tol: float = 1e-7) -> SChain:
    """Run the kernel cascade and return the nested projections with spectra."""
    grid = td.grid
    report = {"rel_tol": rel_tol}
    v, xv, x2v, x3v = td.xkv

    # stage 0: ker QvG_{-1}vQ on QL^2 (equivalently the complement of {v, xv})
    q_proj = td.Q.projector
    a0 = q_proj @ td.g_ops[-1] @ q_proj
    r0 = restrict(a0, td.Q)
    lam0, vec0 = _hermitian_stage(r0)
    cut0 = _null_split(lam0, rel_tol)
    s0 = subspace_from_columns(grid, td.Q.basis @ vec0[:, cut0:])
    report["stage0"] = _stage_report("QvG-1vQ", lam0, cut0, np.abs(lam0[0]))

    c0 = vec0[:, cut0:]                       # S0 basis in Q coordinates
    d0_small = np.linalg.inv(r0 + c0 @ c0.conj().T)
    d0 = lift(td.Q, d0_small)

    # stage 1: ker S0 T0 S0 on S0 L^2
    r1 = restrict(td.T0, s0)
    lam1, vec1 = _hermitian_stage(r1)
    cut1 = _null_split(lam1, rel_tol)
    s1 = subspace_from_columns(grid, s0.basis @ vec1[:, cut1:])
    report["stage1"] = _stage_report("S0T0S0", lam1, cut1, np.abs(lam1[0]))

    c1 = vec1[:, cut1:]
    d1 = lift(s0, np.linalg.inv(r1 + c1 @ c1.conj().T))

    if s1.dim == 0:
        return SChain(s0, s1, _empty_subspace(grid), _empty_subspace(grid),
                      d0, d1, None, None, None, report)

    # stage 2: ker T1 on S1 L^2
    p_proj = td.P.projector
    t1_full = (
        td.g_ops[1]
        + (6.0 / td.norm_v_l1) * (td.g_ops[-1] @ p_proj @ td.g_ops[-1])
        - 384.0 * (td.T0 @ d0 @ td.T0)
    )
    r_t1 = restrict(t1_full, s1)
    v1sq = norm(td.v1) ** 2
    t0v1 = td.T0.apply(td.v1)
    scale2 = float(
        12 * _proj_norm_sq(s1, x2v) + 192 / v1sq**2 * _proj_norm_sq(s1, t0v1)
    )
    ref2 = float(12 * norm(x2v) ** 2 + 192 / v1sq**2 * norm(t0v1) ** 2)
    lam2, vec2 = _hermitian_stage(r_t1)
    cut2 = _null_split(lam2, rel_tol, scale=ref2)
    s2 = subspace_from_columns(grid, s1.basis @ vec2[:, cut2:])
    rep2 = _stage_report("T1", lam2, cut2, ref2)
    rep2["restricted_scale"] = scale2
    report["stage2"] = rep2

    c2 = vec2[:, cut2:]
    d2 = lift(s1, np.linalg.inv(r_t1 + c2 @ c2.conj().T))
    t1_op = lift(s1, r_t1)

    if s2.dim == 0:
        return SChain(s0, s1, s2, _empty_subspace(grid),
                      d0, d1, d2, t1_op, None, report)

    # stage 3: ker T2 on S2 L^2
    g1, gm1, g3 = td.g_ops[1], td.g_ops[-1], td.g_ops[3]
    t0 = td.T0
    core = (
        g3
        - (8.0 * _FACT6 / td.norm_v_l1) * (t0 @ t0)
        + 2.5 * (g1 @ d0 @ g1)
    )
    left = t0 @ gm1 - (td.norm_v_l1 / 6.0) * (g1 @ d0 @ t0)
    right = gm1 @ t0 - (td.norm_v_l1 / 6.0) * (t0 @ d0 @ g1)
    t2_full = core + (48.0 * _FACT6 / td.norm_v_l1**2) * (left @ d2 @ right)
    r_t2 = restrict(t2_full, s2)
    abc = quadratic_form_coefficients(td, s1, d2)
    t0v = t0.apply(v)
    ref3 = float(
        abs(abc["a"]) * norm(x3v) ** 2
        + abs(abc["b"]) * norm(t0v) ** 2
        + abs(abc["c"]) * norm(x3v) * norm(t0v)
    )
    lam3, vec3 = _hermitian_stage(r_t2)
    cut3 = _null_split(lam3, rel_tol, scale=ref3)
    s3 = subspace_from_columns(grid, s2.basis @ vec3[:, cut3:])
    rep3 = _stage_report("T2", lam3, cut3, ref3)
    rep3["form_coefficients"] = {k: float(val) for k, val in abc.items()}
    report["stage3"] = rep3

    return SChain(s0, s1, s2, s3, d0, d1, d2, t1_op, lift(s2, r_t2), report)


def _proj_norm_sq(sub: Subspace, f: GridFunction) -> float:
    return float(np.sum(np.abs(sub.coeffs(f)) ** 2))


def d0_identity_value(td: ThresholdData, chain: SChain) -> complex:
    """<D0 v1, v1>; equals -1/2 exactly, independent of V and grid."""
    return inner_product(chain.d0.apply(td.v1), td.v1)


def quadratic_form_coefficients(td: ThresholdData, s1: Subspace, d2: Op) -> dict:
    """Coefficients of <T2 f, f> = a|X|^2 + b|Y|^2 + c Re(X conj(Y)) on S2.

    X = <f, x^3 v>, Y = <T0 f, v>; the inner factor of b is bounded above by
    -1/2 and a by -20, which is what forces X = Y = 0 on ker T2.
    """
    v, xv, x2v, x3v = td.xkv
    v1sq = norm(td.v1) ** 2
    g1v = s1.projector.apply(x2v)          # S1(x^2 v)
    g2v = s1.projector.apply(td.T0.apply(td.v1))   # S1(T0 v1)
    d2g1 = d2.apply(g1v)
    d2g2 = d2.apply(g2v)
    q11 = float(np.real(inner_product(d2g1, g1v)))
    q22 = float(np.real(inner_product(d2g2, g2v)))
    q21 = float(np.real(inner_product(d2g2, g1v)))
    a = 32 * math.factorial(5) * q22 / v1sq**2 - 40.0
    b_inner = 6.0 * q11 - 1.0
    b = (8.0 * _FACT6 / td.norm_v_l1**2) * b_inner
    c = -32.0 * _FACT6 * q21 / (v1sq * td.norm_v_l1)
    return {"a": a, "b": b, "b_inner": b_inner, "c": c}


_KINDS = ("Regular", "FirstKind", "SecondKind", "Eigenvalue")


@dataclass(frozen=True)
class ResonanceClass:
    kind: str
    diagnostics: dict = field(repr=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")


def classify(td: ThresholdData, chain: SChain) -> ResonanceClass:
    """Threshold type from the first trivial chain stage.

    Regular if S1 = 0; first-kind if S1 != 0 = S2; second-kind if S2 != 0 = S3;
    a nontrivial S3 corresponds to a zero eigenvalue.
    """
    dims = chain.dims
    if dims["S3"] > 0:
        kind = "Eigenvalue"
    elif dims["S2"] > 0:
        kind = "SecondKind"
    elif dims["S1"] > 0:
        kind = "FirstKind"
    else:
        kind = "Regular"
    beta = getattr(td.potential, "decay_beta", math.inf)
    required = {"Regular": 13.0, "FirstKind": 17.0, "SecondKind": 25.0,
                "Eigenvalue": 25.0}[kind]
    diagnostics = {
        "dims": dims,
        "stages": chain.report,
        "d0_identity": float(np.real(d0_identity_value(td, chain))),
        "decay_beta": float(beta) if math.isfinite(beta) else None,
        "beta_warning": bool(beta < required),
    }
    return ResonanceClass(kind, diagnostics)


def table1_residuals(td: ThresholdData, chain: SChain) -> dict:
    """Operator-norm residuals of the Table-1 orthogonality relations.

    All entries are normalized by ||T0||; the moment rows are normalized by
    the norms of x^k v.
    """
    t0_norm = td.T0.norm()
    v, xv, x2v, x3v = td.xkv
    out = {}

    def cross_norm(left: Subspace, right: Subspace) -> float:
        if left.dim == 0 or right.dim == 0:
            return 0.0
        block = (left.basis.conj().T * td.grid.weights[None, :]) @ (
            td.T0.mat @ right.basis
        )
        return float(np.linalg.norm(block, 2))

    def moment_res(sub: Subspace, f: GridFunction) -> float:
        if sub.dim == 0:
            return 0.0
        return float(np.sqrt(_proj_norm_sq(sub, f))) / max(norm(f), 1e-300)

    out["S0_v"] = moment_res(chain.s0, v)
    out["S0_xv"] = moment_res(chain.s0, xv)
    out["S1_T0_S0"] = cross_norm(chain.s1, chain.s0) / t0_norm
    out["S1_v"] = moment_res(chain.s1, v)
    out["S1_xv"] = moment_res(chain.s1, xv)
    q_basis_sub = td.Q
    out["S2_T0_Q"] = cross_norm(chain.s2, q_basis_sub) / t0_norm
    out["S2_v"] = moment_res(chain.s2, v)
    out["S2_xv"] = moment_res(chain.s2, xv)
    out["S2_x2v"] = moment_res(chain.s2, x2v)
    if chain.s3.dim:
        full = subspace_from_columns(td.grid, np.eye(td.grid.count, dtype=complex)
                                     / np.sqrt(td.grid.weights)[:, None])
        out["S3_T0"] = cross_norm(chain.s3, full) / t0_norm
        for k, f in enumerate((v, xv, x2v, x3v)):
            out[f"S3_x{k}v"] = moment_res(chain.s3, f)
    return out


# -- resonance function reconstruction ---------------------------------------


def _test_functions(grid: WeightedGrid):
    """Five decaying smooth test functions with analytic fourth derivatives."""
    centers = (-2.0, -0.7, 0.0, 1.1, 2.3)
    out = []
    for a in centers:
        def g(x, a=a):
            return np.exp(-((np.asarray(x, dtype=float) - a) ** 2))

        def g4(x, a=a):
            u = np.asarray(x, dtype=float) - a
            return (16 * u**4 - 48 * u**2 + 12) * np.exp(-(u**2))

        out.append((g, g4))
    return out


def weak_residuals(td: ThresholdData, phi: GridFunction) -> list:
    """<phi, g''''> + <V phi, g> for the built-in test functions."""
    grid = td.grid
    vvals = np.asarray(td.potential.evaluator(grid.nodes), dtype=float)
    res = []
    for g, g4 in _test_functions(grid):
        lhs = np.sum(grid.weights * phi.values * g4(grid.nodes))
        rhs = np.sum(grid.weights * vvals * phi.values * g(grid.nodes))
        res.append(complex(lhs + rhs))
    return res


@dataclass(frozen=True)
class Reconstruction:
    phi: GridFunction
    c1: float
    c2: float
    c1_rule: str
    residual: float


def reconstruct_resonance_detailed(td: ThresholdData, f: GridFunction,
                                   chain: SChain | None = None,
                                   membership_tol: float = 1e-6) -> Reconstruction:
    """phi = -G0 v f + c1 x + c2 for f in S1 L^2.

    Two candidate normalizations for c1 are evaluated (denominator ||v1|| vs
    <v1, v1>) and the one with the smaller weak residual is returned.
    """
    grid = td.grid
    if chain is not None and chain.s1.dim > 0:
        proj = chain.s1.projector.apply(f)
        defect = norm(f - proj) / max(norm(f), 1e-300)
        if defect > membership_tol:
            raise ValueError(f"f is not in S1 (defect {defect:.2e})")
    g0 = discretize_kernel(grid, lambda a, b: eval_Gk(0, a, b),
                           diagonal_split=grid.rule != "trapezoid", symmetrize=True)
    vf = GridFunction(grid, td.v.values * f.values)
    base = -1.0 * g0.apply(vf)
    t0f = td.T0.apply(f)
    v, xv, _, _ = td.xkv
    ip_v1 = inner_product(t0f, td.v1)
    ip_v = inner_product(t0f, v)
    xv_v = inner_product(xv, v)
    best = None
    for rule, denom in (("norm", norm(td.v1)), ("norm_sq", norm(td.v1) ** 2)):
        c1 = complex(ip_v1 / denom)
        c2 = complex(ip_v / td.norm_v_l1 - (xv_v / td.norm_v_l1) * c1)
        phi = GridFunction(grid, base.values + c1 * grid.nodes + c2)
        resid = float(np.sqrt(sum(abs(r) ** 2 for r in weak_residuals(td, phi))))
        if best is None or resid < best.residual:
            best = Reconstruction(phi, float(np.real(c1)), float(np.real(c2)),
                                  rule, resid)
    return best


def reconstruct_resonance(td: ThresholdData, f: GridFunction,
                          chain: SChain | None = None) -> GridFunction:
    return reconstruct_resonance_detailed(td, f, chain).phi


# -- threshold hunting --------------------------------------------------------


def _stage_value(family, c, grid, rel_tol, target_stage):
    td = build_threshold(family(c), grid)
    chain = build_s_chain(td, rel_tol=rel_tol)
    if target_stage == 1:
        lam = chain.report["stage1"]["eigs_smallest"]
        return float(lam[0]), chain
    if chain.s1.dim == 0:
        raise ChainError("stage-2 search needs a family with nontrivial S1",
                         stage="S1")
    rep = chain.report["stage2"]
    sig = [abs(x) for x in rep["eigs_smallest"]]
    return float(min(sig) / max(rep["scale"], 1e-300)), chain


def tune_to_resonance(family, target_stage: int, c_range, grid: WeightedGrid,
                      rel_tol: float = 1e-7, floor: float | None = None,
                      scan_points: int = 21, bisect_steps: int = 48) -> float:
    """Locate c* where the decisive stage quantity crosses the detection floor.

    family: callable c -> PotentialSpec.  Stage 1 tracks the signed smallest
    eigenvalue of S0 T0 S0 (bisection on a sign change); stage 2 tracks
    sigma_min(T1)/scale and bisects the crossing of the floor (default:
    the chain rel_tol).  Raises SearchFailure with endpoint diagnostics if no
    crossing is bracketed.
    """
    if target_stage not in (1, 2):
        raise ValueError("target_stage must be 1 or 2")
    lo, hi = float(c_range[0]), float(c_range[1])
    floor = rel_tol if floor is None else floor
    cs = np.linspace(lo, hi, scan_points)

    def g(c):
        val, _ = _stage_value(family, c, grid, rel_tol, target_stage)
        if target_stage == 1:
            return val
        return math.log10(max(val, 1e-300)) - math.log10(floor)

    vals = [g(c) for c in cs]
    bracket = None
    for i in range(len(cs) - 1):
        if np.sign(vals[i]) != np.sign(vals[i + 1]) and vals[i] != 0:
            bracket = (cs[i], cs[i + 1], vals[i], vals[i + 1])
            break
    if bracket is None:
        raise SearchFailure(
            "no crossing of the stage quantity on the given range",
            diagnostics={"c": [float(c) for c in cs], "value": [float(x) for x in vals]},
        )
    a, b, fa, _ = bracket
    for _ in range(bisect_steps):
        mid = 0.5 * (a + b)
        fm = g(mid)
        if fm == 0:
            return float(mid)
        if np.sign(fm) == np.sign(fa):
            a, fa = mid, fm
        else:
            b = mid
        if abs(b - a) < 1e-12 * max(1.0, abs(b)):
            break
    return float(0.5 * (a + b))
