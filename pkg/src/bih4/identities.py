"""Aggregated exact-identity battery behind `bih4 identities`.

Each check returns (value, tolerance, pass); the battery is deterministic for
a fixed seed.  An optional injected coefficient error provides the negative
control: it perturbs the mu^1 expansion coefficient and must be caught by the
expansion-remainder check.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import GridFunction, build_grid, inner_product
from .kernels import MINUS, PLUS, coefficient, eval_Gk, eval_R0, free_propagator, \
    taylor_kernel, taylor_split_check
from .operators import Op, feshbach_invert, projector_onto, subspace_from_columns
from .oscillatory import build_partition, lemma21_bound_check, low_sum_check
from .potentials import bump, gaussian, make_remark16_resonance
from .propagator import stone_free_kernel
from .resolvent import build_M, invert_M
from .resonance import build_s_chain, build_threshold, d0_identity_value, \
    table1_residuals


def _check(value, tol, larger_is_fail=True):
    ok = value <= tol if larger_is_fail else value >= tol
    return {"value": float(value), "tolerance": float(tol), "pass": bool(ok)}


def _standard_setups(grid_n=256, grid_l=12.0, rank_tol=1e-7):
    grid = build_grid(grid_l, grid_n)
    out = []
    for pot in (gaussian(0.4), bump(0.8, 2.0), make_remark16_resonance(1.0, 1.0)):
        grid_p = grid if pot.form != "remark16_resonance" else build_grid(8.0, grid_n)
        td = build_threshold(pot, grid_p)
        chain = build_s_chain(td, rel_tol=rank_tol)
        out.append((pot.form, td, chain))
    return out


def run_identities(seed: int = 0, grid_n: int = 256, grid_l: float = 12.0,
                   rank_tol: float = 1e-7, inject_error: str = "none",
                   n_feshbach: int = 20, quick: bool = False) -> dict:
    """Run the battery; returns {check_name: {value, tolerance, pass}}."""
    rng = np.random.default_rng(seed)
    results = {}

    setups = _standard_setups(grid_n, grid_l, rank_tol)

    # <D0 v1, v1> = -1/2 for every admissible potential
    worst = 0.0
    for name, td, chain in setups:
        val = abs(d0_identity_value(td, chain) + 0.5)
        results[f"d0_identity:{name}"] = _check(val, 1e-8)
        worst = max(worst, val)
    results["d0_identity:max"] = _check(worst, 1e-8)

    # Table-1 orthogonality residuals (normalized by ||T0||)
    worst = 0.0
    for name, td, chain in setups:
        res = table1_residuals(td, chain)
        worst = max(worst, max(res.values()))
    results["table1_residuals:max"] = _check(worst, 1e-8)

    # Feshbach inversion vs direct dense inverse on random instances
    grid50 = build_grid(1.0, 56, "composite_gauss")
    n = grid50.count
    worst = 0.0
    for _ in range(n_feshbach):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a += 3.0 * np.eye(n)
        op = Op(grid50, a, "plain")
        cols = rng.standard_normal((n, 10)) + 1j * rng.standard_normal((n, 10))
        sw = np.sqrt(grid50.weights)
        q, _ = np.linalg.qr(sw[:, None] * cols)
        sub = subspace_from_columns(grid50, q / sw[:, None])
        got = feshbach_invert(op, sub)
        want = np.linalg.inv(a)
        worst = max(worst, np.linalg.norm(got.mat - want, 2) / np.linalg.norm(want, 2))
    results["feshbach_vs_direct"] = _check(worst, 1e-10)

    # Stone-side free kernel vs rotated-contour Fourier representation
    pts = [(0.0, 1.0), (1.5, 1.0), (4.0, 2.0), (0.7, 5.0), (2.5, 25.0)]
    if not quick:
        pts += [(6.0, 1.0), (3.0, 100.0), (0.0, 100.0), (1.0, 10.0)]
    worst = 0.0
    for x, t in pts:
        ref = free_propagator(x, t)
        val = stone_free_kernel(x, t)
        worst = max(worst, abs(val - ref) / abs(ref))
    results["stone_vs_fourier"] = _check(worst, 1e-6)

    # Lemma-2.1 block sweep: per-t supremum over (N, psi) has no growth trend
    ts = (1.0, 10.0, 1e3)
    ns = range(-6, 3) if not quick else range(-4, 2)
    sups = []
    for t in ts:
        vals = [lemma21_bound_check(t, N, psi, rel_tol=1e-6)
                for N in ns
                for psi in (0.0, 2.0**-N, 8 * t * 2.0 ** (4 * N) / 2.0**N)]
        sups.append(max(vals))
    results["lemma21_spread"] = _check(max(sups) / min(sups), 50.0)
    results["lemma21_sup"] = {"value": float(max(sups)), "tolerance": None,
                              "pass": True}

    # low-energy dyadic sum: uniform in t within factor 2
    worst = 0.0
    for alpha in (0.0, 0.5):
        sums = [low_sum_check(t, alpha) for t in (1.0, 1e2, 1e4)]
        worst = max(worst, max(sums) / min(sums))
    results["low_sum_uniformity"] = _check(worst, 2.0)

    # Taylor-split identities, random draws per order
    n_draws = 20 if quick else 100
    worst = 0.0
    for order in (1, 2, 3):
        for _ in range(n_draws):
            mu, x, y = rng.uniform(0.05, 1.0, 3)
            fk = taylor_kernel(PLUS, corrected=(order == 3))
            worst = max(worst, taylor_split_check(fk, mu, x, y, order))
    results["taylor_split_max"] = _check(worst, 1e-10)

    # partition of unity
    part = build_partition(-10, 10)
    ss = np.geomspace(2.0**-8, 2.0**8, 101)
    resid = float(np.abs(part.partition_sum(ss) - 1).max())
    results["partition_of_unity"] = _check(resid, 1e-12)

    # expansion remainder vs next-term proxy (negative-control hook)
    inject = 1.05 if inject_error == "a1-coefficient" else 1.0
    worst = 0.0
    for mu in (1e-2, 3e-3):
        r = 1.0
        partial = (coefficient("a", PLUS) / mu**3
                   + coefficient(-1, PLUS) * eval_Gk(-1, r, 0.0) / mu
                   + eval_Gk(0, r, 0.0)
                   + inject * coefficient(1, PLUS) * mu * eval_Gk(1, r, 0.0))
        rem = eval_R0(mu, r, 0.0, PLUS) - partial
        bound = 2 * abs(coefficient(3, PLUS)) * mu**3 * r**6
        worst = max(worst, abs(rem) / bound)
    results["expansion_remainder_ratio"] = _check(worst, 1.0)

    # conjugation symmetry of M
    _, td, _ = setups[0]
    m_plus = build_M(td, 0.5, PLUS)
    m_minus = build_M(td, 0.5, MINUS)
    resid = float(np.abs(m_minus.mat - np.conj(m_plus.mat)).max()
                  / np.abs(m_plus.mat).max())
    results["m_conjugation"] = _check(resid, 1e-14)

    # direct vs cascade inversion of M at mu = 1e-2
    name, td, chain = setups[0]
    m = build_M(td, 1e-2, PLUS)
    direct = invert_M(m, "direct")
    cascade = invert_M(m, "feshbach_chain", td=td, chain=chain, mu=1e-2)
    rel = (np.linalg.norm(cascade.mat - direct.mat, 2)
           / np.linalg.norm(direct.mat, 2))
    results["cascade_vs_direct"] = _check(rel, 1e-8)

    results["all_pass"] = {"value": 0.0, "tolerance": None,
                           "pass": all(v["pass"] for v in results.values()
                                       if isinstance(v, dict) and v.get("pass") is not None)}
    return results
