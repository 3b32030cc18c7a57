import numpy as np
import pytest

import bih4 as b
from bih4.errors import SingularityError
from bih4.resolvent import chain_stage_names


def test_m_conjugation_exact(gaussian_setup):
    _, td, _ = gaussian_setup
    plus = b.build_M(td, 0.4, b.PLUS)
    minus = b.build_M(td, 0.4, b.MINUS)
    assert np.abs(minus.mat - np.conj(plus.mat)).max() == 0.0


def test_m_rejects_bad_mu(gaussian_setup):
    _, td, _ = gaussian_setup
    with pytest.raises(ValueError):
        b.build_M(td, 0.0)


def test_m_large_mu_tends_to_u(gaussian_setup):
    # || M(mu) - U || = O(mu^-3)
    _, td, _ = gaussian_setup
    def dist(mu):
        return (b.build_M(td, mu) - td.U).norm()

    assert dist(16.0) / dist(8.0) == pytest.approx(1 / 8, rel=0.2)


def test_m_expansion_residual_order(gaussian_setup):
    # Lemma-3.1 structure: residual after four expansion terms is O(mu^3)
    _, td, _ = gaussian_setup
    a_t = b.coefficient("a", b.PLUS) * td.norm_v_l1

    def resid(mu):
        expn = ((a_t / mu**3) * td.P.projector.mat
                + (b.coefficient(-1, b.PLUS) / mu) * td.g_ops[-1].mat
                + td.T0.mat
                + b.coefficient(1, b.PLUS) * mu * td.g_ops[1].mat)
        from bih4.operators import Op
        return Op(td.grid, b.build_M(td, mu).mat - expn).norm()

    r1, r2 = resid(2e-2), resid(2e-3)
    assert r1 / r2 == pytest.approx(1000.0, rel=2.0)  # within factor 3 of mu^3


def test_inverse_residual(gaussian_setup):
    _, td, _ = gaussian_setup
    for mu in (1e-2, 1e-1, 1.0):
        m = b.build_M(td, mu)
        minv = b.invert_M(m)
        resid = np.linalg.norm(m.mat @ minv.mat - np.eye(td.grid.count), 2)
        assert resid < 1e-9 * np.linalg.norm(minv.tilde(), 2) * np.linalg.norm(m.tilde(), 2)


def test_cascade_matches_direct(gaussian_setup):
    _, td, chain = gaussian_setup
    for mu in (1e-2, 1e-1):
        m = b.build_M(td, mu)
        direct = b.invert_M(m, "direct")
        casc = b.invert_M(m, "feshbach_chain", td=td, chain=chain, mu=mu)
        rel = (np.linalg.norm(casc.mat - direct.mat, 2)
               / np.linalg.norm(direct.mat, 2))
        assert rel < 1e-8


def test_cascade_stage_count(gaussian_setup, resonance_setup):
    _, _, chain_reg = gaussian_setup
    assert chain_stage_names(chain_reg) == ["M1", "M2"]
    _, _, chain_res = resonance_setup
    assert chain_stage_names(chain_res) == ["M1", "M2", "M3"]


def test_cascade_needs_context(gaussian_setup):
    _, td, _ = gaussian_setup
    m = b.build_M(td, 0.1)
    with pytest.raises(ValueError):
        b.invert_M(m, "feshbach_chain")
    with pytest.raises(ValueError):
        b.invert_M(m, "cholesky")


def test_singularity_fit_regular(gaussian_setup):
    _, td, _ = gaussian_setup
    fit = b.singularity_order(td, (1e-4, 1e-1), 12)
    assert abs(fit.exponent) < 0.1
    assert fit.used.sum() == 12


def test_singularity_fit_cond_cap():
    pot = b.resonance_slope_family(0.0)
    from bih4.potentials import grid_for_potential

    td = b.build_threshold(pot, grid_for_potential(pot, 256))
    fit = b.singularity_order(td, (1e-2, 2e-1), 12)
    assert fit.warnings  # low samples excluded by the condition cap
    assert fit.exponent == pytest.approx(-3.0, abs=0.2)
    with pytest.raises(SingularityError):
        b.singularity_order(td, (1e-4, 3e-4), 4)  # whole window above the cap


def test_rv_kernel_symmetry_and_conjugation(gaussian_setup):
    _, td, _ = gaussian_setup
    rv = b.rv_kernel(td, 0.3, b.PLUS)
    k = rv.kernel_entries()
    assert np.abs(k - k.T).max() < 1e-9 * np.abs(k).max()
    rv_m = b.rv_kernel(td, 0.3, b.MINUS)
    assert np.abs(rv_m.mat - np.conj(rv.mat)).max() < 1e-12 * np.abs(rv.mat).max()


def test_rv_kernel_free_limit(grid256):
    # as the coupling goes to zero the correction vanishes linearly in amp
    from bih4.operators import discretize_kernel

    mu = 0.5
    r0 = discretize_kernel(grid256, lambda a, c: b.eval_R0(mu, a, c),
                           diagonal_split=True, symmetrize=True)
    rels = []
    for amp in (1e-4, 1e-6):
        td = b.build_threshold(b.gaussian(amp), grid256)
        rv = b.rv_kernel(td, mu)
        rels.append(np.linalg.norm(rv.mat - r0.mat, 2) / np.linalg.norm(r0.mat, 2))
    assert rels[0] < 20 * 1e-4 and rels[1] < 20 * 1e-6
    assert 30 < rels[0] / rels[1] < 300  # linear scaling in the coupling


def test_rv_correction_decays_fast(gaussian_setup):
    # sup|R_V - R0| falls off faster than mu^-3 past mu = 5
    from bih4.operators import discretize_kernel

    _, td, _ = gaussian_setup

    def corr_sup(mu):
        r0 = discretize_kernel(td.grid, lambda a, c: b.eval_R0(mu, a, c),
                               diagonal_split=True, symmetrize=True)
        rv = b.rv_kernel(td, mu)
        return np.abs(rv.kernel_entries() - r0.kernel_entries()).max()

    assert corr_sup(10.0) / corr_sup(5.0) < 2.0**-3
