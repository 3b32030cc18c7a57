import math

import numpy as np
import pytest

import bih4 as b
from bih4.potentials import grid_for_potential


def _fd4(f, x, h=1e-2):
    """Sixth-order central finite difference for the fourth derivative."""
    c = np.array([-1, 12, -39, 56, -39, 12, -1]) / (6 * h**4)
    offs = np.arange(-3, 4)
    return sum(ck * f(x + k * h) for ck, k in zip(c, offs))


def test_resonance_potential_supported_in_unit_interval():
    pot = b.make_remark16_resonance(1.0, 1.0)
    x = np.linspace(1.0 + 1e-12, 30, 100)
    assert np.all(pot.evaluator(x) == 0)
    assert np.all(pot.evaluator(-x) == 0)


def test_resonance_potential_pde_relation():
    pot = b.make_remark16_resonance(0.7, 1.3)
    x = np.linspace(-2, 2, 801)
    lhs = pot.evaluator(x) * pot.phi(x)
    rhs = -pot.phi4(x)
    assert np.abs(lhs - rhs).max() < 1e-10


def test_resonance_phi_solves_equation_weakly():
    # <phi, g''''> + <V phi, g> = 0 against smooth decaying test functions
    pot = b.make_remark16_resonance(1.0, 1.0)
    grid = grid_for_potential(pot, 512)
    x, w = grid.nodes, grid.weights
    phi = pot.phi(x)
    V = pot.evaluator(x)
    for a in (-1.5, -0.4, 0.0, 0.8, 2.0):
        g = np.exp(-((x - a) ** 2))
        g4 = (16 * (x - a) ** 4 - 48 * (x - a) ** 2 + 12) * g
        resid = np.sum(w * phi * g4) + np.sum(w * V * phi * g)
        assert abs(resid) < 1e-8


def test_resonance_phi4_matches_finite_differences():
    pot = b.make_remark16_resonance(1.0, 1.0, interior_bump=0.3)
    x = np.linspace(0.05, 0.9, 7)  # stay clear of the glue points
    fd = _fd4(pot.phi, x, h=5e-3)
    assert np.abs(fd - pot.phi4(x)).max() < 1e-5


def test_resonance_construction_guards():
    with pytest.raises(ValueError):
        b.make_remark16_resonance(-0.5, 1.0)
    with pytest.raises(ValueError):
        b.make_remark16_resonance(1.0, 0.0)
    with pytest.raises(ValueError):
        b.make_remark16_resonance(0.0, 1.0)  # c = 0 needs an interior bump
    b.make_remark16_resonance(0.0, 1.0, interior_bump=0.5)


def test_eigenvalue_potential_guards_and_decay():
    with pytest.raises(ValueError):
        b.make_remark16_eigenvalue(0.2)  # phi not square integrable
    pot = b.make_remark16_eigenvalue(0.3)
    assert pot.decay_beta == 4.0
    x = np.linspace(1, 400, 4000)
    assert np.abs(pot.evaluator(x) * (1 + x) ** 4).max() < 200


def test_eigenvalue_potential_pde_relation():
    pot = b.make_remark16_eigenvalue(0.3)
    x = np.linspace(-8, 8, 1601)
    lhs = pot.evaluator(x) * pot.phi(x)
    assert np.abs(lhs + pot.phi4(x)).max() < 1e-12
    # finite-difference oracle (truncation-limited at ~1e-6 for this stencil)
    fd = _fd4(pot.phi, np.array([0.0, 0.7, 2.3]), h=1e-2)
    assert np.abs(fd - pot.phi4(np.array([0.0, 0.7, 2.3]))).max() < 5e-6


def test_decay_report_flags():
    g512 = b.build_grid(12.0, 512)
    rep = b.decay_report(b.gaussian(0.3), g512)
    assert all(rep["thresholds_met"].values())

    pe = b.make_remark16_eigenvalue(0.3)
    rep = b.decay_report(pe, grid_for_potential(pe, 512))
    assert rep["beta_fit"] == pytest.approx(4.0, abs=0.6)
    assert not any(rep["thresholds_met"].values())

    p14 = b.power_law(0.5, 14.0)
    rep = b.decay_report(p14, b.build_grid(30.0, 512))
    assert rep["thresholds_met"]["beta>13"]
    assert not rep["thresholds_met"]["beta>17"]


def test_potential_parity_and_scaling():
    pot = b.make_remark16_resonance(1.0, 1.0)
    x = np.linspace(0, 3, 50)
    assert np.allclose(pot.evaluator(x), pot.evaluator(-x))
    doubled = b.scaled(pot, 2.0)
    assert np.allclose(doubled.evaluator(x), 2 * pot.evaluator(x))
    assert doubled.breakpoints == pot.breakpoints


def test_file_potential_roundtrip(tmp_path):
    xs = np.linspace(-5, 5, 201)
    vs = 0.3 * np.exp(-xs**2)
    path = tmp_path / "V.dat"
    np.savetxt(path, np.column_stack([xs, vs]))
    pot = b.load_potential_file(path)
    probe = np.linspace(-4.9, 4.9, 57)
    assert np.abs(pot.evaluator(probe) - 0.3 * np.exp(-probe**2)).max() < 1e-6
    assert pot.evaluator(np.array([7.0, -8.0])) == pytest.approx([0.0, 0.0])


def test_file_potential_bad_format(tmp_path):
    path = tmp_path / "bad.dat"
    path.write_text("1.0\n2.0\n")
    with pytest.raises(ValueError):
        b.load_potential_file(path)


def test_bump_is_compact_and_smooth():
    pot = b.bump(0.5, 2.0)
    assert pot.evaluator(np.array([2.0001, -3.0])) == pytest.approx([0.0, 0.0])
    assert pot.evaluator(np.array([0.0]))[0] == pytest.approx(0.5 * math.exp(-1))


def test_breakpoints_are_v_kinks():
    pot = b.resonance_slope_family(0.5)
    for bp in pot.breakpoints[:-1]:
        left = pot.evaluator(np.array([bp - 1e-6]))[0]
        right = pot.evaluator(np.array([bp + 1e-6]))[0]
        assert left * right <= 0  # V changes sign at interior breakpoints
