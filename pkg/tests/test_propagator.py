import math

import numpy as np
import pytest

import bih4 as b
from bih4.grid import from_callable
from bih4.kernels import free_kernel_peak
from bih4.propagator import (StoneEvaluator, StoneValue, admissible_pair,
                             conservation_check, decay_fit, evolve,
                             free_evolve_values, stone_free_kernel, stone_kernel,
                             strichartz_norm)


@pytest.fixture(scope="module")
def phi0():
    g = b.build_grid(12.0, 256)
    return from_callable(g, lambda x: np.exp(-x**2))


def test_stone_free_matches_fourier():
    for x, t in ((0.0, 1.0), (1.5, 2.0), (3.0, 10.0), (0.7, 50.0)):
        val = stone_free_kernel(x, t)
        ref = b.free_propagator(x, t)
        assert abs(val - ref) / abs(ref) < 1e-6


def test_stone_kernel_free_api():
    val = stone_kernel(None, 2.0, 1.0, 0.3)
    ref = b.free_propagator(0.7, 2.0)
    assert abs(val - ref) / abs(ref) < 1e-6
    assert isinstance(val, StoneValue)
    with pytest.raises(ValueError):
        stone_kernel(None, 0.0, 1.0, 0.0)


def test_stone_free_depends_on_difference_only():
    a = stone_free_kernel(2.5 - 1.0, 3.0)
    c = stone_free_kernel(-1.5, 3.0)
    assert a == pytest.approx(c, rel=1e-12)


def test_free_peak_time_scaling():
    for t in (1.0, 16.0, 256.0):
        val = abs(b.free_propagator(0.0, t)) * t**0.25
        assert val == pytest.approx(free_kernel_peak(0.0), abs=1e-5)


def test_free_decay_slopes_all_alpha():
    for alpha in (0.0, 0.25, 0.5):
        rep = decay_fit(None, (10.0, 1e3), 6, alpha=alpha)
        assert rep.slope == pytest.approx(-(1 + alpha) / 4, abs=0.01)


def test_free_slope_monotone_in_alpha():
    slopes = [decay_fit(None, (10.0, 1e3), 5, alpha=a).slope
              for a in (0.0, 0.25, 0.5)]
    assert slopes[0] > slopes[1] > slopes[2]


def test_stone_evaluator_kernel_and_tail(gaussian_setup):
    _, td, _ = gaussian_setup
    ev = StoneEvaluator(td, 0.0, x_points=np.linspace(-4, 4, 7),
                        y_points=np.linspace(-4, 4, 7))
    kern, free, corr, tail = ev.kernel(2.0)
    assert kern.shape == (7, 7)
    assert tail < 1e-3
    # kernel symmetry in (x, y) for symmetric lattices
    assert np.abs(kern - kern.T).max() < 1e-6 * np.abs(kern).max()


def test_free_conservation(phi0):
    assert conservation_check(None, phi0, 1.0) == pytest.approx(1.0, abs=0.01)
    assert conservation_check(None, phi0, 10.0) == pytest.approx(1.0, abs=0.02)


def test_admissibility():
    assert admissible_pair(np.inf, 2.0)
    assert admissible_pair(8.0, np.inf)
    assert admissible_pair(16.0, 4.0)
    assert not admissible_pair(2.0, np.inf)  # 1/r would be negative
    assert not admissible_pair(1.5, 2.0)


def test_strichartz_rejects_inadmissible(phi0):
    with pytest.raises(ValueError):
        strichartz_norm(None, phi0, 2.0, np.inf, (0.1, 0.5))
    with pytest.raises(ValueError):
        strichartz_norm(None, phi0, np.inf, 2.0, (0.5, 0.1))


def test_free_strichartz_inf2(phi0):
    ratio = strichartz_norm(None, phi0, np.inf, 2.0, (0.1, 0.6), nt=6)
    assert ratio == pytest.approx(1.0, abs=0.02)


def test_evolve_matches_initial_data_smallt(phi0):
    grid, vals = evolve(None, phi0, 1e-6)
    inside = np.abs(grid.nodes) < 10
    want = np.exp(-grid.nodes[inside] ** 2)
    assert np.abs(vals[inside] - want).max() < 1e-4


def test_truncated_mu_max_breaks_unitarity():
    # deliberately tiny mu_max discards spectral mass: the diagnostic drops
    # (strong repulsive barrier: no bound states, so P_ac is the identity)
    pot = b.gaussian(3.0, 1.0)
    g = b.build_grid(12.0, 192)
    td = b.build_threshold(pot, g)
    phi = from_callable(g, lambda x: np.exp(-x**2))
    good = conservation_check(td, phi, 0.5)
    bad = conservation_check(td, phi, 0.5, mu_max=1.0)
    assert 0.9 <= good <= 1.1
    assert bad < 0.9


def test_envelope_bound_lattice():
    xs = np.linspace(-20, 20, 21)
    stats = []
    for t in np.geomspace(1.0, 1e3, 8):
        vals = np.abs(np.asarray(b.free_propagator(xs, float(t))))
        stats.extend(vals * t**0.25 * (1 + np.abs(xs) * t**-0.25) ** (1 / 3))
    stats = np.asarray(stats)
    assert stats.max() / stats.min() < 10
