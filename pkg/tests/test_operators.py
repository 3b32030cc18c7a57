import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import bih4 as b
from bih4.errors import GridMismatchError, RankDeficiencyError, SingularityError
from bih4.grid import GridFunction, from_callable, inner_product, norm
from bih4.operators import (Op, complement, full_space, identity, lift,
                            multiplier, restrict, subspace_from_columns)


@pytest.fixture(scope="module")
def grid():
    return b.build_grid(6.0, 128)


def _random_gf(grid, rng):
    return GridFunction(grid, rng.standard_normal(grid.count)
                        + 1j * rng.standard_normal(grid.count))


def test_zero_kernel(grid):
    op = b.discretize_kernel(grid, lambda x, y: np.zeros_like(x + y))
    assert np.all(op.mat == 0)


def test_rank_one_kernel_action(grid):
    v = from_callable(grid, lambda x: np.exp(-x**2 / 2))
    op = b.discretize_kernel(grid, lambda x, y: np.exp(-x**2 / 2) * np.exp(-y**2 / 2))
    rng = np.random.default_rng(0)
    f = _random_gf(grid, rng)
    got = op.apply(f)
    want = inner_product(f, v) * v.values
    assert np.allclose(got.values, want, atol=1e-12)


def test_compose_identity_and_adjoint_involution(grid):
    rng = np.random.default_rng(1)
    a = Op(grid, rng.standard_normal((grid.count,) * 2), "plain")
    assert np.allclose((identity(grid) @ a).mat, a.mat)
    assert np.allclose(a.adjoint().adjoint().mat, a.mat)


def test_adjoint_pairing(grid):
    rng = np.random.default_rng(2)
    a = Op(grid, rng.standard_normal((grid.count,) * 2)
           + 1j * rng.standard_normal((grid.count,) * 2), "plain")
    f, g = _random_gf(grid, rng), _random_gf(grid, rng)
    lhs = inner_product(a.apply(f), g)
    rhs = inner_product(f, a.adjoint().apply(g))
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


def test_grid_mismatch_raises(grid):
    other = b.build_grid(5.0, 128)
    a = identity(grid)
    c = identity(other)
    with pytest.raises(GridMismatchError):
        _ = a @ c


def test_g0_is_fundamental_solution_of_biharmonic(grid):
    # apply the |x-y|^3/12 kernel to g'''' for a gaussian g; recover g
    g0 = b.discretize_kernel(grid, lambda x, y: b.eval_Gk(0, x, y),
                             diagonal_split=True, symmetrize=True)

    def g4(x):
        return (16 * x**4 - 48 * x**2 + 12) * np.exp(-(x**2))

    got = g0.apply(from_callable(grid, g4))
    want = np.exp(-grid.nodes**2)
    assert np.abs(got.values - want).max() < 1e-6


def test_projector_span_v(grid):
    v = from_callable(grid, lambda x: np.exp(-x**2 / 2))
    sub = b.projector_onto([v])
    p = sub.projector
    assert norm(p.apply(v) - v) < 1e-12
    f = from_callable(grid, lambda x: x * np.exp(-x**2 / 2))  # odd, orthogonal to v
    assert norm(p.apply(f)) < 1e-12
    q_ortho = complement(grid, [v])
    assert norm(q_ortho.projector.apply(v)) < 1e-12


def test_projector_idempotent_self_adjoint(grid):
    v = from_callable(grid, lambda x: np.exp(-x**2 / 2))
    xv = from_callable(grid, lambda x: x * np.exp(-x**2 / 2))
    p = b.projector_onto([v, xv]).projector
    assert np.linalg.norm((p @ p).mat - p.mat, 2) < 1e-10
    assert p.is_self_adjoint(1e-10)


def test_projector_complement_annihilates_span(grid):
    v = from_callable(grid, lambda x: np.exp(-x**2 / 2))
    xv = from_callable(grid, lambda x: x * np.exp(-x**2 / 2))
    comp = complement(grid, [v, xv])
    for f in (v, xv):
        assert norm(comp.projector.apply(f)) < 1e-11
    assert comp.dim == grid.count - 2


def test_projector_rank_deficiency(grid):
    v = from_callable(grid, lambda x: np.exp(-x**2 / 2))
    with pytest.raises(RankDeficiencyError):
        b.projector_onto([v, 2.0 * v])


def test_nullspace_diagonal_example(grid):
    sub = full_space(grid)
    diag = np.ones(grid.count)
    diag[-1] = 1e-16
    op = multiplier(grid, diag)
    null = b.nullspace(op, sub, 1e-8)
    assert null.dim == 1


def test_nullspace_well_conditioned_empty(grid):
    rng = np.random.default_rng(3)
    a = Op(grid, rng.standard_normal((grid.count,) * 2) + 4 * np.eye(grid.count),
           "plain")
    null = b.nullspace(a, full_space(grid), 1e-10)
    assert null.dim == 0


def test_nullspace_leak_detection(grid):
    v = from_callable(grid, lambda x: np.exp(-x**2 / 2))
    sub = complement(grid, [v])
    shift = multiplier(grid, np.exp(-grid.nodes**2 / 2))  # maps out of sub
    with pytest.raises(GridMismatchError):
        b.nullspace(shift, sub, 1e-8)


def test_feshbach_scalar_example(grid):
    # A = I with S the full space: B = I/2 and the formula returns I
    a = identity(grid)
    sub = full_space(grid)
    inv = b.feshbach_invert(a, sub)
    assert np.linalg.norm(inv.mat - np.eye(grid.count), 2) < 1e-12


def test_feshbach_matches_direct_inverse():
    grid = b.build_grid(1.0, 50, "trapezoid")
    rng = np.random.default_rng(7)
    n = grid.count
    sw = np.sqrt(grid.weights)
    for _ in range(10):
        a = Op(grid, rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
               + 3 * np.eye(n), "plain")
        cols = rng.standard_normal((n, 10)) + 1j * rng.standard_normal((n, 10))
        q, _ = np.linalg.qr(sw[:, None] * cols)
        sub = subspace_from_columns(grid, q / sw[:, None])
        got = b.feshbach_invert(a, sub)
        want = np.linalg.inv(a.mat)
        assert (np.linalg.norm(got.mat - want, 2)
                <= 1e-10 * np.linalg.norm(want, 2))


def test_feshbach_singular_raises(grid):
    # A singular with its kernel inside the S-range: B becomes singular
    v = from_callable(grid, lambda x: np.exp(-x**2 / 2))
    sub = b.projector_onto([v])
    p = sub.projector.mat
    a = Op(grid, np.eye(grid.count) - p, "plain")  # annihilates span{v}
    with pytest.raises(SingularityError) as info:
        b.feshbach_invert(a, sub)
    assert info.value.stage is not None


def test_restrict_and_lift_roundtrip(grid):
    v = from_callable(grid, lambda x: np.exp(-x**2 / 2))
    xv = from_callable(grid, lambda x: x * np.exp(-x**2 / 2))
    sub = b.projector_onto([v, xv])
    rng = np.random.default_rng(11)
    a = Op(grid, rng.standard_normal((grid.count,) * 2), "plain")
    small = restrict(a, sub)
    lifted = lift(sub, small)
    small2 = restrict(lifted, sub)
    assert np.allclose(small, small2, atol=1e-12)


def test_operator_norm_is_weighted(grid):
    mult = multiplier(grid, 3.0 * np.ones(grid.count))
    assert mult.norm() == pytest.approx(3.0, rel=1e-12)
