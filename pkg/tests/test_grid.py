import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from thermolens import Grid, InvalidParameterError
from thermolens.grid import NORM_KINDS

from conftest import random_field


def test_spacing_definition():
    g = Grid((2.0, 3.0), (9, 14))
    assert g.h == (0.2, 0.2)
    assert g.shape == (9, 14)
    assert g.dims == 2


@pytest.mark.parametrize("extents,n", [((1.0,), (2,)), ((1.0,), (0,)), ((-1.0,), (5,)), ((1, 1, 1), (4, 4, 4))])
def test_invalid_grids(extents, n):
    with pytest.raises(InvalidParameterError):
        Grid(extents, n)


def test_laplacian_of_zero(grid2d):
    assert np.all(grid2d.laplacian(grid2d.zeros()) == 0)


def test_sine_mode_is_discrete_eigenfield_1d(grid1d):
    f = grid1d.sine_mode((1,))
    lam = -(2 / grid1d.h[0] ** 2) * (1 - math.cos(math.pi * grid1d.h[0] / 1.0))
    np.testing.assert_allclose(grid1d.laplacian(f), lam * f, atol=1e-12 * abs(lam))
    # and it approximates the continuum eigenvalue to O(h^2)
    assert abs(lam + math.pi**2) < math.pi**4 * grid1d.h[0] ** 2 / 12 * 1.01


def test_sine_mode_is_discrete_eigenfield_2d(grid2d):
    modes = (2, 3)
    f = grid2d.sine_mode(modes)
    lam = sum(
        (2 / h**2) * (1 - math.cos(m * math.pi * h / L))
        for m, h, L in zip(modes, grid2d.h, grid2d.extents)
    )
    assert grid2d.mode_eigenvalue(modes) == pytest.approx(lam, rel=1e-14)
    np.testing.assert_allclose(grid2d.laplacian(f), -lam * f, atol=1e-12 * lam)


def test_laplacian_matrix_matches_stencil(grid2d):
    f = random_field(grid2d, 3)
    np.testing.assert_allclose(
        (grid2d.laplacian_matrix @ f.ravel()).reshape(grid2d.shape), grid2d.laplacian(f), rtol=1e-13, atol=1e-10
    )


@pytest.mark.parametrize("kind", NORM_KINDS)
def test_norms_of_zero(grid2d, kind):
    assert grid2d.norm(grid2d.zeros(), kind) == 0.0


def test_norm_of_constant_one():
    g = Grid((1.0,), (999,))
    # rectangle rule over interior nodes misses one cell
    assert g.norm(np.ones(g.shape), "L2") == pytest.approx(math.sqrt(1 - g.h[0]), rel=1e-14)


def test_h1semi_of_sine():
    g = Grid((1.0,), (999,))
    assert g.norm(g.sine_mode((1,)), "H1semi") == pytest.approx(math.pi / math.sqrt(2), rel=1e-5)


def test_unknown_norm(grid1d):
    with pytest.raises(InvalidParameterError):
        grid1d.norm(grid1d.zeros(), "H5")


def test_weighted_l2(grid1d):
    f = random_field(grid1d, 1)
    assert grid1d.weighted_l2(f, np.ones(grid1d.shape)) == pytest.approx(grid1d.norm(f, "L2"), rel=1e-14)
    assert grid1d.weighted_l2(grid1d.zeros(), np.ones(grid1d.shape)) == 0
    g = Grid((1.0,), (9999,))
    assert g.weighted_l2(np.ones(g.shape), np.full(g.shape, 4.0)) == pytest.approx(2.0, rel=1e-4)
    with pytest.raises(InvalidParameterError):
        grid1d.weighted_l2(f, -np.ones(grid1d.shape))


def test_shape_mismatch(grid1d):
    with pytest.raises(InvalidParameterError):
        grid1d.laplacian(np.zeros(5))


seeds = st.integers(0, 2**32 - 1)


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_laplacian_symmetric_negative_definite(seed):
    for g in (Grid((1.0,), (17,)), Grid((1.0, 0.5), (11, 7))):
        rng = np.random.default_rng(seed)
        u, v = rng.standard_normal(g.shape), rng.standard_normal(g.shape)
        a, b = g.inner(g.laplacian(u), v), g.inner(u, g.laplacian(v))
        assert a == pytest.approx(b, rel=1e-12, abs=1e-12 * g.lp(u, 2) * g.lp(v, 2) / min(g.h) ** 2)
        assert g.inner(g.laplacian(u), u) < 0


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_green_identity(seed):
    for g in (Grid((1.0,), (17,)), Grid((1.0, 0.5), (11, 7))):
        u = np.random.default_rng(seed).standard_normal(g.shape)
        assert g.inner(g.laplacian(u), u) == pytest.approx(-g.norm(u, "H1semi") ** 2, rel=1e-12)


@given(seeds, st.floats(-1e3, 1e3).filter(lambda c: c != 0))
@settings(max_examples=25, deadline=None)
def test_norms_scale_with_absolute_value(seed, c):
    g = Grid((1.0, 0.5), (9, 7))
    u = np.random.default_rng(seed).standard_normal(g.shape)
    for kind in NORM_KINDS:
        assert g.norm(c * u, kind) == pytest.approx(abs(c) * g.norm(u, kind), rel=1e-12)


def test_gradient_edge_ghost_keeps_constants_flat(grid2d):
    comps = grid2d.gradient(np.full(grid2d.shape, 3.0), ghost="edge")
    assert all(np.all(c == 0) for c in comps)
    comps = grid2d.gradient(np.full(grid2d.shape, 3.0))
    assert any(np.any(c != 0) for c in comps)
    with pytest.raises(InvalidParameterError):
        grid2d.gradient(grid2d.zeros(), ghost="mirror")
