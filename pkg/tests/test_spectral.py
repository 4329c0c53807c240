import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pfc_degenerate.spectral import (Grid, SpectralField, apply_pfc_symbol, biharmonic, dealias,
                                     divergence, gradient, inner_product, laplacian, make_grid,
                                     pfc_symbol, spectral_inner_product)

from conftest import band_limited

seeds = st.integers(0, 2**32 - 1)
dims = st.sampled_from([(1, 32), (2, 16), (3, 8)])


def test_eigenvalues_1d_order():
    assert Grid(1, 8).eigenvalues.tolist() == [0, 1, 4, 9, 16, 9, 4, 1]


def test_2d_single_zero_mode():
    g = make_grid(2, 16)
    assert g.eigenvalues.size == 256
    assert np.count_nonzero(g.eigenvalues == 0) == 1


@pytest.mark.parametrize("dim,n", [(3, 7), (4, 8), (1, 6), (1, 2048), (0, 8)])
def test_bad_grid(dim, n):
    with pytest.raises(ValueError):
        Grid(dim, n)


def test_constant_has_only_zero_mode():
    g = Grid(2, 16)
    c = SpectralField(g, values=np.full(g.shape, 3.5)).coeffs
    assert c.flat[0] == pytest.approx(3.5)
    assert np.max(np.abs(c.ravel()[1:])) < 1e-15


def test_sine_two_modes():
    g = Grid(1, 32)
    x = g.coordinates()[0]
    full = np.fft.fft(np.sin(x)) / g.n
    nz = np.flatnonzero(np.abs(full) > 1e-13)
    assert sorted(g.wavenumbers[0][nz].tolist()) == [-1, 1]
    half = SpectralField(g, values=np.sin(x)).coeffs
    assert np.flatnonzero(np.abs(half) > 1e-13).tolist() == [1]


@given(seeds, dims)
def test_round_trip(seed, dn):
    g = Grid(*dn)
    u = np.random.default_rng(seed).standard_normal(g.shape)
    back = g.inverse(g.forward(u))
    assert np.max(np.abs(back - u)) <= 1e-12 * np.max(np.abs(u))


def test_size_mismatch():
    g = Grid(1, 16)
    with pytest.raises(ValueError):
        SpectralField(g, values=np.zeros(8))


def test_eigenfunctions():
    g = Grid(1, 32)
    x = g.coordinates()[0]
    s1 = SpectralField(g, values=np.sin(x))
    s2 = SpectralField(g, values=np.sin(2 * x))
    assert np.allclose(laplacian(s1).values, -np.sin(x), atol=1e-13)
    assert np.allclose(biharmonic(s2).values, 16 * np.sin(2 * x), atol=16e-12)


def test_constant_derivatives_vanish():
    g = Grid(2, 16)
    c = SpectralField(g, values=np.full(g.shape, 2.0))
    for d in gradient(c):
        assert np.all(d.values == 0.0)
    assert np.all(laplacian(c).values == 0.0)


@given(seeds, dims)
def test_div_grad_is_laplacian(seed, dn):
    # for fields without Nyquist content the identity is exact
    g = Grid(*dn)
    u = SpectralField(g, values=band_limited(np.random.default_rng(seed), g, g.n // 2 - 1))
    diff = divergence(gradient(u)).values - laplacian(u).values
    assert np.max(np.abs(diff)) <= 1e-12 * max(1.0, np.max(np.abs(laplacian(u).values)))


@given(seeds, dims)
def test_divergence_has_zero_mean(seed, dn):
    g = Grid(*dn)
    rng = np.random.default_rng(seed)
    v = [SpectralField(g, values=rng.standard_normal(g.shape)) for _ in range(g.dim)]
    assert divergence(v).coeffs.flat[0] == 0.0


@given(seeds, dims)
def test_parseval(seed, dn):
    g = Grid(*dn)
    u = SpectralField(g, values=np.random.default_rng(seed).standard_normal(g.shape))
    lhs = inner_product(u, u)
    rhs = spectral_inner_product(g, u.coeffs, u.coeffs)
    assert lhs == pytest.approx(rhs, rel=1e-10)


@given(seeds, dims)
def test_gradient_divergence_adjoint(seed, dn):
    g = Grid(*dn)
    rng = np.random.default_rng(seed)
    u = SpectralField(g, values=rng.standard_normal(g.shape))
    v = [SpectralField(g, values=rng.standard_normal(g.shape)) for _ in range(g.dim)]
    lhs = sum(inner_product(a, b) for a, b in zip(gradient(u), v))
    rhs = -inner_product(u, divergence(v))
    scale = math.sqrt(inner_product(u, u)) * sum(math.sqrt(inner_product(b, b)) for b in v) * g.n
    assert abs(lhs - rhs) <= 1e-10 * scale


@given(seeds, dims, st.floats(0.1, 5.0))
def test_pfc_symbol_matches_operators(seed, dn, kappa):
    g = Grid(*dn)
    u = SpectralField(g, values=np.random.default_rng(seed).standard_normal(g.shape))
    direct = kappa * (u + 2.0 * laplacian(u) + biharmonic(u))
    out = apply_pfc_symbol(u, kappa).values
    assert np.max(np.abs(out - direct.values)) <= 1e-10 * max(1.0, np.max(np.abs(out)))


def test_pfc_symbol_values():
    g = Grid(1, 16)
    sym = pfc_symbol(g, 2.0)
    assert sym[0] == 2.0 and sym[1] == 0.0 and sym[2] == 18.0
    assert np.all(sym >= 0)
    x = g.coordinates()[0]
    assert np.max(np.abs(apply_pfc_symbol(SpectralField(g, values=np.cos(x)), 1.0).values)) < 1e-12


@given(seeds)
def test_operators_keep_fields_real(seed):
    g = Grid(2, 16)
    u = SpectralField(g, values=np.random.default_rng(seed).standard_normal(g.shape))
    for out in (laplacian(u), biharmonic(u), apply_pfc_symbol(u, 1.0), dealias(u), *gradient(u)):
        full = np.fft.ifftn(np.fft.fftn(out.values))
        assert np.max(np.abs(full.imag)) <= 1e-12 * max(1.0, np.max(np.abs(out.values)))


def test_dealias_cutoff():
    g = Grid(1, 16)
    x = g.coordinates()[0]
    low = SpectralField(g, values=np.sin(x))
    assert np.allclose(dealias(low).values, low.values, atol=1e-15)
    high = SpectralField(g, values=np.cos((g.n // 2 - 1) * x))
    assert np.max(np.abs(dealias(high).coeffs[g.n // 2 - 1])) == 0.0
    assert np.max(np.abs(dealias(high).values)) < 1e-13
    edge = SpectralField(g, values=np.cos((g.n // 3) * x))
    assert np.allclose(dealias(edge).values, edge.values, atol=1e-14)


@given(seeds, dims)
def test_dealias_idempotent(seed, dn):
    g = Grid(*dn)
    u = SpectralField(g, values=np.random.default_rng(seed).standard_normal(g.shape))
    once = dealias(u)
    assert np.array_equal(dealias(once).coeffs, once.coeffs)


def test_inner_products():
    g = Grid(2, 16)
    one = SpectralField(g, values=np.ones(g.shape))
    assert inner_product(one, one) == pytest.approx((2 * math.pi) ** 2, rel=1e-14)
    g1 = Grid(1, 32)
    x = g1.coordinates()[0]
    s, c = SpectralField(g1, values=np.sin(x)), SpectralField(g1, values=np.cos(x))
    assert inner_product(s, s) == pytest.approx(math.pi, rel=1e-14)
    assert abs(inner_product(s, c)) < 1e-14


def test_inner_product_grid_mismatch():
    a = SpectralField(Grid(1, 16), values=np.ones(16))
    b = SpectralField(Grid(1, 32), values=np.ones(32))
    with pytest.raises(ValueError):
        inner_product(a, b)


def test_field_arithmetic_and_readonly():
    g = Grid(1, 16)
    x = g.coordinates()[0]
    u = SpectralField(g, values=1 + np.sin(x))
    assert u.mean() == pytest.approx(1.0)
    assert np.allclose((u + u - u * 2.0).values, 0.0)
    with pytest.raises(ValueError):
        u.values[0] = 5.0
