import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pfc_degenerate.physics import (MobilityModel, PotentialSpec, chemical_potential,
                                    constant_state_energy, entropy, f0, free_energy, mobility,
                                    potential_eval)
from pfc_degenerate.spectral import Grid, SpectralField, inner_product
from pfc_degenerate.verification import variational_errors

from conftest import band_limited

QUARTIC = PotentialSpec("quartic_example", epsilon=0.2)


def test_quartic_values():
    assert potential_eval(QUARTIC, 1.0) == 0.0
    assert potential_eval(QUARTIC, 1.0, 1) == 0.0
    assert potential_eval(QUARTIC, 0.0) == pytest.approx(0.15, abs=1e-15)
    assert potential_eval(QUARTIC, 1.0, 2) == pytest.approx(-0.2)


def test_f0_at_one():
    assert f0(1.0) == -1.0


def test_derivation_form_closed_form():
    kappa, gamma = 1.3, 0.7
    spec = PotentialSpec("derivation_form", gamma=gamma, kappa=kappa)
    z = np.linspace(-3, 4, 41)
    s = z - 1
    expect = -1 + s**2 / 2 - s**3 / 6 + s**4 / 12 + kappa * gamma * s**2 / 2 - kappa * z**2 / 2
    assert np.allclose(potential_eval(spec, z), expect, rtol=1e-14, atol=1e-13)


@pytest.mark.parametrize("spec", [QUARTIC, PotentialSpec("derivation_form", gamma=-2.0, kappa=0.5),
                                  PotentialSpec("linear_test")])
def test_derivatives_consistent(spec):
    z = np.linspace(-2.5, 3.5, 37)
    h = 1e-5
    d1 = (potential_eval(spec, z + h) - potential_eval(spec, z - h)) / (2 * h)
    d2 = (potential_eval(spec, z + h, 1) - potential_eval(spec, z - h, 1)) / (2 * h)
    assert np.allclose(d1, potential_eval(spec, z, 1), atol=1e-8)
    assert np.allclose(d2, potential_eval(spec, z, 2), atol=1e-8)


def test_potential_errors():
    with pytest.raises(ValueError):
        PotentialSpec("logarithmic")
    with pytest.raises(ValueError):
        PotentialSpec("derivation_form")
    with pytest.raises(ValueError):
        potential_eval(QUARTIC, 0.5, order=3)


def test_mobility_values():
    theta = 0.1
    m = MobilityModel(theta)
    assert m.M(-1.0) == 0.0 and m.M(2.0) == 2.0
    assert m.M_theta(theta / 2) == theta
    assert m.M_theta(2 * theta) == 2 * theta
    assert m.M_theta(theta) == theta
    assert m.M_theta(np.nextafter(theta, 1.0)) == pytest.approx(theta)


def test_regularized_needs_theta():
    with pytest.raises(ValueError):
        mobility(MobilityModel(0.0), 0.5, regularized=True)
    with pytest.raises(ValueError):
        entropy(MobilityModel(0.0), 0.5, regularized=True)
    with pytest.raises(ValueError):
        MobilityModel(1.0)


def test_entropy_values():
    m = MobilityModel(0.2)
    assert m.Phi(1.0) == 0.0
    assert m.Phi(math.e) == pytest.approx(1.0, rel=1e-15)
    assert m.Phi_theta(0.0) == pytest.approx(1 - 0.2 / 2)
    with pytest.raises(ValueError):
        m.Phi(0.0)
    with pytest.raises(ValueError):
        m.Phi(-1.0)


@pytest.mark.parametrize("theta", [0.5, 0.05, 1e-3])
def test_entropy_junction_smoothness(theta):
    m = MobilityModel(theta)
    below, above = np.nextafter(theta, 0.0), np.nextafter(theta, 1.0)
    assert m.Phi_theta(below) == pytest.approx(m.Phi_theta(above), rel=1e-12)
    # one-sided slopes from the closed-form branches: z/theta + ln theta - 1 and ln z
    assert theta / theta + math.log(theta) - 1 == pytest.approx(math.log(theta), abs=1e-15)
    h = 1e-4 * theta
    left = (m.Phi_theta(theta) - m.Phi_theta(theta - h)) / h
    right = (m.Phi_theta(theta + h) - m.Phi_theta(theta)) / h
    assert left == pytest.approx(right, abs=5e-4)


@given(st.floats(1e-3, 0.9), st.floats(1e-3, 10.0))
def test_entropy_second_derivative_is_inverse_mobility(theta, z):
    m = MobilityModel(theta)
    h = 1e-3 * min(z, theta)
    if abs(z - theta) < 4 * h:
        return
    zs = np.array([z - h, z, z + h])
    vals = m.Phi_theta(zs)
    fd = (vals[0] - 2 * vals[1] + vals[2]) / h**2
    exact = 1.0 / m.M_theta(z)
    roundoff = 8e-16 * max(abs(vals[1]), 1.0) / h**2
    assert fd == pytest.approx(exact, rel=1e-6, abs=roundoff)


@pytest.mark.parametrize("theta", [0.3, 0.05, 1e-3])
def test_entropy_ordering(theta):
    m = MobilityModel(theta)
    z = np.logspace(-6, 1, 400)
    phi, phit = m.Phi(z), m.Phi_theta(z)
    assert np.all(phit >= 0)
    assert np.all(phit <= phi + 1e-15)
    hi = z >= theta
    assert np.array_equal(phit[hi], phi[hi])


@given(st.floats(1e-4, 0.99))
def test_cutoff_mobility_converges(theta):
    m = MobilityModel(theta)
    z = np.linspace(-5, 5, 1001)
    assert np.max(np.abs(m.M_theta(z) - m.M(z))) <= theta + 1e-15
    assert np.all(m.M_theta(z) >= theta)


def test_chemical_potential_constant():
    g = Grid(2, 16)
    u = SpectralField(g, values=np.ones(g.shape))
    om = chemical_potential(u, QUARTIC, 1.7)
    assert np.allclose(om.values, 1.7, atol=1e-14)


def test_chemical_potential_null_mode():
    g = Grid(1, 32)
    u = SpectralField(g, values=np.sin(g.coordinates()[0]))
    om = chemical_potential(u, PotentialSpec("linear_test"), 1.0)
    assert np.max(np.abs(om.values)) < 1e-10


def test_chemical_potential_mode_oracle():
    # u = 1 + a sin 2x: W'(u) = a^3 sin^3 2x - eps a sin 2x with sin^3 = (3 sin 2x - sin 6x)/4,
    # and kappa (u + 2u'' + u'''') = kappa (1 + 9 a sin 2x)
    a, eps, kappa = 0.1, 0.2, 1.0
    g = Grid(1, 64)
    x = g.coordinates()[0]
    u = SpectralField(g, values=1 + a * np.sin(2 * x))
    c2 = 0.75 * a**3 - eps * a + 9 * kappa * a
    c6 = -0.25 * a**3
    expect = kappa + c2 * np.sin(2 * x) + c6 * np.sin(6 * x)
    om = chemical_potential(u, PotentialSpec("quartic_example", epsilon=eps), kappa)
    assert np.max(np.abs(om.values - expect)) <= 1e-8


def test_free_energy_constant():
    for dim in (1, 2, 3):
        g = Grid(dim, 8)
        c = 0.7
        u = SpectralField(g, values=np.full(g.shape, c))
        expect = (2 * math.pi) ** dim * (potential_eval(QUARTIC, c) + 1.3 * c**2 / 2)
        assert free_energy(u, QUARTIC, 1.3) == pytest.approx(expect, rel=1e-13)
        assert constant_state_energy(g, c, QUARTIC, 1.3) == pytest.approx(expect, rel=1e-13)


def test_free_energy_null_mode():
    g = Grid(1, 32)
    u = SpectralField(g, values=np.sin(g.coordinates()[0]))
    assert abs(free_energy(u, PotentialSpec("linear_test"), 1.0)) < 1e-13


def test_free_energy_moment_oracle():
    # u = 1 + a sin x, eps = 0.2, kappa = 1.  Moments over one period:
    #   int sin^2 = pi, int sin^4 = 3 pi / 4
    # int W = a^4/4 * 3pi/4 - eps/2 * a^2 pi
    # quadratic part: 1/2 (2 pi + a^2 pi) - a^2 pi + 1/2 a^2 pi = pi
    a, eps = 0.3, 0.2
    expect = a**4 / 4 * 3 * math.pi / 4 - eps / 2 * a**2 * math.pi + math.pi
    g = Grid(1, 64)
    u = SpectralField(g, values=1 + a * np.sin(g.coordinates()[0]))
    assert free_energy(u, PotentialSpec("quartic_example", epsilon=eps), 1.0) == pytest.approx(expect, abs=1e-10)


@given(st.integers(0, 2**32 - 1))
def test_variational_derivative(seed):
    rng = np.random.default_rng(seed)
    g = Grid(2, 16)
    u = SpectralField(g, values=1 + band_limited(rng, g, 3, 0.2))
    v = SpectralField(g, values=band_limited(rng, g, 3))
    h = 1e-4
    fd = (free_energy(u + v * h, QUARTIC, 1.0) - free_energy(u - v * h, QUARTIC, 1.0)) / (2 * h)
    exact = inner_product(chemical_potential(u, QUARTIC, 1.0), v)
    assert fd == pytest.approx(exact, rel=1e-6, abs=1e-8)


def test_variational_order_two():
    for e1, e2 in variational_errors(pairs=5, seed=99):
        assert 1.8 <= math.log10(e1 / e2) <= 2.2
